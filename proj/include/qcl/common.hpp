#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qcl {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Violated precondition on an argument (bad grid, negative mass, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Mass or spectral content reached the edge of the computational box.
class BoundaryError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

inline void require(bool ok, const std::string& what)
{
    if (!ok) throw PreconditionError(what);
}

constexpr double kPi = 3.14159265358979323846;

// In-place complex FFTs on contiguous batches. `dims` is the row-major shape
// of one transform, `batch` transforms are stored back to back.
// Both directions are unnormalized.
void fft_forward(cplx* data, const std::vector<int>& dims, int batch = 1);
void fft_backward(cplx* data, const std::vector<int>& dims, int batch = 1);

}  // namespace qcl
