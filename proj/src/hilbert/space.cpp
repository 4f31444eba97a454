#include "qcl/hilbert.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace qcl {

void SpaceGrid::validate() const
{
    require(d == 1, "only d=1 space grids are supported");
    require(x_max > x_min, "space grid box is empty");
    require(n >= 2 && (n & (n - 1)) == 0, "space grid size must be a power of two");
}

double SpaceGrid::k(int j) const
{
    int m = j < n / 2 ? j : j - n;
    return 2 * kPi * m / (x_max - x_min);
}

double WaveFunction::norm() const
{
    return std::sqrt(amplitudes.squaredNorm() * grid.h());
}

CVec WaveFunction::coefficients() const
{
    return amplitudes * std::sqrt(grid.h());
}

WaveFunction WaveFunction::from_coefficients(const SpaceGrid& g, double hbar, const CVec& c)
{
    require(c.size() == g.n, "coefficient vector does not match grid");
    return WaveFunction{g, c / std::sqrt(g.h()), hbar};
}

void DensityOperator::validate(double tol_trace) const
{
    grid.validate();
    require(hbar > 0, "hbar must be positive");
    require(matrix.rows() == grid.n && matrix.cols() == grid.n, "operator does not match grid");
    double nrm = matrix.norm();
    require((matrix - matrix.adjoint()).norm() <= 1e-12 * std::max(nrm, 1.0), "operator is not Hermitian");
    require(eigenvalues().minCoeff() >= -1e-10, "operator is not positive semidefinite");
    require(std::abs(trace() - 1.0) <= tol_trace, "operator trace is not one");
}

double DensityOperator::purity() const
{
    if (pure_factor) return std::pow(pure_factor->squaredNorm(), 2);
    return (matrix * matrix).trace().real();
}

Vec DensityOperator::eigenvalues() const
{
    Eigen::SelfAdjointEigenSolver<CMat> es(matrix, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

DensityOperator DensityOperator::pure(const WaveFunction& psi)
{
    CVec c = psi.coefficients();
    DensityOperator R{psi.grid, c * c.adjoint(), psi.hbar, c};
    return R;
}

DensityOperator DensityOperator::from_factor(const SpaceGrid& g, double hbar, const CMat& B)
{
    require(B.rows() == g.n, "factor does not match grid");
    DensityOperator R{g, B * B.adjoint(), hbar, std::nullopt};
    if (B.cols() == 1) R.pure_factor = B.col(0);
    return R;
}

void DensityOperatorN::validate(double tol) const
{
    grid.validate();
    Eigen::Index dim = 1;
    for (int k = 0; k < N; ++k) dim *= grid.n;
    require(matrix.rows() == dim && matrix.cols() == dim, "N-body operator has wrong dimension");
    double nrm = matrix.norm();
    require((matrix - matrix.adjoint()).norm() <= 1e-12 * std::max(nrm, 1.0), "operator is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMat> es(matrix, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() >= -1e-10, "operator is not positive semidefinite");
    require(std::abs(trace() - 1.0) <= tol, "operator trace is not one");
}

DensityOperatorN DensityOperatorN::tensor_power(const DensityOperator& rho, int N)
{
    require(N >= 1, "tensor power needs N >= 1");
    CMat M = rho.matrix;
    for (int k = 1; k < N; ++k) {
        CMat next(M.rows() * rho.matrix.rows(), M.cols() * rho.matrix.cols());
        for (Eigen::Index i = 0; i < M.rows(); ++i)
            for (Eigen::Index j = 0; j < M.cols(); ++j)
                next.block(i * rho.matrix.rows(), j * rho.matrix.cols(), rho.matrix.rows(), rho.matrix.cols()) =
                    M(i, j) * rho.matrix;
        M = std::move(next);
    }
    return DensityOperatorN{rho.grid, N, std::move(M), rho.hbar};
}

DensityOperatorN DensityOperatorN::from_pure(const SpaceGrid& g, int N, double hbar, const CVec& coeffs)
{
    return DensityOperatorN{g, N, coeffs * coeffs.adjoint(), hbar};
}

Vec positions(const SpaceGrid& g)
{
    Vec x(g.n);
    for (int i = 0; i < g.n; ++i) x[i] = g.x(i);
    return x;
}

CMat momentum_matrix(const SpaceGrid& g, double hbar)
{
    CMat P = CMat::Identity(g.n, g.n);
    apply_momentum(g, hbar, P, 1);
    // symmetrize away rounding
    return 0.5 * (P + P.adjoint());
}

void apply_momentum(const SpaceGrid& g, double hbar, CMat& cols, int power)
{
    require(cols.rows() == g.n, "columns do not match grid");
    const int n = g.n;
    const int batch = static_cast<int>(cols.cols());
    fft_forward(cols.data(), {n}, batch);
    Vec mult(n);
    for (int j = 0; j < n; ++j) mult[j] = std::pow(hbar * g.k(j), power) / n;
    for (int c = 0; c < batch; ++c) cols.col(c).array() *= mult.array();
    fft_backward(cols.data(), {n}, batch);
}

double momentum_expectation(const SpaceGrid& g, double hbar, const CVec& c, int power)
{
    CMat v = c;
    fft_forward(v.data(), {g.n}, 1);
    double s = 0;
    for (int j = 0; j < g.n; ++j) s += std::norm(v(j, 0)) * std::pow(hbar * g.k(j), power);
    return s / g.n;
}

}  // namespace qcl
