#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qcl/common.hpp"
#include "qcl/phasespace.hpp"

namespace qcl {

// Nodes x_i = x_min + i h, i < n; the basis vector of node i is delta_i / sqrt(h),
// so operator matrices act on coefficient vectors c_i = psi(x_i) sqrt(h).
struct SpaceGrid {
    int d = 1;
    double x_min = -1, x_max = 1;
    int n = 2;
    bool periodic = true;

    void validate() const;
    double h() const { return (x_max - x_min) / n; }
    double x(int i) const { return x_min + i * h(); }
    // centred DFT wavenumber of mode j in FFT order
    double k(int j) const;
    double momentum_cutoff(double hbar) const { return hbar * kPi / h(); }
    bool operator==(const SpaceGrid&) const = default;
};

struct WaveFunction {
    SpaceGrid grid;
    CVec amplitudes;  // psi(x_i)
    double hbar = 1;

    double norm() const;
    CVec coefficients() const;
    static WaveFunction from_coefficients(const SpaceGrid& g, double hbar, const CVec& c);
};

struct DensityOperator {
    SpaceGrid grid;
    CMat matrix;
    double hbar = 1;
    std::optional<CVec> pure_factor;  // coefficient vector when rank one

    void validate(double tol_trace = 1e-10) const;
    double trace() const { return matrix.trace().real(); }
    double purity() const;
    Vec eigenvalues() const;

    static DensityOperator pure(const WaveFunction& psi);
    static DensityOperator from_factor(const SpaceGrid& g, double hbar, const CMat& B);
};

// Tensor product of N copies of the same one-body grid; index (i_1..i_N) is
// flattened row-major, body 1 most significant.
struct DensityOperatorN {
    SpaceGrid grid;
    int N = 1;
    CMat matrix;
    double hbar = 1;

    void validate(double tol = 1e-10) const;
    double trace() const { return matrix.trace().real(); }
    static DensityOperatorN tensor_power(const DensityOperator& rho, int N);
    static DensityOperatorN from_pure(const SpaceGrid& g, int N, double hbar, const CVec& coeffs);
};

// --- spectral building blocks ---
Vec positions(const SpaceGrid& g);
// P = F^* diag(hbar k) F as a dense Hermitian matrix
CMat momentum_matrix(const SpaceGrid& g, double hbar);
// applies P^power column-wise, in place
void apply_momentum(const SpaceGrid& g, double hbar, CMat& cols, int power = 1);
double momentum_expectation(const SpaceGrid& g, double hbar, const CVec& c, int power = 1);

// --- coherent states and Toeplitz quantization ---
WaveFunction coherent_state(double x, double xi, double hbar, const SpaceGrid& g);
// columns are coefficient vectors of |z_k>, no boundary check
CMat coherent_columns(const SpaceGrid& g, double hbar, const std::vector<double>& xs,
                      const std::vector<double>& xis);
void check_coherent_support(const SpaceGrid& g, double hbar, double x, double xi);

// R = sum_k w_k |z_k><z_k|, one projector per occupied cell (mass >= 1e-14)
DensityOperator toeplitz_quantize(const PhaseDensity& mu, double hbar, const SpaceGrid& g);
DensityOperator toeplitz_quantize(const std::vector<Particle>& nodes, double hbar, const SpaceGrid& g);
// sqrt(w_k)|z_k> columns of the same sum
CMat toeplitz_factor(const std::vector<Particle>& nodes, double hbar, const SpaceGrid& g, bool check = true);

// (2 pi hbar)^{-1} sum_cells |cell| symbol(z) |z><z| over a phase grid
template <class F>
CMat toeplitz_operator(F&& symbol, const PhaseGrid& pg, double hbar, const SpaceGrid& g);

// --- phase-space transforms ---
struct GridFunction {
    std::vector<double> xs, xis;
    Mat values;  // xs.size() x xis.size()
    double dx = 0, dxi = 0;
    double integral() const { return values.sum() * dx * dxi; }
    double min() const { return values.minCoeff(); }
};

// Wigner function on (space nodes) x (xi nodes of pg)
GridFunction wigner(const DensityOperator& R, const PhaseGrid& pg);
// (2 pi hbar)^{-1} <z|R|z> at the cell centres, before clipping
Mat husimi_values(const DensityOperator& R, const PhaseGrid& pg);
// heat-smoothed Wigner route, evaluated at the cell centres
Mat husimi_smoothing(const DensityOperator& R, const PhaseGrid& pg);
double husimi_smoothing_at(const DensityOperator& R, double x, double xi);
// cell masses, negatives above -1e-10 clipped; throws below that
PhaseDensity husimi(const DensityOperator& R, const PhaseGrid& pg);

struct PairingResult {
    double operator_side = 0;  // trace(OP^T(mu) R)
    double husimi_side = 0;    // sum_k m_k W~[R](z_k)
    double discrepancy() const { return std::abs(operator_side - husimi_side); }
};
PairingResult trace_pairing(const std::vector<Particle>& mu, const DensityOperator& R);

// --- N-body structure ---
DensityOperatorN partial_trace(const DensityOperatorN& R, int n);
DensityOperator to_one_body(const DensityOperatorN& R);
DensityOperatorN permute(const DensityOperatorN& R, const std::vector<int>& sigma);
// flat index map I -> sigma.I for N bodies of n_x nodes
std::vector<int> permutation_index(int n_x, int N, const std::vector<int>& sigma);

// --- serialization ---
void write_operator(const std::string& path, const DensityOperator& R);
DensityOperator read_operator(const std::string& path);
void write_eigenvalues_csv(const std::string& path, const DensityOperator& R);

// template definition
template <class F>
CMat toeplitz_operator(F&& symbol, const PhaseGrid& pg, double hbar, const SpaceGrid& g)
{
    pg.validate();
    std::vector<double> xs, xis, wts;
    for (int i = 0; i < pg.n_x; ++i)
        for (int j = 0; j < pg.n_xi; ++j) {
            double s = symbol(pg.x_center(i), pg.xi_center(j));
            if (s == 0) continue;
            xs.push_back(pg.x_center(i));
            xis.push_back(pg.xi_center(j));
            wts.push_back(s * pg.cell_volume() / (2 * kPi * hbar));
        }
    CMat Z = coherent_columns(g, hbar, xs, xis);
    CMat WZ = Z;
    for (Eigen::Index k = 0; k < Z.cols(); ++k) WZ.col(k) *= wts[k];
    return WZ * Z.adjoint();
}

}  // namespace qcl
