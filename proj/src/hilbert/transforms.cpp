#include "qcl/hilbert.hpp"

#include <cmath>

namespace qcl {

GridFunction wigner(const DensityOperator& R, const PhaseGrid& pg)
{
    const auto& g = R.grid;
    const int n = g.n;
    const double h = g.h(), hbar = R.hbar;
    GridFunction W;
    W.xs.resize(n);
    for (int a = 0; a < n; ++a) W.xs[a] = g.x(a);
    W.xis.resize(pg.n_xi);
    for (int j = 0; j < pg.n_xi; ++j) W.xis[j] = pg.xi_center(j);
    W.dx = h;
    W.dxi = pg.hxi();
    W.values = Mat::Zero(n, pg.n_xi);
    // r(x+u/2, x-u/2) sampled at lags u = 2 m h
    for (int a = 0; a < n; ++a) {
        const int M = std::min(a, n - 1 - a);
        for (int j = 0; j < pg.n_xi; ++j) {
            const double xi = W.xis[j];
            double s = R.matrix(a, a).real();
            for (int m = 1; m <= M; ++m) {
                double ph = -2.0 * xi * m * h / hbar;
                cplx e(std::cos(ph), std::sin(ph));
                // m and -m terms are complex conjugates
                s += 2.0 * (e * R.matrix(a + m, a - m)).real();
            }
            W.values(a, j) = s / (kPi * hbar);
        }
    }
    return W;
}

Mat husimi_values(const DensityOperator& R, const PhaseGrid& pg)
{
    pg.validate();
    std::vector<double> xs, xis;
    xs.reserve(pg.cells());
    xis.reserve(pg.cells());
    for (int i = 0; i < pg.n_x; ++i)
        for (int j = 0; j < pg.n_xi; ++j) {
            xs.push_back(pg.x_center(i));
            xis.push_back(pg.xi_center(j));
        }
    CMat Z = coherent_columns(R.grid, R.hbar, xs, xis);
    CMat RZ = R.matrix * Z;
    Mat out(pg.n_x, pg.n_xi);
    const double pref = 1.0 / (2 * kPi * R.hbar);
    for (int i = 0; i < pg.n_x; ++i)
        for (int j = 0; j < pg.n_xi; ++j) {
            Eigen::Index c = pg.index(i, j);
            out(i, j) = pref * Z.col(c).dot(RZ.col(c)).real();
        }
    return out;
}

namespace {

// Lag profile of the Wigner kernel after heat smoothing in x:
// A_l(x) = sum_{a-b=l} G(x - (x_a+x_b)/2) R_ab with G the kernel of exp(hbar/4 d_x^2).
CVec smoothed_lag_profile(const DensityOperator& R, double x)
{
    const auto& g = R.grid;
    const int n = g.n;
    const double h = g.h(), hbar = R.hbar;
    const double gpref = 1.0 / std::sqrt(kPi * hbar);
    Vec G(2 * n - 1);
    for (int s = 0; s < 2 * n - 1; ++s) {
        double mid = g.x_min + 0.5 * s * h;
        G[s] = gpref * std::exp(-(x - mid) * (x - mid) / hbar);
    }
    CVec A = CVec::Zero(2 * n - 1);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) A[a - b + n - 1] += G[a + b] * R.matrix(a, b);
    return A;
}

// exp(hbar/4 d_xi^2) acting on exp(-i xi u / hbar) multiplies by exp(-u^2 / (4 hbar))
double lag_to_xi(const CVec& A, const DensityOperator& R, double xi)
{
    const int n = R.grid.n;
    const double h = R.grid.h(), hbar = R.hbar;
    double s = 0;
    for (int l = -(n - 1); l <= n - 1; ++l) {
        double u = l * h;
        double damp = std::exp(-u * u / (4 * hbar));
        if (damp < 1e-300) continue;
        double ph = -xi * u / hbar;
        s += damp * (cplx(std::cos(ph), std::sin(ph)) * A[l + n - 1]).real();
    }
    return s * h / (2 * kPi * hbar);
}

}  // namespace

Mat husimi_smoothing(const DensityOperator& R, const PhaseGrid& pg)
{
    pg.validate();
    Mat out(pg.n_x, pg.n_xi);
    for (int i = 0; i < pg.n_x; ++i) {
        CVec A = smoothed_lag_profile(R, pg.x_center(i));
        for (int j = 0; j < pg.n_xi; ++j) out(i, j) = lag_to_xi(A, R, pg.xi_center(j));
    }
    return out;
}

double husimi_smoothing_at(const DensityOperator& R, double x, double xi)
{
    return lag_to_xi(smoothed_lag_profile(R, x), R, xi);
}

PhaseDensity husimi(const DensityOperator& R, const PhaseGrid& pg)
{
    Mat v = husimi_values(R, pg);
    if (v.minCoeff() < -1e-10) throw NumericalError("Husimi transform below -1e-10");
    PhaseDensity p;
    p.grid = pg;
    p.weights.assign(pg.cells(), 0.0);
    for (int i = 0; i < pg.n_x; ++i)
        for (int j = 0; j < pg.n_xi; ++j) p.weights[pg.index(i, j)] = std::max(v(i, j), 0.0) * pg.cell_volume();
    return p;
}

PairingResult trace_pairing(const std::vector<Particle>& mu, const DensityOperator& R)
{
    std::vector<double> xs, xis;
    for (const auto& p : mu) {
        xs.push_back(p.x);
        xis.push_back(p.xi);
    }
    CMat Z = coherent_columns(R.grid, R.hbar, xs, xis);
    CMat WZ = Z;
    for (std::size_t k = 0; k < mu.size(); ++k) WZ.col(k) *= mu[k].w / (2 * kPi * R.hbar);
    CMat op = WZ * Z.adjoint();
    PairingResult res;
    res.operator_side = (op * R.matrix).trace().real();
    for (const auto& p : mu) res.husimi_side += p.w * husimi_smoothing_at(R, p.x, p.xi);
    return res;
}

}  // namespace qcl
