#include "qcl/hilbert.hpp"

#include <cmath>
#include <sstream>

namespace qcl {

void check_coherent_support(const SpaceGrid& g, double hbar, double x, double xi)
{
    const double margin = 5.0 * std::sqrt(hbar);
    const double pmax = g.momentum_cutoff(hbar);
    if (x - margin < g.x_min || x + margin > g.x_max || std::abs(xi) + margin > pmax) {
        std::ostringstream os;
        os << "coherent state at (" << x << "," << xi << ") is within 5 sqrt(hbar) of the box edge";
        throw BoundaryError(os.str());
    }
}

CMat coherent_columns(const SpaceGrid& g, double hbar, const std::vector<double>& xs,
                      const std::vector<double>& xis)
{
    require(xs.size() == xis.size(), "coherent centre lists differ in length");
    require(hbar > 0, "hbar must be positive");
    const double pref = std::pow(kPi * hbar, -0.25) * std::sqrt(g.h());
    CMat Z(g.n, static_cast<Eigen::Index>(xs.size()));
    for (std::size_t k = 0; k < xs.size(); ++k)
        for (int i = 0; i < g.n; ++i) {
            double dy = g.x(i) - xs[k];
            double amp = pref * std::exp(-dy * dy / (2 * hbar));
            double ph = xis[k] * dy / hbar;
            Z(i, static_cast<Eigen::Index>(k)) = amp * cplx(std::cos(ph), std::sin(ph));
        }
    return Z;
}

WaveFunction coherent_state(double x, double xi, double hbar, const SpaceGrid& g)
{
    g.validate();
    require(hbar > 0, "hbar must be positive");
    check_coherent_support(g, hbar, x, xi);
    CMat Z = coherent_columns(g, hbar, {x}, {xi});
    return WaveFunction::from_coefficients(g, hbar, Z.col(0));
}

CMat toeplitz_factor(const std::vector<Particle>& nodes, double hbar, const SpaceGrid& g, bool check)
{
    std::vector<double> xs, xis, ws;
    for (const auto& p : nodes) {
        require(p.w >= 0, "Toeplitz weights must be nonnegative");
        if (p.w < 1e-14) continue;
        if (check) check_coherent_support(g, hbar, p.x, p.xi);
        xs.push_back(p.x);
        xis.push_back(p.xi);
        ws.push_back(p.w);
    }
    CMat Z = coherent_columns(g, hbar, xs, xis);
    for (Eigen::Index k = 0; k < Z.cols(); ++k) Z.col(k) *= std::sqrt(ws[k]);
    return Z;
}

DensityOperator toeplitz_quantize(const std::vector<Particle>& nodes, double hbar, const SpaceGrid& g)
{
    g.validate();
    require(hbar > 0, "hbar must be positive");
    double m = 0;
    for (const auto& p : nodes) m += p.w;
    require(std::abs(m - 1.0) <= 1e-9, "Toeplitz symbol is not normalized");
    CMat B = toeplitz_factor(nodes, hbar, g);
    return DensityOperator::from_factor(g, hbar, B);
}

DensityOperator toeplitz_quantize(const PhaseDensity& mu, double hbar, const SpaceGrid& g)
{
    mu.validate();
    const auto& pg = mu.grid;
    std::vector<Particle> nodes;
    for (int i = 0; i < pg.n_x; ++i)
        for (int j = 0; j < pg.n_xi; ++j) {
            double w = mu.weights[pg.index(i, j)];
            if (w >= 1e-14) nodes.push_back({pg.x_center(i), pg.xi_center(j), w});
        }
    // skipped cells are below 1e-14 each; renormalize what is kept
    double kept = 0;
    for (const auto& p : nodes) kept += p.w;
    for (auto& p : nodes) p.w /= kept;
    return toeplitz_quantize(nodes, hbar, g);
}

}  // namespace qcl
