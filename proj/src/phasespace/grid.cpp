#include "qcl/phasespace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qcl {

void PhaseGrid::validate() const
{
    require(d == 1, "only d=1 phase grids are supported");
    require(x_max > x_min && xi_max > xi_min, "phase grid box is empty");
    require(n_x >= 2 && n_xi >= 2, "phase grid needs at least 2 cells per axis");
}

double PhaseDensity::total_mass() const
{
    if (particles) {
        double m = 0;
        for (const auto& p : *particles) m += p.w;
        return m;
    }
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

void PhaseDensity::validate(double mass_tol) const
{
    grid.validate();
    require(static_cast<int>(weights.size()) == grid.cells(), "weights do not match grid");
    for (double w : weights) require(w >= 0 && std::isfinite(w), "negative or non-finite cell weight");
    double m = std::accumulate(weights.begin(), weights.end(), 0.0);
    require(std::abs(m - 1.0) <= mass_tol, "phase density is not normalized");
    if (particles) {
        double mp = 0;
        for (const auto& p : *particles) {
            require(p.w >= 0, "negative particle weight");
            mp += p.w;
        }
        require(std::abs(mp - m) <= mass_tol, "particle and grid masses disagree");
    }
}

namespace {

// mass of N(mu, s^2) on [a,b]
double interval_mass(double a, double b, double mu, double s)
{
    const double r = 1.0 / (s * std::sqrt(2.0));
    double ua = (a - mu) * r, ub = (b - mu) * r;
    if (ua >= 0) return 0.5 * (std::erfc(ua) - std::erfc(ub));
    if (ub <= 0) return 0.5 * (std::erfc(-ub) - std::erfc(-ua));
    return 0.5 * (std::erf(ub) - std::erf(ua));
}

}  // namespace

PhaseDensity PhaseDensity::gaussian(const PhaseGrid& g, double x0, double xi0, double sx, double sxi)
{
    g.validate();
    require(sx > 0 && sxi > 0, "gaussian widths must be positive");
    PhaseDensity p;
    p.grid = g;
    p.weights.assign(g.cells(), 0.0);
    std::vector<double> mx(g.n_x), mxi(g.n_xi);
    for (int i = 0; i < g.n_x; ++i)
        mx[i] = interval_mass(g.x_min + i * g.hx(), g.x_min + (i + 1) * g.hx(), x0, sx);
    for (int j = 0; j < g.n_xi; ++j)
        mxi[j] = interval_mass(g.xi_min + j * g.hxi(), g.xi_min + (j + 1) * g.hxi(), xi0, sxi);
    double total = 0;
    for (int i = 0; i < g.n_x; ++i)
        for (int j = 0; j < g.n_xi; ++j) {
            p.weights[g.index(i, j)] = mx[i] * mxi[j];
            total += mx[i] * mxi[j];
        }
    require(total > 0, "gaussian has no mass on the grid");
    for (double& w : p.weights) w /= total;
    return p;
}

PhaseDensity PhaseDensity::point_mass(const PhaseGrid& g, double x, double xi)
{
    g.validate();
    int i = static_cast<int>(std::floor((x - g.x_min) / g.hx()));
    int j = static_cast<int>(std::floor((xi - g.xi_min) / g.hxi()));
    require(i >= 0 && i < g.n_x && j >= 0 && j < g.n_xi, "point mass outside grid");
    PhaseDensity p;
    p.grid = g;
    p.weights.assign(g.cells(), 0.0);
    p.weights[g.index(i, j)] = 1.0;
    return p;
}

PhaseDensity PhaseDensity::from_particles(const PhaseGrid& g, std::vector<Particle> ps)
{
    g.validate();
    PhaseDensity p;
    p.grid = g;
    p.weights.assign(g.cells(), 0.0);
    const int cut = 3;
    std::vector<double> kx(2 * cut + 1), kxi(2 * cut + 1);
    for (const auto& q : ps) {
        double u = (q.x - g.x_min) / g.hx() - 0.5;
        double v = (q.xi - g.xi_min) / g.hxi() - 0.5;
        int iu = static_cast<int>(std::lround(u)), iv = static_cast<int>(std::lround(v));
        double sx = 0, sxi = 0;
        for (int a = -cut; a <= cut; ++a) {
            int i = iu + a, j = iv + a;
            kx[a + cut] = (i >= 0 && i < g.n_x) ? std::exp(-0.5 * (i - u) * (i - u)) : 0.0;
            kxi[a + cut] = (j >= 0 && j < g.n_xi) ? std::exp(-0.5 * (j - v) * (j - v)) : 0.0;
            sx += kx[a + cut];
            sxi += kxi[a + cut];
        }
        if (q.w == 0) continue;
        if (sx == 0 || sxi == 0) throw BoundaryError("particle deposited outside the phase grid");
        for (int a = -cut; a <= cut; ++a) {
            if (kx[a + cut] == 0) continue;
            for (int b = -cut; b <= cut; ++b) {
                if (kxi[b + cut] == 0) continue;
                p.weights[g.index(iu + a, iv + b)] += q.w * kx[a + cut] * kxi[b + cut] / (sx * sxi);
            }
        }
    }
    p.particles = std::move(ps);
    return p;
}

double mean_field_force(const PhaseDensity& p, const Potential& V, double x)
{
    require(std::abs(p.total_mass() - 1.0) <= 1e-9, "mean field needs a normalized density");
    if (p.particles) return mean_field_force(*p.particles, V, x);
    const auto& g = p.grid;
    double f = 0;
    for (int i = 0; i < g.n_x; ++i) {
        double rho = 0;
        for (int j = 0; j < g.n_xi; ++j) rho += p.weights[g.index(i, j)];
        if (rho != 0) f += rho * V.gradient(x - g.x_center(i));
    }
    return f;
}

double mean_field_force(const std::vector<Particle>& ps, const Potential& V, double x)
{
    double f = 0;
    for (const auto& q : ps) f += q.w * V.gradient(x - q.x);
    return f;
}

double second_moment(const PhaseDensity& p)
{
    if (p.particles) return second_moment(*p.particles);
    const auto& g = p.grid;
    double m = 0;
    for (int i = 0; i < g.n_x; ++i)
        for (int j = 0; j < g.n_xi; ++j) {
            double x = g.x_center(i), xi = g.xi_center(j);
            m += p.weights[g.index(i, j)] * 0.5 * (x * x + xi * xi);
        }
    return m;
}

double second_moment(const std::vector<Particle>& ps)
{
    double m = 0;
    for (const auto& q : ps) m += q.w * 0.5 * (q.x * q.x + q.xi * q.xi);
    return m;
}

double boundary_mass(const PhaseGrid& g, const std::vector<Particle>& ps, int margin)
{
    double lo_x = g.x_min + margin * g.hx(), hi_x = g.x_max - margin * g.hx();
    double lo_xi = g.xi_min + margin * g.hxi(), hi_xi = g.xi_max - margin * g.hxi();
    double m = 0;
    for (const auto& q : ps)
        if (q.x < lo_x || q.x > hi_x || q.xi < lo_xi || q.xi > hi_xi) m += q.w;
    return m;
}

}  // namespace qcl
