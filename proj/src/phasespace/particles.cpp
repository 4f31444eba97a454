#include "qcl/phasespace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace qcl {

std::vector<Particle> lattice_gaussian(double x0, double xi0, double sx, double sxi,
                                       int nodes_per_axis, double span)
{
    require(nodes_per_axis >= 1, "lattice needs at least one node per axis");
    require(sx >= 0 && sxi >= 0, "lattice widths must be nonnegative");
    const int m = nodes_per_axis;
    std::vector<double> u(m, 0.0);
    if (m > 1)
        for (int a = 0; a < m; ++a) u[a] = -span + 2.0 * span * a / (m - 1);
    std::vector<Particle> ps;
    double total = 0;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            double w = std::exp(-0.5 * (u[a] * u[a] + u[b] * u[b]));
            ps.push_back({x0 + sx * u[a], xi0 + sxi * u[b], w});
            total += w;
        }
    for (auto& p : ps) p.w /= total;
    return ps;
}

namespace {

// g_i = sum_j w_j grad V(x_i - x_j); uses oddness of grad V
void pair_field(const std::vector<double>& x, const std::vector<double>& w, const Potential& V,
                std::vector<double>& g)
{
    const std::size_t n = x.size();
    g.assign(n, 0.0);
    if (V.kind() == Potential::Kind::Zero) return;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double gij = V.gradient(x[i] - x[j]);
            g[i] += w[j] * gij;
            g[j] -= w[i] * gij;
        }
}

void split(const std::vector<Particle>& ps, std::vector<double>& x, std::vector<double>& w)
{
    x.resize(ps.size());
    w.resize(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        x[i] = ps[i].x;
        w[i] = ps[i].w;
    }
}

}  // namespace

double vlasov_energy(const std::vector<Particle>& ps, const Potential& V)
{
    double kin = 0, pot = 0;
    for (const auto& p : ps) kin += 0.5 * p.w * p.xi * p.xi;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        pot += 0.5 * ps[i].w * ps[i].w * V.value(0.0);
        for (std::size_t j = i + 1; j < ps.size(); ++j) pot += ps[i].w * ps[j].w * V.value(ps[i].x - ps[j].x);
    }
    return kin + pot;
}

void vlasov_step_inplace(std::vector<Particle>& ps, const Potential& V, double dt)
{
    require(dt > 0, "time step must be positive");
    std::vector<double> x, w, g;
    split(ps, x, w);
    pair_field(x, w, V, g);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        ps[i].xi -= 0.5 * dt * g[i];
        ps[i].x += dt * ps[i].xi;
        x[i] = ps[i].x;
    }
    pair_field(x, w, V, g);
    for (std::size_t i = 0; i < ps.size(); ++i) ps[i].xi -= 0.5 * dt * g[i];
}

PhaseDensity vlasov_step(const PhaseDensity& p, const Potential& V, double dt)
{
    require(p.particles.has_value(), "vlasov_step needs the particle representation");
    auto ps = *p.particles;
    vlasov_step_inplace(ps, V, dt);
    return PhaseDensity::from_particles(p.grid, std::move(ps));
}

double RhoPath::field(const Potential& V, std::size_t k, double x) const
{
    double f = 0;
    const auto& xs_k = xs[k];
    for (std::size_t j = 0; j < xs_k.size(); ++j) f += ws[j] * V.gradient(x - xs_k[j]);
    return f;
}

VlasovTrajectory vlasov_run(std::vector<Particle> ps, const Potential& V, double dt, int steps)
{
    require(dt > 0 && steps >= 0, "bad time stepping");
    VlasovTrajectory tr;
    std::vector<double> x, w, g;
    split(ps, x, w);
    tr.path.ws = w;
    auto record = [&](int k) {
        tr.path.times.push_back(k * dt);
        tr.path.xs.push_back(x);
        tr.snapshots.push_back(ps);
        tr.energy.push_back(vlasov_energy(ps, V));
        tr.m2.push_back(second_moment(ps));
    };
    record(0);
    pair_field(x, w, V, g);
    for (int k = 1; k <= steps; ++k) {
        for (std::size_t i = 0; i < ps.size(); ++i) {
            ps[i].xi -= 0.5 * dt * g[i];
            ps[i].x += dt * ps[i].xi;
            x[i] = ps[i].x;
        }
        pair_field(x, w, V, g);
        for (std::size_t i = 0; i < ps.size(); ++i) ps[i].xi -= 0.5 * dt * g[i];
        record(k);
    }
    return tr;
}

std::pair<double, double> characteristic_flow(double x0, double xi0, double s, double t,
                                              const RhoPath& path, const Potential& V)
{
    require(!path.times.empty(), "empty density path");
    const double t0 = path.times.front(), t1 = path.times.back();
    const double eps = 1e-12 * std::max(1.0, std::abs(t1));
    if (std::min(s, t) < t0 - eps || std::max(s, t) > t1 + eps)
        throw PreconditionError("flow time outside the stored density path");
    if (s == t) return {x0, xi0};
    const std::size_t nodes = path.times.size();
    require(nodes >= 2, "density path needs two nodes to integrate");
    const double step = (t1 - t0) / (nodes - 1);

    auto force = [&](double x, double tau) {
        double u = (tau - t0) / step;
        std::size_t k = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, double(nodes - 2)));
        double th = u - k;
        if (th < 1e-12) return path.field(V, k, x);
        if (th > 1 - 1e-12) return path.field(V, k + 1, x);
        return (1 - th) * path.field(V, k, x) + th * path.field(V, k + 1, x);
    };

    // breakpoints: s, every node strictly between, t
    std::vector<double> marks{s};
    double dir = t > s ? 1.0 : -1.0;
    for (std::size_t k = 0; k < nodes; ++k) {
        double tk = t0 + k * step;
        if (dir > 0 ? (tk > s + eps && tk < t - eps) : (tk < s - eps && tk > t + eps)) marks.push_back(tk);
    }
    if (dir < 0) std::sort(marks.begin() + 1, marks.end(), std::greater<double>());
    marks.push_back(t);

    double x = x0, xi = xi0;
    for (std::size_t m = 0; m + 1 < marks.size(); ++m) {
        double a = marks[m], b = marks[m + 1], h = b - a;
        xi -= 0.5 * h * force(x, a);
        x += h * xi;
        xi -= 0.5 * h * force(x, b);
    }
    return {x, xi};
}

void ClassicalEnsembleN::validate(double mass_tol) const
{
    require(N >= 1, "ensemble needs N >= 1");
    require(x.size() == w.size() * N && xi.size() == x.size(), "ensemble storage mismatch");
    double m = 0;
    for (double v : w) {
        require(v >= 0, "negative sample weight");
        m += v;
    }
    require(std::abs(m - 1.0) <= mass_tol, "ensemble weights do not sum to one");
}

ClassicalEnsembleN ClassicalEnsembleN::product(const std::vector<Particle>& one_body, int N)
{
    require(N >= 1 && !one_body.empty(), "product ensemble needs N >= 1 and nodes");
    ClassicalEnsembleN e;
    e.N = N;
    const std::size_t K = one_body.size();
    std::vector<std::size_t> idx(N, 0);
    while (true) {
        double w = 1;
        for (int k = 0; k < N; ++k) {
            const auto& p = one_body[idx[k]];
            e.x.push_back(p.x);
            e.xi.push_back(p.xi);
            w *= p.w;
        }
        e.w.push_back(w);
        int k = N - 1;
        while (k >= 0 && ++idx[k] == K) idx[k--] = 0;
        if (k < 0) break;
    }
    return e;
}

ClassicalEnsembleN ClassicalEnsembleN::sampled_gaussian(int N, std::size_t count, double x0, double xi0,
                                                        double sx, double sxi, std::uint64_t seed)
{
    require(N >= 1 && count >= 1, "sampled ensemble needs N >= 1 and samples");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gx(x0, sx), gxi(xi0, sxi);
    std::vector<int> sigma(N);
    std::iota(sigma.begin(), sigma.end(), 0);
    std::vector<std::vector<int>> perms;
    do perms.push_back(sigma);
    while (std::next_permutation(sigma.begin(), sigma.end()));

    ClassicalEnsembleN e;
    e.N = N;
    const double wt = 1.0 / (double(count) * perms.size());
    std::vector<double> bx(N), bxi(N);
    for (std::size_t s = 0; s < count; ++s) {
        for (int k = 0; k < N; ++k) {
            bx[k] = gx(rng);
            bxi[k] = gxi(rng);
        }
        for (const auto& p : perms) {
            for (int k = 0; k < N; ++k) {
                e.x.push_back(bx[p[k]]);
                e.xi.push_back(bxi[p[k]]);
            }
            e.w.push_back(wt);
        }
    }
    return e;
}

ClassicalEnsembleN ClassicalEnsembleN::permuted(const std::vector<int>& sigma) const
{
    require(static_cast<int>(sigma.size()) == N, "permutation has wrong length");
    ClassicalEnsembleN e = *this;
    for (std::size_t s = 0; s < n_samples(); ++s)
        for (int k = 0; k < N; ++k) {
            e.x[s * N + k] = x[s * N + sigma[k]];
            e.xi[s * N + k] = xi[s * N + sigma[k]];
        }
    return e;
}

ClassicalEnsembleN ClassicalEnsembleN::merged() const
{
    std::vector<std::size_t> order(n_samples());
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](std::size_t s) {
        std::vector<double> k(x.begin() + s * N, x.begin() + (s + 1) * N);
        k.insert(k.end(), xi.begin() + s * N, xi.begin() + (s + 1) * N);
        return k;
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    ClassicalEnsembleN e;
    e.N = N;
    std::vector<double> last;
    for (std::size_t s : order) {
        auto k = key(s);
        if (!e.w.empty() && k == last) {
            e.w.back() += w[s];
            continue;
        }
        e.x.insert(e.x.end(), x.begin() + s * N, x.begin() + (s + 1) * N);
        e.xi.insert(e.xi.end(), xi.begin() + s * N, xi.begin() + (s + 1) * N);
        e.w.push_back(w[s]);
        last = std::move(k);
    }
    return e;
}

double liouville_energy(const ClassicalEnsembleN& e, const Potential& V, std::size_t s)
{
    const int N = e.N;
    double kin = 0, pot = 0;
    for (int j = 0; j < N; ++j) {
        double xi = e.xi[s * N + j];
        kin += 0.5 * xi * xi;
        for (int k = 0; k < N; ++k) pot += V.value(e.x[s * N + j] - e.x[s * N + k]);
    }
    return kin + pot / (2.0 * N);
}

namespace {

void liouville_kick(ClassicalEnsembleN& e, const Potential& V, double h)
{
    const int N = e.N;
    for (std::size_t s = 0; s < e.n_samples(); ++s)
        for (int k = 0; k < N; ++k) {
            double f = 0;
            for (int l = 0; l < N; ++l) f += V.gradient(e.x[s * N + k] - e.x[s * N + l]);
            e.xi[s * N + k] -= h * f / N;
        }
}

}  // namespace

void liouville_step_inplace(ClassicalEnsembleN& e, const Potential& V, double dt)
{
    require(dt > 0, "time step must be positive");
    liouville_kick(e, V, 0.5 * dt);
    for (std::size_t i = 0; i < e.x.size(); ++i) e.x[i] += dt * e.xi[i];
    liouville_kick(e, V, 0.5 * dt);
}

ClassicalEnsembleN liouville_step(const ClassicalEnsembleN& e, const Potential& V, double dt)
{
    ClassicalEnsembleN out = e;
    liouville_step_inplace(out, V, dt);
    return out;
}

ClassicalEnsembleN marginal_classical(const ClassicalEnsembleN& e, int n)
{
    require(n >= 1 && n <= e.N, "marginal order out of range");
    if (n == e.N) return e;
    ClassicalEnsembleN m;
    m.N = n;
    m.w = e.w;
    for (std::size_t s = 0; s < e.n_samples(); ++s) {
        m.x.insert(m.x.end(), e.x.begin() + s * e.N, e.x.begin() + s * e.N + n);
        m.xi.insert(m.xi.end(), e.xi.begin() + s * e.N, e.xi.begin() + s * e.N + n);
    }
    return m;
}

std::vector<Particle> one_body_particles(const ClassicalEnsembleN& e)
{
    auto m = marginal_classical(e, 1);
    std::vector<Particle> ps(m.n_samples());
    for (std::size_t s = 0; s < ps.size(); ++s) ps[s] = {m.x[s], m.xi[s], m.w[s]};
    return ps;
}

}  // namespace qcl
