#include "qcl/couplingflow.hpp"

#include <cmath>

namespace qcl {

namespace {

long ipow(long b, int e)
{
    long r = 1;
    for (int k = 0; k < e; ++k) r *= b;
    return r;
}

double factorial(int n)
{
    double f = 1;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

// body j as rows, every other body flattened into columns
CMat body_matrix(const CVec& c, int n, int N, int j)
{
    const long outer = ipow(n, j), inner = ipow(n, N - 1 - j);
    CMat X(n, outer * inner);
    for (long a = 0; a < outer; ++a)
        for (int i = 0; i < n; ++i)
            for (long b = 0; b < inner; ++b) X(i, a * inner + b) = c[(a * n + i) * inner + b];
    return X;
}

}  // namespace

CMat body_marginal(const CVec& coeffs, int n_x, int N, int j)
{
    require(j >= 0 && j < N, "body index out of range");
    require(coeffs.size() == ipow(n_x, N), "coefficients do not match the tensor grid");
    CMat X = body_matrix(coeffs, n_x, N, j);
    return X * X.adjoint();
}

NBodyMixture NBodyMixture::toeplitz(const SpaceGrid& g, int N, double hbar, const std::vector<Particle>& nodes)
{
    g.validate();
    require(N >= 1, "N must be positive");
    require(!nodes.empty(), "mixture needs nodes");
    double m = 0;
    for (const auto& p : nodes) m += p.w;
    require(std::abs(m - 1) <= 1e-9, "node weights must sum to one");
    const long dim = ipow(g.n, N);
    if (dim > kNBodyAmplitudeBudget) throw PreconditionError("N-body grid exceeds the memory budget");

    NBodyMixture mix;
    mix.grid = g;
    mix.N = N;
    mix.hbar = hbar;
    mix.nodes = nodes;
    std::vector<double> xs, xis;
    for (const auto& p : nodes) {
        check_coherent_support(g, hbar, p.x, p.xi);
        xs.push_back(p.x);
        xis.push_back(p.xi);
    }
    const CMat Z = coherent_columns(g, hbar, xs, xis);
    const int K = static_cast<int>(nodes.size());

    std::vector<int> idx(N, 0);
    while (true) {
        mix.reps.push_back(idx);
        double w = 1, denom = 1;
        int run = 1;
        for (int j = 0; j < N; ++j) {
            w *= nodes[idx[j]].w;
            if (j > 0 && idx[j] == idx[j - 1])
                ++run;
            else {
                denom *= factorial(run);
                run = 1;
            }
        }
        denom *= factorial(run);
        mix.weight.push_back(w);
        mix.orbit.push_back(factorial(N) / denom);
        // next non-decreasing tuple
        int k = N - 1;
        while (k >= 0 && idx[k] == K - 1) --k;
        if (k < 0) break;
        ++idx[k];
        for (int j = k + 1; j < N; ++j) idx[j] = idx[k];
    }
    if (static_cast<double>(dim) * mix.reps.size() > double(1L << 24))
        throw PreconditionError("coherent mixture exceeds the memory budget");

    mix.states.resize(dim, static_cast<Eigen::Index>(mix.reps.size()));
    for (std::size_t r = 0; r < mix.reps.size(); ++r) {
        CVec c = Z.col(mix.reps[r][0]);
        for (int j = 1; j < N; ++j) {
            const auto f = Z.col(mix.reps[r][j]);
            CVec next(c.size() * f.size());
            for (Eigen::Index a = 0; a < c.size(); ++a) next.segment(a * f.size(), f.size()) = c[a] * f;
            c = std::move(next);
        }
        mix.states.col(static_cast<Eigen::Index>(r)) = c;
    }
    return mix;
}

void NBodyMixture::advance(const NBodyPropagator& prop, int steps)
{
    require(prop.dim() == states.rows(), "propagator does not match the mixture");
    for (int s = 0; s < steps; ++s) prop.step(states);
    t += steps * prop.dt();
}

CMat NBodyMixture::one_body_marginal() const
{
    CMat M = CMat::Zero(grid.n, grid.n);
    for (Eigen::Index r = 0; r < states.cols(); ++r) {
        const double s = weight[r] * orbit[r] / N;
        const CVec c = states.col(r);
        for (int j = 0; j < N; ++j) M += s * body_marginal(c, grid.n, N, j);
    }
    return 0.5 * (M + M.adjoint());
}

double NBodyMixture::trace() const
{
    double t = 0;
    for (Eigen::Index r = 0; r < states.cols(); ++r) t += weight[r] * orbit[r] * states.col(r).squaredNorm();
    return t;
}

double nbody_moment_functional(const NBodyMixture& mix, const NBodyPropagator& prop,
                               const std::vector<std::vector<std::pair<double, double>>>& classical)
{
    require(classical.size() == mix.reps.size(), "one classical tuple per sorted tuple expected");
    double D = 0;
    for (Eigen::Index r = 0; r < mix.states.cols(); ++r) {
        const CVec c = mix.states.col(r);
        const double tr = c.squaredNorm();
        double s = 0;
        for (int j = 0; j < mix.N; ++j) {
            auto m = prop.body_moments(c, j);
            CostMoments cm{tr, m[0], m[1], m[2], m[3]};
            s += cm.pair(classical[r][j].first, classical[r][j].second);
        }
        D += mix.weight[r] * mix.orbit[r] * s / mix.N;
    }
    return D;
}

double nbody_moment_functional_marginal(const NBodyMixture& mix,
                                        const std::vector<std::vector<std::pair<double, double>>>& classical)
{
    require(classical.size() == mix.reps.size(), "one classical tuple per sorted tuple expected");
    double D = 0;
    for (Eigen::Index r = 0; r < mix.states.cols(); ++r) {
        const CVec c = mix.states.col(r);
        double s = 0;
        for (int j = 0; j < mix.N; ++j) {
            CostMoments cm = cost_moments(mix.grid, mix.hbar, body_marginal(c, mix.grid.n, mix.N, j));
            s += cm.pair(classical[r][j].first, classical[r][j].second);
        }
        D += mix.weight[r] * mix.orbit[r] * s / mix.N;
    }
    return D;
}

CouplingField nbody_marginal_coupling(const NBodyMixture& mix,
                                      const std::vector<std::vector<std::pair<double, double>>>& classical)
{
    require(classical.size() == mix.reps.size(), "one classical tuple per sorted tuple expected");
    CouplingField Q;
    Q.grid = mix.grid;
    Q.hbar = mix.hbar;
    for (Eigen::Index r = 0; r < mix.states.cols(); ++r) {
        const CVec c = mix.states.col(r);
        const double s = mix.weight[r] * mix.orbit[r] / mix.N;
        for (int j = 0; j < mix.N; ++j) {
            auto F = std::make_shared<const CMat>(body_matrix(c, mix.grid.n, mix.N, j));
            Q.blocks.push_back({classical[r][j].first, classical[r][j].second, s, F, s});
        }
    }
    return Q;
}

}  // namespace qcl
