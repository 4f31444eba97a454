#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "qcl/qcdist.hpp"

using namespace qcl;

namespace {

const SpaceGrid G{1, -8, 8, 128, true};

DiscreteMeasure nodes(const std::vector<Particle>& ps) { return DiscreteMeasure::from_particles(ps); }

std::vector<Particle> jitter(const std::vector<Particle>& base, int copies, double r, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-r, r), W(0.5, 1.5);
    std::vector<Particle> out;
    double tot = 0;
    for (const auto& b : base)
        for (int c = 0; c < copies; ++c) {
            out.push_back({b.x + U(rng), b.xi + U(rng), b.w * W(rng)});
            tot += out.back().w;
        }
    for (auto& p : out) p.w /= tot;
    return out;
}

PhaseGrid husimi_grid(double hbar)
{
    const double pm = G.momentum_cutoff(hbar);
    return {1, -6, 6, 64, std::max(-5.0, -pm), std::min(5.0, pm), 64};
}

}  // namespace

TEST_CASE("cost operator")
{
    for (double hbar : {0.5, 0.25, 0.125}) {
        CostOperatorField f = CostOperatorField::on_nodes(nodes({{0.3, -0.2, 1.0}}), G, hbar);
        CHECK(f.ground_eigenvalue(0) == doctest::Approx(hbar / 2).epsilon(0.02));
        CMat C = f.matrix(0);
        CHECK((C - C.adjoint()).norm() <= 1e-12 * C.norm());
        // harmonic ground state
        CVec z = coherent_state(0.3, -0.2, hbar, G).coefficients();
        CHECK((z.adjoint() * C * z)(0, 0).real() == doctest::Approx(hbar / 2).epsilon(1e-8));
        // displaced oscillator
        CVec w = coherent_state(1.1, 0.4, hbar, G).coefficients();
        const double d2 = 0.8 * 0.8 + 0.6 * 0.6;
        CHECK((w.adjoint() * C * w)(0, 0).real() == doctest::Approx(hbar / 2 + 0.5 * d2).epsilon(1e-8));
        CHECK(f.pairing(0, w * w.adjoint()) == doctest::Approx(hbar / 2 + 0.5 * d2).epsilon(1e-8));
    }
}

TEST_CASE("trivial coupling")
{
    const double hbar = 0.25;
    auto R = DensityOperator::pure(coherent_state(0.0, 0.0, hbar, G));
    SUBCASE("concentrated at the coherent centre")
    {
        auto Q = trivial_coupling(nodes({{0, 0, 1}}), R);
        CHECK(Q.check(R).ok());
        CHECK(Q.objective() == doctest::Approx(hbar / 2).epsilon(1e-8));
    }
    SUBCASE("matches direct summation")
    {
        std::vector<Particle> ps{{1, 0, 0.25}, {-0.5, 0.5, 0.5}, {0, -1, 0.25}};
        auto Q = trivial_coupling(nodes(ps), R);
        double direct = 0;
        for (const auto& p : ps) direct += p.w * (hbar / 2 + 0.5 * (p.x * p.x + p.xi * p.xi));
        CHECK(Q.objective() == doctest::Approx(direct).epsilon(1e-8));
        CHECK(Q.check(R).trace_error <= 1e-14);
        CHECK(Q.check(R).sum_error <= 1e-14);
    }
}

TEST_CASE("toeplitz lift")
{
    const double hbar = 0.25;
    auto mu = nodes(lattice_gaussian(0, 0, 0.5, 0.5, 3));
    std::vector<Particle> ps = lattice_gaussian(0, 0, 0.5, 0.5, 3);
    auto R = toeplitz_quantize(ps, hbar, G);
    SUBCASE("diagonal plan")
    {
        auto plan = mk2_squared(mu, mu).plan;
        auto Q = toeplitz_lift_coupling(mu, mu, plan, hbar, G);
        CHECK(Q.check(R).sum_error <= 1e-7);
        CHECK(Q.objective() == doctest::Approx(hbar / 2).epsilon(1e-8));
    }
    SUBCASE("objective bounded by transport plus floor")
    {
        auto p = nodes(jitter(ps, 2, 0.4, 3));
        auto tr = mk2_squared(p, mu);
        auto Q = toeplitz_lift_coupling(p, mu, tr.plan, hbar, G);
        CHECK(Q.check(R).ok());
        CHECK(Q.objective() <= tr.cost + hbar / 2 + 1e-9);
        auto up = ehbar_upper(p, R, &mu);
        CHECK(up.value <= tr.cost + hbar / 2 + 1e-9);
        CHECK(up.value >= hbar / 2);
    }
    SUBCASE("marginal mismatch")
    {
        auto other = nodes(lattice_gaussian(0.5, 0, 0.5, 0.5, 3));
        auto plan = mk2_squared(mu, other).plan;
        auto Q = toeplitz_lift_coupling(mu, other, plan, hbar, G);
        CHECK_THROWS_AS(Q.validate(R), NumericalError);
    }
}

TEST_CASE("lower bound")
{
    const double hbar = 0.25, r = 3.0;
    auto R = DensityOperator::pure(coherent_state(0.0, 0.0, hbar, G));
    auto p = nodes({{r, 0, 1}});
    auto lo = ehbar_lower(p, R, husimi_grid(hbar));
    // point to a Gaussian of variance hbar per axis
    CHECK(lo.transport_cost == doctest::Approx(0.5 * r * r + hbar).epsilon(1e-6));
    CHECK(lo.value == doctest::Approx(0.5 * r * r + hbar / 2).epsilon(1e-6));
    CHECK(lo.dropped_mass <= 1e-9);
    auto near = ehbar_lower(nodes({{0, 0, 1}}), R, husimi_grid(hbar));
    CHECK(near.value == hbar / 2);
    CHECK(ehbar_upper(p, R).value == doctest::Approx(0.5 * r * r + hbar / 2).epsilon(1e-8));
}

TEST_CASE("tiny solver")
{
    const double hbar = 0.5;
    const SpaceGrid g{1, -6, 6, 64, true};
    SUBCASE("fully constrained single cell")
    {
        CVec c = coherent_state(0.5, 0, hbar, g).coefficients() + coherent_state(-0.5, 0.3, hbar, g).coefficients();
        c /= c.norm();
        CMat B(g.n, 2);
        B.col(0) = c * std::sqrt(0.5);
        B.col(1) = coherent_state(0, -0.4, hbar, g).coefficients() * std::sqrt(0.5);
        auto R = DensityOperator::from_factor(g, hbar, B);
        auto p = nodes({{0.2, 0.1, 1}});
        auto t = ehbar_exact_tiny(p, R);
        const double direct = CostOperatorField::on_nodes(p, g, hbar).pairing(0, R.matrix);
        CHECK(t.value == doctest::Approx(direct).epsilon(1e-8));
    }
    SUBCASE("pure target admits only the trivial coupling")
    {
        auto R = DensityOperator::pure(coherent_state(0.2, -0.1, hbar, g));
        auto ps = jitter({{0.2, -0.1, 1.0}}, 5, 0.6, 7);
        auto t = ehbar_exact_tiny(nodes(ps), R);
        const double oracle = hbar / 2 + mk2_squared(nodes(ps), nodes({{0.2, -0.1, 1}})).cost;
        CHECK(t.value == doctest::Approx(oracle).epsilon(1e-6));
    }
    SUBCASE("sandwich and cell relabelling")
    {
        auto base = lattice_gaussian(0, 0, 0.6, 0.6, 2);
        auto R = toeplitz_quantize(base, hbar, g);
        auto mu = nodes(base);
        auto ps = jitter(base, 3, 0.3, 9);
        auto p = nodes(ps);
        auto lo = ehbar_lower(p, R, {1, -6, 6, 64, -3, 3, 64});
        auto up = ehbar_upper(p, R, &mu);
        auto t = ehbar_exact_tiny(p, R);
        CHECK(t.converged);
        CHECK(t.coupling.check(R).ok());
        CHECK(hbar / 2 <= lo.value);
        CHECK(lo.value <= t.value + 1e-9);
        CHECK(t.value <= up.value + 1e-9);
        std::reverse(ps.begin(), ps.end());
        auto t2 = ehbar_exact_tiny(nodes(ps), R);
        CHECK(t2.value == doctest::Approx(t.value).epsilon(1e-4));
    }
}
