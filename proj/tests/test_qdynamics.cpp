#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "qcl/qdynamics.hpp"

using namespace qcl;

namespace {

const SpaceGrid G{1, -8, 8, 128, true};

struct Moments {
    double mean, var;
};

Moments spatial(const DensityOperator& R)
{
    const Vec rho = rho_of(R);
    const Vec x = positions(R.grid);
    const double h = R.grid.h();
    const double m = (rho.array() * x.array()).sum() * h;
    const double v = (rho.array() * (x.array() - m).square()).sum() * h;
    return {m, v};
}

HartreeState evolve(const DensityOperator& R, const Potential& V, double dt, int steps)
{
    auto s = HartreeState::from_operator(R, V);
    for (int k = 0; k < steps; ++k) s = hartree_step(s, dt);
    return s;
}

}  // namespace

TEST_CASE("rho of a coherent state")
{
    const double hbar = 0.25;
    auto R = DensityOperator::pure(coherent_state(0.5, 0.3, hbar, G));
    const Vec rho = rho_of(R);
    CHECK(rho.sum() * G.h() == doctest::Approx(1.0).epsilon(1e-12));
    for (int a = 40; a < 90; a += 7) {
        const double x = G.x(a);
        const double ref = std::exp(-(x - 0.5) * (x - 0.5) / hbar) / std::sqrt(kPi * hbar);
        CHECK(rho[a] == doctest::Approx(ref).epsilon(1e-10));
    }
    auto S = DensityOperator::pure(coherent_state(-1.0, 0.0, hbar, G));
    DensityOperator M{G, 0.5 * (R.matrix + S.matrix), hbar, std::nullopt};
    CHECK((rho_of(M) - 0.5 * (rho_of(R) + rho_of(S))).norm() < 1e-14);
}

TEST_CASE("free evolution of a coherent state")
{
    const double hbar = 0.25, t = 1.0;
    auto R = DensityOperator::pure(coherent_state(0.5, 0.75, hbar, G));
    auto s = evolve(R, Potential::zero(), 0.01, 100);
    const auto m = spatial(s.R);
    CHECK(m.mean == doctest::Approx(0.5 + 0.75 * t).epsilon(1e-10));
    CHECK(m.var == doctest::Approx(0.5 * hbar * (1 + t * t)).epsilon(1e-10));
    CHECK(s.R.trace() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.t == doctest::Approx(t));
}

TEST_CASE("hartree conservation and order")
{
    const double hbar = 0.25;
    const auto V = Potential::cosine();
    const CVec psi = coherent_state(0.5, 0.0, hbar, G).coefficients() + coherent_state(-0.5, 0.5, hbar, G).coefficients();
    auto R = DensityOperator::pure(WaveFunction::from_coefficients(G, hbar, psi / psi.norm()));

    SUBCASE("trace, purity and energy")
    {
        auto s = evolve(R, V, 0.01, 100);
        CHECK(std::abs(s.R.trace() - 1.0) <= 1e-10);
        CHECK(std::abs(s.R.purity() - 1.0) <= 1e-8);
        CHECK(hartree_energy(s.R, V) == doctest::Approx(hartree_energy(R, V)).epsilon(1e-4));
    }
    SUBCASE("second order in dt")
    {
        const CMat ref = evolve(R, V, 0.0005, 1000).R.matrix;
        const double e1 = (evolve(R, V, 0.01, 50).R.matrix - ref).norm();
        const double e2 = (evolve(R, V, 0.005, 100).R.matrix - ref).norm();
        CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.15));
    }
    SUBCASE("recorded splitting replays the state")
    {
        auto s0 = HartreeState::from_operator(R, V);
        auto tr = hartree_run(s0, 0.01, 30, 10);
        REQUIRE(tr.samples.size() == 4);
        CMat cols = psi / psi.norm();
        tr.propagate(cols, 0, 30);
        CHECK((cols * cols.adjoint() - tr.samples.back().R.matrix).norm() <= 1e-10);
    }
}

TEST_CASE("n-body propagation")
{
    const SpaceGrid g{1, -6, 6, 32, true};
    const double hbar = 0.5;
    const auto V = Potential::cosine();
    const CVec a = coherent_state(0.8, 0.0, hbar, g).coefficients();
    const CVec b = coherent_state(-0.8, 0.0, hbar, g).coefficients();

    SUBCASE("one body sees only a global phase")
    {
        auto s = NBodyState::product(g, hbar, V, {a});
        auto f = HartreeState::from_operator(DensityOperator::pure(WaveFunction::from_coefficients(g, hbar, a)),
                                             Potential::zero());
        for (int k = 0; k < 40; ++k) {
            s = nbody_step(s, 0.01);
            f = hartree_step(f, 0.01);
        }
        CHECK((s.coeffs * s.coeffs.adjoint() - f.R.matrix).norm() <= 1e-12);
    }
    SUBCASE("norm and energy")
    {
        auto s = NBodyState::product(g, hbar, V, {a, b});
        NBodyPropagator prop(g, 2, V, hbar, 0.01);
        const double e0 = prop.energy(s.coeffs);
        CMat c = s.coeffs;
        for (int k = 0; k < 100; ++k) prop.step(c);
        CHECK(std::abs(c.col(0).norm() - 1.0) <= 1e-10);
        CHECK(prop.energy(c.col(0)) == doctest::Approx(e0).epsilon(1e-3));
        // interaction entangles the bodies
        const CMat m = marginal_matrix(c.col(0), g.n, 2, 1);
        CHECK((m * m).trace().real() < 1 - 1e-6);
        CHECK(m.trace().real() == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("marginal of a product")
    {
        auto s = NBodyState::product(g, hbar, V, {a, a});
        const DensityOperator aa{g, a * a.adjoint(), hbar, std::nullopt};
        CHECK((marginal_operator(s, 1).matrix - aa.matrix).norm() <= 1e-12);
        CHECK((marginal_operator(s, 2).matrix - DensityOperatorN::tensor_power(aa, 2).matrix).norm() <= 1e-12);
        auto s3 = NBodyState::product(g, hbar, V, {a, a, a});
        CHECK((marginal_matrix(s3.coeffs, g.n, 3, 1) - aa.matrix).norm() <= 1e-12);
    }
    SUBCASE("body moments")
    {
        auto s = NBodyState::product(g, hbar, V, {a, b});
        NBodyPropagator prop(g, 2, V, hbar, 0.01);
        auto m1 = prop.body_moments(s.coeffs, 0);
        auto m2 = prop.body_moments(s.coeffs, 1);
        CHECK(m1[0] == doctest::Approx(0.8).epsilon(1e-10));
        CHECK(m2[0] == doctest::Approx(-0.8).epsilon(1e-10));
        CHECK(m1[3] == doctest::Approx(hbar / 2).epsilon(1e-8));
    }
}

TEST_CASE("checkpoints")
{
    const double hbar = 0.25;
    const std::string dir = "qdynamics_checkpoints";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto s = HartreeState::from_operator(DensityOperator::pure(coherent_state(0, 0.5, hbar, G)), Potential::cosine());
    CheckpointWriter w(dir, 5);
    for (int k = 0; k <= 10; ++k) {
        w.maybe_write(k, s);
        s = hartree_step(s, 0.01);
    }
    CHECK(w.rows().size() == 3);
    for (const auto& r : w.rows()) CHECK(r.trace == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& f : w.files()) CHECK(std::filesystem::exists(dir + "/" + f));
    CHECK(hartree_boundary_mass(s.R) < 1e-12);
}
