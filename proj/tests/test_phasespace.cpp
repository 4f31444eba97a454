#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "qcl/phasespace.hpp"

using namespace qcl;

namespace {

// plain midpoint rule over cell centres, no renormalization
double quad_m2(const PhaseGrid& g, double x0, double xi0)
{
    double s = 0, m = 0;
    for (int i = 0; i < g.n_x; ++i)
        for (int j = 0; j < g.n_xi; ++j) {
            const double x = g.x_center(i), xi = g.xi_center(j);
            const double w = std::exp(-0.5 * ((x - x0) * (x - x0) + (xi - xi0) * (xi - xi0)));
            s += w * 0.5 * (x * x + xi * xi);
            m += w;
        }
    return s / m;
}

std::vector<Particle> blob(int n, std::uint64_t seed, double sx = 0.5)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> G;
    std::vector<Particle> ps(n);
    for (auto& p : ps) p = {sx * G(rng), sx * G(rng), 1.0 / n};
    return ps;
}

}  // namespace

TEST_CASE("potential rates")
{
    CHECK(lambda_rate(Potential::cosine()) == doctest::Approx(5.0));
    CHECK(gamma_rate(Potential::cosine()) == doctest::Approx(6.0));
    CHECK(lambda_rate(Potential::zero()) == doctest::Approx(2.0));
    const auto V = Potential::parse("cos:2:0.5");
    CHECK(V.lipschitz_gradV() == doctest::Approx(0.5));
    CHECK(V.sup_gradV() == doctest::Approx(1.0));
    CHECK(Potential::parse(V.tag()).tag() == V.tag());
    CHECK_THROWS_AS(Potential::parse("sin"), PreconditionError);
    CHECK_NOTHROW(Potential::gaussian_bump(1.0, 0.7).check_hypotheses());
}

TEST_CASE("mean-field force")
{
    const auto V = Potential::cosine();
    SUBCASE("symmetric mass at the origin")
    {
        PhaseGrid g{1, -4, 4, 32, -4, 4, 32};
        auto p = PhaseDensity::gaussian(g, 0, 0, 1, 1);
        CHECK(std::abs(mean_field_force(p, V, 0.0)) < 1e-13);
    }
    SUBCASE("single cell against direct quadrature")
    {
        PhaseGrid g{1, -kPi, kPi, 33, -2, 2, 9};
        auto p = PhaseDensity::point_mass(g, 0.9, 0.0);
        const double x0 = g.x_center(static_cast<int>(std::floor((0.9 + kPi) / g.hx())));
        for (double x : {-2.0, -0.3, 0.0, 1.1, 2.5}) CHECK(mean_field_force(p, V, x) == doctest::Approx(-std::sin(x - x0)).epsilon(1e-12));
    }
    SUBCASE("bounded by sup grad V")
    {
        auto ps = blob(200, 3, 2.0);
        for (double x = -5; x <= 5; x += 0.25) CHECK(std::abs(mean_field_force(ps, V, x)) <= V.sup_gradV() + 1e-14);
    }
}

TEST_CASE("vlasov step")
{
    SUBCASE("free streaming")
    {
        auto ps = blob(50, 4);
        auto q = ps;
        vlasov_step_inplace(q, Potential::zero(), 0.3);
        for (std::size_t k = 0; k < ps.size(); ++k) {
            CHECK(q[k].x == doctest::Approx(ps[k].x + 0.3 * ps[k].xi).epsilon(1e-15));
            CHECK(q[k].xi == ps[k].xi);
        }
    }
    SUBCASE("moment lemma after one step")
    {
        const auto V = Potential::cosine();
        auto ps = blob(300, 5);
        const double m0 = second_moment(ps);
        vlasov_step_inplace(ps, V, 0.01);
        CHECK(second_moment(ps) <= std::exp(0.01) * (m0 + V.sup_V()));
    }
    SUBCASE("energy drift over a unit of time")
    {
        const auto V = Potential::cosine();
        auto tr = vlasov_run(blob(100, 6), V, 0.001, 1000);
        const double e0 = tr.energy.front();
        for (double e : tr.energy) CHECK(std::abs(e - e0) <= 1e-6 * std::abs(e0));
    }
}

TEST_CASE("characteristic flow")
{
    const auto V = Potential::cosine();
    auto tr = vlasov_run(blob(60, 7), V, 0.01, 100);
    SUBCASE("s = t is the identity")
    {
        auto z = characteristic_flow(0.3, -0.2, 0.5, 0.5, tr.path, V);
        CHECK(z.first == 0.3);
        CHECK(z.second == -0.2);
    }
    SUBCASE("free flow")
    {
        auto trz = vlasov_run(blob(10, 8), Potential::zero(), 0.01, 100);
        auto z = characteristic_flow(0.3, -0.2, 0.1, 0.9, trz.path, Potential::zero());
        CHECK(z.first == doctest::Approx(0.3 - 0.2 * 0.8).epsilon(1e-13));
        CHECK(z.second == doctest::Approx(-0.2).epsilon(1e-13));
    }
    SUBCASE("forward then backward")
    {
        auto a = characteristic_flow(0.7, 0.4, 0.0, 1.0, tr.path, V);
        auto b = characteristic_flow(a.first, a.second, 1.0, 0.0, tr.path, V);
        CHECK(std::abs(b.first - 0.7) < 1e-8);
        CHECK(std::abs(b.second - 0.4) < 1e-8);
    }
    SUBCASE("outside the stored path")
    {
        CHECK_THROWS_AS(characteristic_flow(0, 0, 0, 2.0, tr.path, V), PreconditionError);
    }
}

TEST_CASE("second moment")
{
    PhaseGrid odd{1, -8, 8, 161, -8, 8, 161};
    CHECK(second_moment(PhaseDensity::point_mass(odd, 0, 0)) == doctest::Approx(0.0));
    const double m = second_moment(PhaseDensity::gaussian(odd, 0, 0, 1, 1));
    CHECK(m == doctest::Approx(1.0).epsilon(2e-3));
    CHECK(m == doctest::Approx(quad_m2(odd, 0, 0)).epsilon(2e-3));
    const double ms = second_moment(PhaseDensity::gaussian(odd, 1.5, 0, 1, 1));
    CHECK(ms - m == doctest::Approx(0.5 * 1.5 * 1.5).epsilon(2e-3));
}

TEST_CASE("liouville")
{
    const auto V = Potential::cosine();
    SUBCASE("N = 1 has no self force")
    {
        auto e = ClassicalEnsembleN::product({{0.3, 0.5, 1.0}}, 1);
        auto f = liouville_step(e, V, 0.1);
        CHECK(f.x[0] == doctest::Approx(0.35).epsilon(1e-14));
        CHECK(f.xi[0] == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("N = 2 energy drift on [0,2]")
    {
        auto e = ClassicalEnsembleN::sampled_gaussian(2, 40, 0, 0, 0.7, 0.7, 9);
        std::vector<double> e0(e.n_samples());
        for (std::size_t s = 0; s < e.n_samples(); ++s) e0[s] = liouville_energy(e, V, s);
        for (int k = 0; k < 2000; ++k) liouville_step_inplace(e, V, 0.001);
        for (std::size_t s = 0; s < e.n_samples(); ++s)
            CHECK(std::abs(liouville_energy(e, V, s) - e0[s]) <= 1e-6 * std::max(1.0, std::abs(e0[s])));
    }
    SUBCASE("permutation equivariance")
    {
        auto e = ClassicalEnsembleN::sampled_gaussian(3, 10, 0, 0, 0.7, 0.7, 10);
        const std::vector<int> sigma{2, 0, 1};
        auto a = liouville_step(e.permuted(sigma), V, 0.05).merged();
        auto b = liouville_step(e, V, 0.05).permuted(sigma).merged();
        REQUIRE(a.n_samples() == b.n_samples());
        for (std::size_t k = 0; k < a.x.size(); ++k) CHECK(a.x[k] == doctest::Approx(b.x[k]).epsilon(1e-13));
    }
}

TEST_CASE("classical marginals")
{
    auto one = lattice_gaussian(0.2, -0.1, 0.5, 0.5, 3);
    auto e = ClassicalEnsembleN::product(one, 3);
    CHECK(marginal_classical(e, 3).merged().w == e.merged().w);
    auto m2 = marginal_classical(e, 2).merged();
    auto ref = ClassicalEnsembleN::product(one, 2).merged();
    REQUIRE(m2.n_samples() == ref.n_samples());
    for (std::size_t k = 0; k < m2.n_samples(); ++k) CHECK(m2.w[k] == doctest::Approx(ref.w[k]).epsilon(1e-13));
}

TEST_CASE("density validation and io")
{
    PhaseGrid g{1, -2, 2, 8, -2, 2, 8};
    auto p = PhaseDensity::gaussian(g, 0, 0, 0.5, 0.5);
    CHECK(p.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
    auto bad = p;
    bad.weights[0] += 0.1;
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
    const std::string path = "phasespace_io_test.csv";
    write_density_csv(path, p);
    auto q = read_density_csv(path);
    CHECK(q.grid == p.grid);
    CHECK(q.weights == p.weights);
}
