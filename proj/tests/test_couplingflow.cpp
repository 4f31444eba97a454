#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "qcl/couplingflow.hpp"

using namespace qcl;

namespace {

const SpaceGrid G{1, -8, 8, 128, true};

std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// sum_k p_k tr(R(t) c(z_k(t))) under free flow, from t=0 moments only
double free_moment(const std::vector<Particle>& ps, const DensityOperator& R, double t)
{
    const Vec x = positions(R.grid);
    const CMat P = momentum_matrix(R.grid, R.hbar);
    const CMat X = x.cast<cplx>().asDiagonal();
    auto tr = [&](const CMat& A) { return (R.matrix * A).trace().real(); };
    const double ex = tr(X), ex2 = tr(X * X), ep = tr(P), ep2 = tr(P * P), exp_ = tr(0.5 * (X * P + P * X));
    double s = 0;
    for (const auto& q : ps) {
        const double aa = q.x * q.x - 2 * q.x * ex + ex2;
        const double bb = q.xi * q.xi - 2 * q.xi * ep + ep2;
        const double ab = q.x * q.xi - q.x * ep - q.xi * ex + exp_;
        s += q.w * 0.5 * (aa + 2 * t * ab + t * t * bb + bb);
    }
    return s;
}

CoupledTrajectory flow(const CouplingField& Q0, const std::vector<Particle>& nodes, const DensityOperator& R,
                       const Potential& V, double dt, int steps, int stride)
{
    auto ft = vlasov_run(nodes, V, dt, steps);
    auto Rt = hartree_run(HartreeState::from_operator(R, V), dt, steps, stride);
    return propagate_coupling_hartree(Q0, ft, Rt, V);
}

}  // namespace

TEST_CASE("mean-field coupling flow")
{
    const double hbar = 0.25;
    SUBCASE("free flow against the closed form")
    {
        auto ps = lattice_gaussian(0.2, 0.3, 0.5, 0.5, 3);
        auto R = toeplitz_quantize(ps, hbar, G);
        auto p = DiscreteMeasure::from_particles(ps);
        auto Q0 = trivial_coupling(p, R);
        auto traj = flow(Q0, ps, R, Potential::zero(), 0.01, 100, 10);
        REQUIRE(traj.moment.size() == 11);
        CHECK(traj.moment.front() == doctest::Approx(Q0.objective()).epsilon(1e-12));
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            CHECK(traj.moment[i] == doctest::Approx(free_moment(ps, R, traj.times[i])).epsilon(1e-9));
            CHECK(traj.checks[i].ok());
        }
        CHECK(moment_functional(traj) == traj.moment);
    }
    SUBCASE("matched toeplitz data start at the floor")
    {
        auto ps = lattice_gaussian(0, 0, 0.5, 0.5, 3);
        auto R = toeplitz_quantize(ps, hbar, G);
        auto mu = DiscreteMeasure::from_particles(ps);
        auto Q0 = toeplitz_lift_coupling(mu, mu, mk2_squared(mu, mu).plan, hbar, G);
        auto traj = flow(Q0, ps, R, Potential::cosine(), 0.01, 50, 10);
        CHECK(traj.moment.front() == doctest::Approx(hbar / 2).epsilon(1e-8));
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            CHECK(traj.moment[i] <= std::exp(5 * traj.times[i]) * traj.moment.front() * (1 + 1e-9));
            CHECK(traj.checks[i].sum_error <= 5e-6);
        }
    }
    SUBCASE("distant blobs")
    {
        const double r = 2.5;
        auto R = DensityOperator::pure(coherent_state(0, 0, hbar, G));
        std::vector<Particle> ps{{r, 0, 1}};
        auto Q0 = trivial_coupling(DiscreteMeasure::from_particles(ps), R);
        auto traj = flow(Q0, ps, R, Potential::cosine(), 0.01, 10, 10);
        CHECK(traj.moment.front() == doctest::Approx(0.5 * r * r + hbar / 2).epsilon(1e-8));
    }
}

TEST_CASE("nccs")
{
    std::mt19937_64 rng(1);
    auto herm = [&](int n) {
        std::normal_distribution<double> N;
        CMat A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = cplx(N(rng), N(rng));
        return CMat(0.5 * (A + A.adjoint()));
    };
    SUBCASE("equal operators give equality")
    {
        CMat A = herm(5), B = herm(5);
        CMat R = B * B.adjoint();
        auto r = nccs_check(R, A, A);
        CHECK(r.holds);
        CHECK(r.lhs == doctest::Approx(r.rhs).epsilon(1e-12));
    }
    SUBCASE("anticommuting pair")
    {
        CMat X(2, 2), Z(2, 2);
        X << 0, 1, 1, 0;
        Z << 1, 0, 0, -1;
        auto r = nccs_check(CMat::Identity(2, 2) / 2.0, X, Z);
        CHECK(r.holds);
        CHECK(std::abs(r.lhs) <= 1e-15);
        CHECK(r.rhs == doctest::Approx(2.0));
    }
    SUBCASE("random instances")
    {
        for (int k = 0; k < 200; ++k) {
            CMat A = herm(6), B = herm(6), C = herm(6);
            CHECK(nccs_check(C * C, A, B).holds);
        }
    }
}

TEST_CASE("bound reports")
{
    BoundReport r;
    r.tag = "T-HV";
    r.series = "corollary";
    r.hbar = 0.5;
    r.rate_name = "Lambda";
    r.rate = 5;
    r.report_tol = 0.05;
    r.rows = {{0.0, 0.5, 0.5, 0.525}, {0.1, 1.0, 1.2, 1.26}};
    CHECK(r.pass());
    CHECK(r.worst_relative_margin() == doctest::Approx(0.025 / 0.525));
    auto files = r.write("report_test");
    REQUIRE(files.size() == 2);
    const std::string csv = slurp("report_test.csv");
    CHECK(csv.rfind("t,lhs,rhs,margin,pass\n", 0) == 0);
    CHECK(csv.find("\n0.10000000000000001,1,1.2,0.26000000000000001,1\n") != std::string::npos);
    CHECK(slurp("report_test.dat").front() == '#');
    CHECK(r.summary().find("PASS") != std::string::npos);
    r.rows.push_back({0.2, 2.0, 1.5, 1.575});
    CHECK_FALSE(r.pass());
    CHECK(r.summary().find("FAIL") != std::string::npos);
}

TEST_CASE("consistency term")
{
    const auto V = Potential::cosine();
    CHECK(consistency_term(V, 2, 0.0) == 0.0);
    CHECK(consistency_term(V, 2, 1.0) == doctest::Approx(4 * (std::exp(6.0) - 1) / 6));
    CHECK(consistency_term(V, 3, 1.0) == doctest::Approx(4 * (std::exp(6.0) - 1) / 12));
}

TEST_CASE("husimi measure")
{
    double dropped = 1;
    auto R = DensityOperator::pure(coherent_state(0.5, -0.3, 0.25, G));
    auto H = husimi_measure(R, 2048, &dropped);
    CHECK(H.size() <= 2048);
    CHECK(dropped <= 1e-9);
    CHECK(H.masses.sum() == doctest::Approx(1.0).epsilon(1e-12));
    const Vec mean = H.points.transpose() * H.masses;
    CHECK(mean[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(mean[1] == doctest::Approx(-0.3).epsilon(1e-6));
}

TEST_CASE("n-body mixtures")
{
    const SpaceGrid g{1, -6, 6, 32, true};
    const double hbar = 0.5;
    auto nodes = lattice_gaussian(0, 0, 0.2, 0.2, 2);
    auto mix = NBodyMixture::toeplitz(g, 2, hbar, nodes);
    CHECK(mix.reps.size() == 10);
    CHECK(mix.trace() == doctest::Approx(1.0).epsilon(1e-12));
    auto R1 = toeplitz_quantize(nodes, hbar, g);
    CHECK((mix.one_body_marginal() - R1.matrix).norm() <= 1e-12);

    std::vector<std::vector<std::pair<double, double>>> cl;
    for (const auto& rep : mix.reps) {
        std::vector<std::pair<double, double>> z;
        for (int k : rep) z.push_back({nodes[k].x, nodes[k].xi});
        cl.push_back(z);
    }
    NBodyPropagator prop(g, 2, Potential::cosine(), hbar, 0.01);
    CHECK(nbody_moment_functional(mix, prop, cl) == doctest::Approx(hbar / 2).epsilon(1e-8));
    mix.advance(prop, 10);
    CHECK(mix.t == doctest::Approx(0.1));
    CHECK(mix.trace() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nbody_moment_functional(mix, prop, cl) ==
          doctest::Approx(nbody_moment_functional_marginal(mix, cl)).epsilon(1e-10));
    auto Qm = nbody_marginal_coupling(mix, cl);
    CHECK((Qm.quantum_marginal() - mix.one_body_marginal()).norm() <= 1e-10);
}

TEST_CASE("short bound runs")
{
    SUBCASE("T-HV")
    {
        THVConfig c;
        c.hbar = 0.5;
        c.T = 0.3;
        c.samples = 4;
        auto r = verify_thv(c);
        CHECK(r.corollary.pass());
        CHECK(r.gronwall.pass());
        CHECK(r.corollary.rows.front().lhs <= c.hbar);
        CHECK(r.gronwall.rows.front().lhs == doctest::Approx(c.hbar / 2).epsilon(1e-8));
        CHECK(r.corollary.rate == 5.0);
    }
    SUBCASE("T-NSV and T-SL")
    {
        NBodyConfig c;
        c.T = 0.2;
        c.samples = 3;
        for (auto* fn : {&verify_tnsv, &verify_tsl}) {
            auto r = fn(c);
            CHECK(r.corollary.pass());
            CHECK(r.gronwall.pass());
            CHECK(r.corollary.rows.front().lhs <= c.hbar);
            CHECK(r.max_symmetry_defect <= 1e-8);
            CHECK(r.max_reduction_defect <= 1e-8);
        }
    }
}
