#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "qcl/hilbert.hpp"

using namespace qcl;

namespace {

const SpaceGrid G{1, -8, 8, 128, true};

// closed form |<z|z'>|
double overlap_modulus(double x, double xi, double y, double eta, double hbar)
{
    return std::exp(-((x - y) * (x - y) + (xi - eta) * (xi - eta)) / (4 * hbar));
}

CMat random_density(const SpaceGrid& g, double hbar, std::uint64_t seed, int rank = 3)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    CMat B(g.n, rank);
    for (int r = 0; r < rank; ++r) {
        CVec c = CVec::Zero(g.n);
        for (int k = 0; k < 2; ++k) c += coherent_state(U(rng), U(rng), hbar, g).coefficients() * cplx(U(rng), U(rng));
        B.col(r) = c / c.norm() * std::sqrt(1.0 / rank);
    }
    return B * B.adjoint();
}

CMat random_psd(int n, std::uint64_t seed, int rank)
{
    std::srand(static_cast<unsigned>(seed));
    CMat B = CMat::Random(n, rank);
    CMat R = B * B.adjoint();
    return R / R.trace().real();
}

}  // namespace

TEST_CASE("coherent states")
{
    const double hbar = 0.25;
    auto psi = coherent_state(0.7, -0.4, hbar, G);
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
    const CVec c = psi.coefficients();
    const Vec x = positions(G);
    const double ex = (c.cwiseAbs2().array() * x.array()).sum();
    const double ex2 = (c.cwiseAbs2().array() * x.array().square()).sum();
    CHECK(ex == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(ex2 - ex * ex == doctest::Approx(hbar / 2).epsilon(1e-10));
    CHECK(momentum_expectation(G, hbar, c) == doctest::Approx(-0.4).epsilon(1e-10));
    const double p2 = momentum_expectation(G, hbar, c, 2);
    CHECK(p2 - 0.16 == doctest::Approx(hbar / 2).epsilon(1e-10));

    auto phi = coherent_state(0.2, 0.5, hbar, G);
    const double ov = std::abs(c.dot(phi.coefficients()));
    CHECK(ov == doctest::Approx(overlap_modulus(0.7, -0.4, 0.2, 0.5, hbar)).epsilon(1e-10));

    CHECK_THROWS_AS(check_coherent_support(G, hbar, 7.9, 0.0), BoundaryError);
    CHECK_THROWS_AS(check_coherent_support(G, hbar, 0.0, 0.99 * G.momentum_cutoff(hbar)), BoundaryError);
}

TEST_CASE("momentum matrix")
{
    const double hbar = 0.5;
    CMat P = momentum_matrix(G, hbar);
    CHECK((P - P.adjoint()).norm() < 1e-12);
    CMat cols = CMat::Random(G.n, 3);
    CMat ref = P * P * cols;
    apply_momentum(G, hbar, cols, 2);
    CHECK((cols - ref).norm() < 1e-9 * ref.norm());
}

TEST_CASE("toeplitz quantization")
{
    const double hbar = 0.25;
    SUBCASE("point mass is a coherent projector")
    {
        PhaseGrid pg{1, -2, 2, 9, -2, 2, 9};
        auto R = toeplitz_quantize(PhaseDensity::point_mass(pg, 0.0, 0.0), hbar, G);
        CVec z = coherent_state(pg.x_center(4), pg.xi_center(4), hbar, G).coefficients();
        CHECK((R.matrix - z * z.adjoint()).norm() < 1e-12);
        CHECK(R.purity() == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("symbol one is the identity on interior states")
    {
        PhaseGrid pg{1, -8, 8, 128, -G.momentum_cutoff(hbar), G.momentum_cutoff(hbar), 128};
        CMat T = toeplitz_operator([](double, double) { return 1.0; }, pg, hbar, G);
        for (double x : {-2.0, 0.0, 1.5})
            for (double xi : {-1.0, 0.0, 2.0}) {
                CVec c = coherent_state(x, xi, hbar, G).coefficients();
                CHECK((T * c - c).norm() <= 1e-3);
            }
    }
}

TEST_CASE("wigner")
{
    const double hbar = 0.25;
    PhaseGrid pg{1, -4, 4, 64, -4, 4, 64};
    SUBCASE("coherent state is a positive Gaussian")
    {
        auto R = DensityOperator::pure(coherent_state(0.5, 0.25, hbar, G));
        auto W = wigner(R, pg);
        CHECK(W.integral() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(W.min() > -1e-10);
        // peak 1/(pi hbar) at the centre
        CHECK(W.values.maxCoeff() <= 1.0 / (kPi * hbar) * (1 + 1e-6));
    }
    SUBCASE("cat state has negative fringes")
    {
        CVec c = coherent_state(1.5, 0, hbar, G).coefficients() + coherent_state(-1.5, 0, hbar, G).coefficients();
        c /= c.norm();
        auto R = DensityOperator::pure(WaveFunction::from_coefficients(G, hbar, c));
        auto W = wigner(R, pg);
        CHECK(W.min() < -0.1 / (kPi * hbar));
        CHECK(W.integral() == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("husimi")
{
    const double hbar = 0.25;
    PhaseGrid pg{1, -8, 8, 96, -G.momentum_cutoff(hbar), G.momentum_cutoff(hbar), 96};
    DensityOperator R{G, random_density(G, hbar, 21), hbar, std::nullopt};
    R.validate();
    Mat h = husimi_values(R, pg);
    CHECK(h.minCoeff() >= -1e-10);
    auto p = husimi(R, pg);
    CHECK(p.total_mass() == doctest::Approx(1.0).epsilon(1e-8));
    Mat s = husimi_smoothing(R, pg);
    CHECK((h - s).cwiseAbs().sum() * pg.cell_volume() <= 1e-6);
    CHECK(husimi_smoothing_at(R, pg.x_center(40), pg.xi_center(50)) == doctest::Approx(h(40, 50)).epsilon(1e-8));
}

TEST_CASE("trace pairing")
{
    const double hbar = 0.25;
    SUBCASE("point mass against its own projector")
    {
        auto R = DensityOperator::pure(coherent_state(0.2, 0.1, hbar, G));
        auto r = trace_pairing({{0.2, 0.1, 1.0}}, R);
        CHECK(r.operator_side * 2 * kPi * hbar == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.discrepancy() <= 1e-12);
    }
    SUBCASE("random pairs")
    {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> U(-2, 2), W(0, 1);
        for (int k = 0; k < 5; ++k) {
            std::vector<Particle> mu(6);
            double tot = 0;
            for (auto& m : mu) tot += (m = {U(rng), U(rng), W(rng)}).w;
            for (auto& m : mu) m.w /= tot;
            DensityOperator R{G, random_density(G, hbar, 100 + k), hbar, std::nullopt};
            CHECK(trace_pairing(mu, R).discrepancy() <= 1e-6);
        }
    }
}

TEST_CASE("n-body structure")
{
    const SpaceGrid g{1, -4, 4, 8, true};
    const double hbar = 0.5;
    DensityOperator rho{g, random_psd(g.n, 31, 2), hbar, std::nullopt};
    auto R3 = DensityOperatorN::tensor_power(rho, 3);
    R3.validate();
    SUBCASE("product state reduces to a product")
    {
        CHECK((partial_trace(R3, 3).matrix - R3.matrix).norm() == 0.0);
        auto R2 = partial_trace(R3, 2);
        CHECK((R2.matrix - DensityOperatorN::tensor_power(rho, 2).matrix).norm() <= 1e-10);
        CHECK((to_one_body(R3).matrix - rho.matrix).norm() <= 1e-10);
    }
    SUBCASE("permutations")
    {
        DensityOperator sigma{g, random_psd(g.n, 32, 1), hbar, std::nullopt};
        DensityOperatorN A{g, 2, Eigen::kroneckerProduct(rho.matrix, sigma.matrix), hbar};
        CHECK((permute(A, {0, 1}).matrix - A.matrix).norm() == 0.0);
        auto S = permute(A, {1, 0});
        CHECK((S.matrix - Eigen::kroneckerProduct(sigma.matrix, rho.matrix)).norm() <= 1e-13);
        CHECK((permute(S, {1, 0}).matrix - A.matrix).norm() == 0.0);
        const auto idx = permutation_index(g.n, 3, {1, 2, 0});
        std::vector<bool> seen(idx.size());
        for (int i : idx) seen[i] = true;
        CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
    }
}

TEST_CASE("operator io")
{
    const double hbar = 0.5;
    DensityOperator R{G, random_density(G, hbar, 41), hbar, std::nullopt};
    write_operator("hilbert_io_test.bin", R);
    auto S = read_operator("hilbert_io_test.bin");
    CHECK(S.grid == R.grid);
    CHECK(S.hbar == R.hbar);
    // entries are stored in single precision
    CHECK((S.matrix - R.matrix).cwiseAbs().maxCoeff() <= 1e-7 * R.matrix.cwiseAbs().maxCoeff());
}
