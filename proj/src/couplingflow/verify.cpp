#include "qcl/couplingflow.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace qcl {

namespace {

DiscreteMeasure particle_measure(const std::vector<Particle>& ps)
{
    return DiscreteMeasure::from_particles(ps);
}

int steps_for(double T, double dt)
{
    double s = T / dt;
    int n = static_cast<int>(std::llround(s));
    require(n >= 1 && std::abs(s - n) <= 1e-9 * std::max(1.0, s), "horizon must be a whole number of steps");
    return n;
}

int stride_for(int steps, int samples)
{
    require(samples >= 2, "need at least two samples");
    require(steps % (samples - 1) == 0, "sample count must divide the step count");
    return steps / (samples - 1);
}

void check_step(const Potential& V, double dt)
{
    if (dt * std::max(1.0, V.lipschitz_gradV()) > 0.01 + 1e-15)
        throw PreconditionError("time step violates dt*max(1,L) <= 0.01");
}

}  // namespace

double consistency_term(const Potential& V, int N, double t)
{
    require(N >= 2, "consistency term needs N >= 2");
    const double G = gamma_rate(V), g = V.sup_gradV();
    return 4 * g * g * std::expm1(G * t) / ((N - 1) * G);
}

DiscreteMeasure husimi_measure(const DensityOperator& R, int max_cells, double* dropped)
{
    const CostMoments m = cost_moments(R.grid, R.hbar, R.matrix);
    const double tr = m.tr;
    const double mx = m.x / tr, mp = m.p / tr;
    const double vx = std::max(m.x2 / tr - mx * mx, 0.0) + 0.5 * R.hbar;
    const double vp = std::max(m.p2 / tr - mp * mp, 0.0) + 0.5 * R.hbar;
    const double c = 8.0;
    PhaseGrid pg;
    // probes past the momentum cutoff would alias; past the box they only see R's zero extension
    const double pmax = R.grid.momentum_cutoff(R.hbar);
    pg.x_min = mx - c * std::sqrt(vx);
    pg.x_max = mx + c * std::sqrt(vx);
    pg.xi_min = std::max(mp - c * std::sqrt(vp), -pmax);
    pg.xi_max = std::min(mp + c * std::sqrt(vp), pmax);
    int side = static_cast<int>(std::sqrt(1.15 * max_cells));
    while (true) {
        pg.n_x = pg.n_xi = side;
        PhaseDensity H = husimi(R, pg);
        double below = 0;
        DiscreteMeasure h = DiscreteMeasure::from_density(H, 1e-12, &below);
        if (h.size() <= max_cells) {
            if (dropped) *dropped = below + std::abs(tr - H.total_mass());
            return h;
        }
        side = static_cast<int>(side * 0.95);
        require(side >= 8, "Husimi window cannot be resolved within the cell budget");
    }
}

THVResult verify_thv(const THVConfig& cfg)
{
    cfg.V.check_hypotheses();
    check_step(cfg.V, cfg.dt);
    const int steps = steps_for(cfg.T, cfg.dt);
    const int stride = stride_for(steps, cfg.samples);
    const double hbar = cfg.hbar;
    const std::vector<Particle> nodes = cfg.data.lattice();

    // matched data: f_in = mu_in = nodes, R_in = OP^T(mu_in)
    const CMat B = toeplitz_factor(nodes, hbar, cfg.grid);
    const HartreeState s0 = HartreeState::from_factor(cfg.grid, hbar, B, cfg.V);
    const HartreeTrajectory Rt = hartree_run(s0, cfg.dt, steps, stride);
    const VlasovTrajectory ft = vlasov_run(nodes, cfg.V, cfg.dt, steps);

    const DiscreteMeasure mu = particle_measure(nodes);
    THVResult res;
    TransportResult t0 = mk2_squared(mu, mu);
    res.initial_distance = t0.cost;
    const CouplingField Q0 = toeplitz_lift_coupling(mu, mu, t0.plan, hbar, cfg.grid);
    res.coupling = propagate_coupling_hartree(Q0, ft, Rt, cfg.V);

    const double Lam = lambda_rate(cfg.V);
    auto init = [&](BoundReport& r, const char* series) {
        r.tag = "T-HV";
        r.series = series;
        r.hbar = hbar;
        r.L = cfg.V.lipschitz_gradV();
        r.rate_name = "Lambda";
        r.rate = Lam;
        r.report_tol = cfg.report_tol;
    };
    init(res.corollary, "corollary");
    init(res.gronwall, "gronwall");

    const double E0 = res.coupling.moment.front();
    for (std::size_t i = 0; i < Rt.samples.size(); ++i) {
        const double t = res.coupling.times[i];
        const auto& f = ft.snapshots[i * stride];
        const DensityOperator& R = Rt.samples[i].R;
        double dropped = 0;
        DiscreteMeasure H = husimi_measure(R, kExactTransportLimit, &dropped);
        TransportResult tr = mk2_squared(particle_measure(f), H);
        res.max_dropped_mass = std::max(res.max_dropped_mass, dropped);
        res.max_boundary_mass = std::max(res.max_boundary_mass, hartree_boundary_mass(R));
        res.max_marginal_error =
            std::max({res.max_marginal_error, res.coupling.checks[i].sum_error, res.coupling.checks[i].trace_error});

        const double env = std::exp(Lam * t) * (res.initial_distance + 0.5 * hbar);
        BoundRow row;
        row.t = t;
        row.lhs = tr.cost;
        row.rhs = env + 0.5 * hbar;
        row.threshold = env + 0.5 * hbar * (1 + cfg.report_tol);
        res.corollary.rows.push_back(row);

        BoundRow g;
        g.t = t;
        g.lhs = res.coupling.moment[i];
        g.rhs = std::exp(Lam * t) * E0;
        g.threshold = g.rhs * (1 + cfg.report_tol);
        res.gronwall.rows.push_back(g);
    }
    for (BoundReport* r : {&res.corollary, &res.gronwall}) {
        r->extras.push_back({"initial_distance", res.initial_distance});
        r->extras.push_back({"E0", E0});
        r->extras.push_back({"max_dropped_mass", res.max_dropped_mass});
        r->extras.push_back({"max_boundary_mass", res.max_boundary_mass});
        r->extras.push_back({"max_marginal_error", res.max_marginal_error});
    }
    return res;
}

namespace {

enum class Route { MeanField, Liouville };

NBodyResult verify_nbody(const NBodyConfig& cfg, Route route)
{
    require(cfg.N >= 2 && cfg.N <= 3, "N-body verification supports N in {2, 3}");
    require(cfg.n == 1, "only the one-body marginal is verified");
    cfg.V.check_hypotheses();
    check_step(cfg.V, cfg.dt);
    const int steps = steps_for(cfg.T, cfg.dt);
    const int stride = stride_for(steps, cfg.samples);
    const double hbar = cfg.hbar;
    const int N = cfg.N;
    const std::vector<Particle> nodes = cfg.data.lattice();
    const int K = static_cast<int>(nodes.size());

    NBodyMixture mix = NBodyMixture::toeplitz(cfg.grid, N, hbar, nodes);
    const NBodyPropagator prop(cfg.grid, N, cfg.V, hbar, cfg.dt);

    // an independently propagated relabeled tuple, for the symmetry check
    std::size_t probe_rep = 0;
    for (std::size_t r = 0; r < mix.reps.size(); ++r)
        if (mix.reps[r][0] != mix.reps[r][1]) {
            probe_rep = r;
            break;
        }
    std::vector<int> swap01(N);
    for (int j = 0; j < N; ++j) swap01[j] = j;
    std::swap(swap01[0], swap01[1]);
    const auto perm = permutation_index(cfg.grid.n, N, swap01);
    CMat probe(mix.states.rows(), 1);
    for (Eigen::Index I = 0; I < probe.rows(); ++I) probe(I, 0) = mix.states(perm[I], probe_rep);

    std::vector<Particle> vl = nodes;  // one-body Vlasov particles
    ClassicalEnsembleN ens;            // Liouville ensemble
    if (route == Route::Liouville) ens = ClassicalEnsembleN::product(nodes, N);

    auto classical_nodes = [&]() {
        std::vector<std::vector<std::pair<double, double>>> z(mix.reps.size());
        for (std::size_t r = 0; r < mix.reps.size(); ++r) {
            const auto& k = mix.reps[r];
            if (route == Route::MeanField) {
                for (int j = 0; j < N; ++j) z[r].push_back({vl[k[j]].x, vl[k[j]].xi});
            } else {
                std::size_t s = 0;
                for (int j = 0; j < N; ++j) s = s * K + k[j];
                for (int j = 0; j < N; ++j) z[r].push_back({ens.x[s * N + j], ens.xi[s * N + j]});
            }
        }
        return z;
    };

    NBodyResult res;
    const double Lam = lambda_rate(cfg.V), Gam = gamma_rate(cfg.V);
    auto init = [&](BoundReport& r, const char* series) {
        r.tag = route == Route::MeanField ? "T-NSV" : "T-SL";
        r.series = series;
        r.hbar = hbar;
        r.N = N;
        r.n = cfg.n;
        r.L = cfg.V.lipschitz_gradV();
        r.rate_name = route == Route::MeanField ? "Gamma" : "Lambda";
        r.rate = route == Route::MeanField ? Gam : Lam;
        r.report_tol = cfg.report_tol;
    };
    init(res.corollary, "corollary");
    init(res.gronwall, "gronwall");

    double D0 = 0;
    for (int i = 0; i < cfg.samples; ++i) {
        if (i > 0) {
            for (int s = 0; s < stride; ++s) {
                prop.step(mix.states);
                prop.step(probe);
                if (route == Route::MeanField)
                    vlasov_step_inplace(vl, cfg.V, cfg.dt);
                else
                    liouville_step_inplace(ens, cfg.V, cfg.dt);
            }
            mix.t += stride * cfg.dt;
        }
        const double t = i * stride * cfg.dt;
        const auto z = classical_nodes();

        DensityOperator R1{cfg.grid, mix.one_body_marginal(), hbar, std::nullopt};
        const std::vector<Particle> f = route == Route::MeanField ? vl : one_body_particles(ens);
        double dropped = 0;
        DiscreteMeasure H = husimi_measure(R1, kExactTransportLimit, &dropped);
        const double lhs = mk2_squared(particle_measure(f), H).cost / cfg.n;
        res.max_dropped_mass = std::max(res.max_dropped_mass, dropped);
        res.max_ratio = std::max(res.max_ratio, lhs / hbar);

        const double D = nbody_moment_functional(mix, prop, z);
        const double Dm = nbody_moment_functional_marginal(mix, z);
        res.max_reduction_defect = std::max(res.max_reduction_defect, std::abs(D - Dm));
        if (i == 0) D0 = D;

        CouplingCheck c = nbody_marginal_coupling(mix, z).check(R1);
        res.max_marginal_error = std::max({res.max_marginal_error, c.trace_error, c.sum_error});
        res.max_symmetry_defect =
            std::max(res.max_symmetry_defect, [&] {
                double d = 0;
                for (Eigen::Index I = 0; I < probe.rows(); ++I)
                    d = std::max(d, std::abs(probe(I, 0) - mix.states(perm[I], probe_rep)));
                return d;
            }());

        BoundRow row, g;
        row.t = g.t = t;
        row.lhs = lhs;
        g.lhs = D;
        if (route == Route::MeanField) {
            const double cons = consistency_term(cfg.V, N, t);
            row.rhs = D0 * std::exp(Gam * t) + cons + 0.5 * hbar;
            row.threshold = row.rhs;
            g.rhs = D0 * std::exp(Gam * t) + cons;
            g.threshold = g.rhs * (1 + cfg.report_tol);
        } else {
            row.rhs = 0.5 * hbar * (1 + std::exp(Lam * t));
            row.threshold = row.rhs * (1 + cfg.report_tol);
            g.rhs = D0 * std::exp(Lam * t);
            g.threshold = g.rhs * (1 + cfg.report_tol);
        }
        res.corollary.rows.push_back(row);
        res.gronwall.rows.push_back(g);
    }
    res.initial_term = D0;
    if (route == Route::MeanField) res.consistency_T = consistency_term(cfg.V, N, cfg.T);
    for (BoundReport* r : {&res.corollary, &res.gronwall}) {
        r->extras.push_back({"initial_term_upper", res.initial_term});
        if (route == Route::MeanField) r->extras.push_back({"consistency_term_T", res.consistency_T});
        r->extras.push_back({"max_dropped_mass", res.max_dropped_mass});
        r->extras.push_back({"max_marginal_error", res.max_marginal_error});
        r->extras.push_back({"max_symmetry_defect", res.max_symmetry_defect});
        r->extras.push_back({"max_reduction_defect", res.max_reduction_defect});
        r->extras.push_back({"max_lhs_over_hbar", res.max_ratio});
    }
    return res;
}

}  // namespace

NBodyResult verify_tnsv(const NBodyConfig& cfg)
{
    return verify_nbody(cfg, Route::MeanField);
}

NBodyResult verify_tsl(const NBodyConfig& cfg)
{
    return verify_nbody(cfg, Route::Liouville);
}

NCCSResult nccs_check(const CMat& R, const CMat& A, const CMat& B)
{
    require(R.rows() == R.cols() && A.rows() == R.rows() && A.cols() == R.cols() && B.rows() == R.rows() &&
                B.cols() == R.cols(),
            "matrices must share one square shape");
    NCCSResult r;
    r.lhs = (R * (A * B + B * A)).trace().real();
    r.rhs = (R * (A * A + B * B)).trace().real();
    r.scale = R.norm() * (A.squaredNorm() + B.squaredNorm());
    r.holds = r.lhs <= r.rhs + 1e-10 * std::max(1.0, r.scale);
    return r;
}

}  // namespace qcl
