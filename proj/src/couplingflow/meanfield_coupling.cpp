#include "qcl/couplingflow.hpp"

#include <cstdio>
#include <map>

namespace qcl {

CoupledTrajectory propagate_coupling_hartree(const CouplingField& Q0, const VlasovTrajectory& f_path,
                                             const HartreeTrajectory& R_path, const Potential& V,
                                             double marginal_tol)
{
    require(Q0.grid == R_path.grid, "coupling and Hartree run use different grids");
    require(std::abs(Q0.hbar - R_path.hbar) <= 1e-15 * R_path.hbar, "coupling and Hartree run use different hbar");
    require(!R_path.samples.empty(), "Hartree run has no samples");
    const auto& times = f_path.path.times;
    const double t_end = R_path.dt * ((static_cast<int>(R_path.samples.size()) - 1) * R_path.sample_every);
    require(!times.empty() && times.back() >= t_end - 1e-9, "classical path is shorter than the quantum run");

    // stack every distinct factor into one batch
    std::map<const CMat*, std::pair<Eigen::Index, Eigen::Index>> slot;
    Eigen::Index total = 0;
    for (const auto& b : Q0.blocks)
        if (b.factor && !slot.count(b.factor.get())) {
            slot[b.factor.get()] = {total, b.factor->cols()};
            total += b.factor->cols();
        }
    CMat cols(Q0.grid.n, total);
    for (const auto& [F, s] : slot)
        if (s.second > 0) cols.middleCols(s.first, s.second) = *F;

    std::vector<double> xs, xis;
    for (const auto& b : Q0.blocks) {
        xs.push_back(b.x);
        xis.push_back(b.xi);
    }

    CoupledTrajectory traj;
    int step = 0;
    double t_prev = 0;
    for (std::size_t i = 0; i < R_path.samples.size(); ++i) {
        const int target = static_cast<int>(i) * R_path.sample_every;
        const double t = target * R_path.dt;
        if (target > step) {
            R_path.propagate(cols, step, target);
            for (std::size_t k = 0; k < xs.size(); ++k) {
                auto z = characteristic_flow(xs[k], xis[k], t_prev, t, f_path.path, V);
                xs[k] = z.first;
                xis[k] = z.second;
            }
            step = target;
            t_prev = t;
        }

        CouplingField Q;
        Q.grid = Q0.grid;
        Q.hbar = Q0.hbar;
        std::map<const CMat*, std::shared_ptr<const CMat>> moved;
        for (const auto& [F, s] : slot) moved[F] = std::make_shared<const CMat>(cols.middleCols(s.first, s.second));
        for (std::size_t k = 0; k < Q0.blocks.size(); ++k) {
            const auto& b = Q0.blocks[k];
            CouplingBlock nb{xs[k], xis[k], b.p, b.factor ? moved[b.factor.get()] : nullptr, b.scale};
            Q.blocks.push_back(std::move(nb));
        }
        CouplingCheck c = Q.check(R_path.samples[i].R);
        if (c.trace_error > marginal_tol || c.sum_error > marginal_tol) {
            char buf[200];
            std::snprintf(buf, sizeof buf, "coupling marginals drifted at t=%.4g: trace %.3e, sum %.3e", t,
                          c.trace_error, c.sum_error);
            throw NumericalError(buf);
        }
        traj.times.push_back(t);
        traj.moment.push_back(Q.objective());
        traj.checks.push_back(c);
        traj.couplings.push_back(std::move(Q));
    }
    return traj;
}

std::vector<double> moment_functional(const CoupledTrajectory& traj)
{
    return traj.moment;
}

}  // namespace qcl
