#include "qcl/qcdist.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>

namespace qcl {

UpperBound ehbar_upper(const std::vector<std::pair<std::string, CouplingField>>& candidates, const DensityOperator& R)
{
    if (candidates.empty()) throw PreconditionError("no feasible coupling available for the upper bound");
    UpperBound best;
    best.value = std::numeric_limits<double>::infinity();
    for (const auto& [name, Q] : candidates) {
        Q.validate(R);
        double v = Q.objective();
        if (v < best.value) {
            best.value = v;
            best.strategy = name;
        }
    }
    return best;
}

UpperBound ehbar_upper(const DiscreteMeasure& p, const DensityOperator& R, const DiscreteMeasure* symbol)
{
    std::vector<std::pair<std::string, CouplingField>> cands;
    cands.emplace_back("trivial", trivial_coupling(p, R));
    double lifted_cost = std::numeric_limits<double>::quiet_NaN();
    if (symbol) {
        std::vector<Particle> nodes;
        for (Eigen::Index j = 0; j < symbol->size(); ++j)
            nodes.push_back({symbol->points(j, 0), symbol->points(j, 1), symbol->masses[j]});
        CMat diff = toeplitz_quantize(nodes, R.hbar, R.grid).matrix - R.matrix;
        Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
        double err = es.eigenvalues().cwiseAbs().maxCoeff();
        if (err > 1e-7) throw PreconditionError("operator is not the Toeplitz quantization of the given symbol");
        TransportResult t = mk2_squared(p, *symbol);
        if (!t.exact) throw PreconditionError("Toeplitz lift needs an exact transport plan");
        lifted_cost = t.cost;
        cands.emplace_back("toeplitz-lift", toeplitz_lift_coupling(p, *symbol, t.plan, R.hbar, R.grid));
    }
    UpperBound ub = ehbar_upper(cands, R);
    ub.transport_cost = lifted_cost;
    return ub;
}

LowerBound ehbar_lower(const DiscreteMeasure& p, const DensityOperator& R, const PhaseGrid& pg)
{
    PhaseDensity H = husimi(R, pg);
    LowerBound lb;
    DiscreteMeasure h = DiscreteMeasure::from_density(H, 1e-12, &lb.dropped_mass);
    TransportResult t = mk2_squared(p, h);
    lb.transport_cost = t.cost;
    lb.exact_transport = t.exact;
    lb.value = std::max(0.5 * R.hbar, t.cost - 0.5 * R.hbar);
    return lb;
}

}  // namespace qcl
