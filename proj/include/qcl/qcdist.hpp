#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "qcl/common.hpp"
#include "qcl/hilbert.hpp"
#include "qcl/transport.hpp"

namespace qcl {

// The five numbers trace(c(z) Q) depends on:
// trace Q, trace XQ, trace X^2 Q, trace PQ, trace P^2 Q.
struct CostMoments {
    double tr = 0, x = 0, x2 = 0, p = 0, p2 = 0;

    // trace(c(z) Q) with c(z) = 1/2 ((x - X)^2 + (xi - P)^2)
    double pair(double x0, double xi0) const
    {
        return 0.5 * ((x0 * x0 + xi0 * xi0) * tr - 2 * x0 * x + x2 - 2 * xi0 * p + p2);
    }
    CostMoments& operator+=(const CostMoments& o)
    {
        tr += o.tr, x += o.x, x2 += o.x2, p += o.p, p2 += o.p2;
        return *this;
    }
    CostMoments scaled(double s) const { return {s * tr, s * x, s * x2, s * p, s * p2}; }
};

CostMoments cost_moments(const SpaceGrid& g, double hbar, const CMat& Q);
// moments of B B^* from the columns of B
CostMoments factor_moments(const SpaceGrid& g, double hbar, const CMat& B);

// matrix of c(x, xi) in the grid basis
CMat cost_matrix(const SpaceGrid& g, double hbar, double x, double xi);

// c(z_k) on every cell centre of a phase grid (or an explicit node list)
struct CostOperatorField {
    SpaceGrid grid;
    double hbar = 1;
    std::vector<double> xs, xis;

    static CostOperatorField on_grid(const PhaseGrid& pg, const SpaceGrid& g, double hbar);
    static CostOperatorField on_nodes(const DiscreteMeasure& nodes, const SpaceGrid& g, double hbar);

    int size() const { return static_cast<int>(xs.size()); }
    CMat matrix(int k) const { return cost_matrix(grid, hbar, xs[k], xis[k]); }
    double ground_eigenvalue(int k) const;
    double pairing(int k, const CMat& Q) const { return cost_moments(grid, hbar, Q).pair(xs[k], xis[k]); }
};

CostOperatorField cost_field(const PhaseGrid& pg, const SpaceGrid& g, double hbar);

// Q_k = scale * F F^*; the factor may be shared between cells.
struct CouplingBlock {
    double x = 0, xi = 0, p = 0;
    std::shared_ptr<const CMat> factor;
    double scale = 1;
};

struct CouplingCheck {
    double trace_error = 0;  // max_k |trace Q_k - p_k|
    double sum_error = 0;    // ||sum Q_k - R||_op
    double min_eig = 0;      // min over cells (>= 0 for factor form)
    bool ok(double trace_tol = 1e-8, double sum_tol = 1e-7, double eig_tol = 1e-9) const
    {
        return trace_error <= trace_tol && sum_error <= sum_tol && min_eig >= -eig_tol;
    }
};

struct CouplingField {
    SpaceGrid grid;
    double hbar = 1;
    std::vector<CouplingBlock> blocks;

    int size() const { return static_cast<int>(blocks.size()); }
    CMat block_matrix(int k) const;
    CMat quantum_marginal() const;
    Vec classical_marginal() const;
    CouplingCheck check(const DensityOperator& R) const;
    // throws NumericalError with the offending residual
    void validate(const DensityOperator& R, double trace_tol = 1e-8, double sum_tol = 1e-7) const;
    // sum_k trace(c(z_k) Q_k)
    double objective() const;
};

// Q_k = p_k R
CouplingField trivial_coupling(const DiscreteMeasure& p, const DensityOperator& R);
// Q_k = sum_j plan_kj |w_j><w_j| with w_j the support of mu
CouplingField toeplitz_lift_coupling(const DiscreteMeasure& p, const DiscreteMeasure& mu, const TransportPlan& plan,
                                     double hbar, const SpaceGrid& g);

struct UpperBound {
    double value = 0;  // squared
    std::string strategy;
    double transport_cost = std::numeric_limits<double>::quiet_NaN();  // when lifted
};

// min objective over the given couplings, each validated against R
UpperBound ehbar_upper(const std::vector<std::pair<std::string, CouplingField>>& candidates, const DensityOperator& R);
// trivial coupling, plus the Toeplitz lift when R is the quantization of `symbol`
UpperBound ehbar_upper(const DiscreteMeasure& p, const DensityOperator& R, const DiscreteMeasure* symbol = nullptr);

struct LowerBound {
    double value = 0;  // squared, floored at hbar/2
    double transport_cost = 0;
    bool exact_transport = true;
    double dropped_mass = 0;
};

// max(hbar/2, mk2(p, Husimi(R))^2 - hbar/2), Husimi binned on pg
LowerBound ehbar_lower(const DiscreteMeasure& p, const DensityOperator& R, const PhaseGrid& pg);

struct TinyOptions {
    double tol = 1e-6;      // primal residual
    double stall = 1e-5;    // relative objective change
    int max_iter = 100000;
    double range_cutoff = 1e-12;
};

struct TinyResult {
    double value = 0;          // objective of the returned feasible coupling
    CouplingField coupling;
    int iterations = 0;
    double primal_residual = 0, dual_residual = 0;
    double blend = 0;          // weight of the trivial coupling mixed in for feasibility
    int range_dim = 0;
    bool converged = false;
};

TinyResult ehbar_exact_tiny(const DiscreteMeasure& p, const DensityOperator& R, const TinyOptions& opt = {});

struct BoundInterval {
    double t = 0, lower = 0, upper = 0;
    double exact = std::numeric_limits<double>::quiet_NaN();
    std::string flags;
};

void write_bound_intervals_csv(const std::string& path, const std::vector<BoundInterval>& rows);

}  // namespace qcl
