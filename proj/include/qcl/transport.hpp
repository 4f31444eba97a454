#pragma once

#include <string>
#include <vector>

#include "qcl/common.hpp"
#include "qcl/phasespace.hpp"

namespace qcl {

// Finitely supported measure on R^dim (dim = 2 per body: positions then momenta
// are interleaved per body as (x_1, xi_1, x_2, xi_2, ...)).
struct DiscreteMeasure {
    int dim = 2;
    Mat points;  // count x dim
    Vec masses;

    Eigen::Index size() const { return masses.size(); }
    void validate(double tol = 1e-10) const;

    // cells below `drop_below` are discarded and the rest renormalized
    static DiscreteMeasure from_density(const PhaseDensity& p, double drop_below = 1e-12, double* dropped = nullptr);
    static DiscreteMeasure from_particles(const std::vector<Particle>& ps, double drop_below = 0.0,
                                          double* dropped = nullptr);
    static DiscreteMeasure from_ensemble(const ClassicalEnsembleN& e);
    // identical support points merged, zero masses removed
    DiscreteMeasure deduplicated() const;
};

// half squared Euclidean distance, the canonical cost of this library
double half_sq_dist(const DiscreteMeasure& a, Eigen::Index i, const DiscreteMeasure& b, Eigen::Index j);

struct PlanEntry {
    int i, j;
    double mass;
};

struct TransportPlan {
    int rows = 0, cols = 0;
    std::vector<PlanEntry> entries;
    double cost = 0;  // sum pi_ij * (1/2)|z_i - w_j|^2

    Mat dense() const;
    // max deviation of row/column sums from the given masses
    double marginal_error(const DiscreteMeasure& a, const DiscreteMeasure& b) const;
    double recompute_cost(const DiscreteMeasure& a, const DiscreteMeasure& b) const;
};

struct TransportResult {
    double cost = 0;  // with the 1/2 convention
    TransportPlan plan;
    bool exact = true;
    double epsilon = 0;  // entropic regularization when !exact
    Vec u, v;            // Kantorovich potentials when exact
    long pivots = 0;

    // conventional W2^2 without the 1/2, for display only
    double w2_squared() const { return 2.0 * cost; }
};

constexpr Eigen::Index kExactTransportLimit = 2048;

TransportResult mk2_squared(const DiscreteMeasure& a, const DiscreteMeasure& b);

// exact solver on an explicit cost matrix
TransportResult network_simplex(const Vec& a, const Vec& b, const Mat& C);

// debiased entropic estimate S_eps = OT_eps(a,b) - (OT_eps(a,a) + OT_eps(b,b)) / 2
TransportResult sinkhorn_divergence(const DiscreteMeasure& a, const DiscreteMeasure& b, double epsilon);

struct DualCertificate {
    Vec u, v;
    double primal = 0, dual = 0;
    double max_violation = 0;  // max_ij (u_i + v_j - C_ij)_+
    bool from_slackness = true;  // false when the plan was not optimal
    double gap() const { return primal - dual; }
};

DualCertificate dual_certificate(const DiscreteMeasure& a, const DiscreteMeasure& b, const TransportPlan& plan);

// sum of exact costs over factor pairs of two product measures
double tensor_mk2_bound(const std::vector<DiscreteMeasure>& a_factors, const std::vector<DiscreteMeasure>& b_factors);
// explicit product measure (for small oracles)
DiscreteMeasure tensor_product(const std::vector<DiscreteMeasure>& factors);

void write_plan_csv(const std::string& path, const TransportPlan& plan);

}  // namespace qcl
