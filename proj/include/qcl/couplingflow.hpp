#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qcl/common.hpp"
#include "qcl/hilbert.hpp"
#include "qcl/phasespace.hpp"
#include "qcl/qcdist.hpp"
#include "qcl/qdynamics.hpp"
#include "qcl/transport.hpp"

namespace qcl {

// ---------------------------------------------------------------------------
// reports

struct BoundRow {
    double t = 0;
    double lhs = 0;
    double rhs = 0;        // inequality right-hand side, no tolerance
    double threshold = 0;  // what lhs is compared against (rhs with the tolerance applied)
    double margin() const { return threshold - lhs; }
    bool pass() const { return lhs <= threshold; }
};

struct BoundReport {
    std::string tag;     // T-HV, T-NSV, T-SL
    std::string series;  // "corollary", "gronwall", ...
    double hbar = 0;
    int N = 1, n = 1;
    double L = 0;
    std::string rate_name;  // "Lambda" or "Gamma"
    double rate = 0;
    double report_tol = 0;
    std::string config_hash;
    std::vector<BoundRow> rows;
    std::vector<std::pair<std::string, double>> extras;

    bool pass() const;
    // min over samples of (threshold - lhs) / threshold
    double worst_relative_margin() const;
    std::string summary() const;
    // <stem>.csv (t,lhs,rhs,margin,pass) and <stem>.dat; returns both paths
    std::vector<std::string> write(const std::string& stem) const;
};

// ---------------------------------------------------------------------------
// mean-field coupling flow

struct CoupledTrajectory {
    std::vector<double> times;
    std::vector<CouplingField> couplings;
    std::vector<double> moment;  // E(t_i) = sum_k trace(c(z_k) Q_k)
    std::vector<CouplingCheck> checks;
};

// Q(t, Z(t,0,z)) = M(t) Q0(z) M(t)^*: block nodes ride the characteristics of
// the stored classical path, factors are replayed through the recorded
// Hartree splitting. Samples are the Hartree trajectory samples.
CoupledTrajectory propagate_coupling_hartree(const CouplingField& Q0, const VlasovTrajectory& f_path,
                                             const HartreeTrajectory& R_path, const Potential& V,
                                             double marginal_tol = 5e-6);

std::vector<double> moment_functional(const CoupledTrajectory& traj);

// ---------------------------------------------------------------------------
// N-body coherent mixtures

// R_N = sum_K w_K |Z_K><Z_K| over ordered N-tuples K of one-body nodes,
// |Z_K> = |z_k1> x ... x |z_kN>. Only sorted tuples are propagated; the
// others follow by relabeling.
struct NBodyMixture {
    SpaceGrid grid;
    int N = 1;
    double hbar = 1;
    std::vector<Particle> nodes;
    std::vector<std::vector<int>> reps;  // sorted tuples
    std::vector<double> weight;          // w_K of one ordered tuple in the orbit
    std::vector<double> orbit;           // ordered tuples per sorted tuple
    CMat states;                         // n^N x reps
    double t = 0;

    static NBodyMixture toeplitz(const SpaceGrid& g, int N, double hbar, const std::vector<Particle>& nodes);
    void advance(const NBodyPropagator& prop, int steps);
    // one-body marginal of the symmetric mixture
    CMat one_body_marginal() const;
    // trace of the full mixture
    double trace() const;
};

// reduced density matrix of body j for one N-body coefficient vector
CMat body_marginal(const CVec& coeffs, int n_x, int N, int j);

// D(t) = sum_K w_K (1/N) sum_j trace(c(z_{K,j}) Q_K), classical nodes given
// per sorted tuple and body.
double nbody_moment_functional(const NBodyMixture& mix, const NBodyPropagator& prop,
                               const std::vector<std::vector<std::pair<double, double>>>& classical);
// same quantity through the one-body marginals of each payload
double nbody_moment_functional_marginal(const NBodyMixture& mix,
                                        const std::vector<std::vector<std::pair<double, double>>>& classical);
// one-body marginal coupling: blocks at z_{K,j} carrying the body-j marginals
CouplingField nbody_marginal_coupling(const NBodyMixture& mix,
                                      const std::vector<std::vector<std::pair<double, double>>>& classical);

// ---------------------------------------------------------------------------
// stability bound verifications

// Husimi cell masses on a window of +-8 standard deviations around the mean of
// R, at most max_cells kept cells; dropped gets the mass lost to the window and
// to the 1e-12 cell cut-off
DiscreteMeasure husimi_measure(const DensityOperator& R, int max_cells = 2048, double* dropped = nullptr);

struct GaussianData {
    double x0 = 0, xi0 = 0, sx = 0.5, sxi = 0.5;
    int nodes_per_axis = 5;
    double span = 2.0;
    std::vector<Particle> lattice() const { return lattice_gaussian(x0, xi0, sx, sxi, nodes_per_axis, span); }
};

struct THVConfig {
    double hbar = 0.25;
    Potential V = Potential::cosine();
    GaussianData data;
    SpaceGrid grid{1, -8, 8, 128, true};
    double T = 2.0;
    int samples = 21;
    double dt = 0.01;
    double report_tol = 0.05;
};

struct THVResult {
    BoundReport corollary;  // mk2(f, Husimi R)^2 against e^{Lt}(d0 + hbar/2) + hbar/2
    BoundReport gronwall;   // E(t) against e^{Lt} E(0)
    CoupledTrajectory coupling;
    double initial_distance = 0;  // mk2(f_in, mu_in)^2
    double max_dropped_mass = 0;
    double max_boundary_mass = 0;
    double max_marginal_error = 0;
};

THVResult verify_thv(const THVConfig& cfg);

struct NBodyConfig {
    int N = 2;
    int n = 1;
    double hbar = 0.5;
    Potential V = Potential::cosine();
    // narrow enough for the default box at hbar = 0.5
    GaussianData data{0, 0, 0.1, 0.1, 3, 2.0};
    SpaceGrid grid{1, -6, 6, 32, true};
    double T = 1.5;
    int samples = 16;
    double dt = 0.01;
    double report_tol = 0.05;
};

struct NBodyResult {
    BoundReport corollary;
    BoundReport gronwall;
    double consistency_T = 0;  // consistency term at the horizon (T-NSV)
    double initial_term = 0;   // (1/N) E^2 at t=0, Toeplitz-lift upper bound
    double max_dropped_mass = 0;
    double max_marginal_error = 0;
    double max_symmetry_defect = 0;
    double max_reduction_defect = 0;
    double max_ratio = 0;  // max_t lhs / hbar
};

NBodyResult verify_tnsv(const NBodyConfig& cfg);
NBodyResult verify_tsl(const NBodyConfig& cfg);

// consistency term 4 |grad V|^2 (e^{Gt} - 1) / ((N - 1) G)
double consistency_term(const Potential& V, int N, double t);

struct NCCSResult {
    double lhs = 0, rhs = 0, scale = 0;
    bool holds = false;
};
// trace(R(AB + BA)) <= trace(R(A^2 + B^2)) within 1e-10 scale
NCCSResult nccs_check(const CMat& R, const CMat& A, const CMat& B);

}  // namespace qcl
