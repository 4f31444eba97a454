#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "qcl/hilbert.hpp"
#include "qcl/phasespace.hpp"

namespace qcl {

// rho_a = r(x_a, x_a), so sum_a rho_a h = trace R
Vec rho_of(const DensityOperator& R);
// (V * rho)(x_a) on the space grid
Vec mean_field_potential(const SpaceGrid& g, const Potential& V, const Vec& rho);

struct HartreeOptions {
    // recompute rho after the kinetic substep for the second half step
    bool refreeze = true;
    // factorized propagation when the rank is at most this
    int max_factor_rank = 64;
};

struct HartreeState {
    DensityOperator R;
    double t = 0;
    Potential V;
    std::optional<CMat> factor;  // R = B B^* when present

    static HartreeState from_operator(const DensityOperator& R, const Potential& V, const HartreeOptions& opt = {});
    static HartreeState from_factor(const SpaceGrid& g, double hbar, const CMat& B, const Potential& V,
                                    const HartreeOptions& opt = {});
};

double hartree_energy(const DensityOperator& R, const Potential& V);
HartreeState hartree_step(const HartreeState& s, double dt, const HartreeOptions& opt = {});

// Splitting data of a recorded run; replaying it applies the same unitary to
// arbitrary columns, which is how coupling payloads are transported.
struct HartreeTrajectory {
    SpaceGrid grid;
    double hbar = 1;
    double dt = 0;
    std::vector<Vec> first_half, second_half;  // mean-field potentials per step
    std::vector<HartreeState> samples;         // every `sample_every` steps, including t=0
    int sample_every = 1;

    int steps() const { return static_cast<int>(first_half.size()); }
    // applies steps [from, to) to the columns
    void propagate(CMat& cols, int from, int to) const;
};

HartreeTrajectory hartree_run(const HartreeState& s0, double dt, int steps, int sample_every,
                              const HartreeOptions& opt = {});

// mass within `margin` cells of the box edge, in position and in momentum
double hartree_boundary_mass(const DensityOperator& R, int margin = 3);

// --- N-body ---
struct NBodyState {
    SpaceGrid grid;
    int N = 1;
    double hbar = 1;
    double t = 0;
    Potential V;
    CVec coeffs;  // n^N coefficients, body 1 most significant

    double norm() const { return coeffs.norm(); }
    // product of one-body coefficient vectors
    static NBodyState product(const SpaceGrid& g, double hbar, const Potential& V, const std::vector<CVec>& one_body);
};

// Precomputed splitting factors for a fixed (grid, N, V, hbar, dt).
class NBodyPropagator {
public:
    NBodyPropagator(const SpaceGrid& g, int N, const Potential& V, double hbar, double dt);
    // one Strang step on each column (each a full N-body coefficient vector)
    void step(CMat& cols) const;
    double energy(const CVec& coeffs) const;
    // one-body moments of body j: <Y_j>, <Y_j^2>, <P_j>, <P_j^2>
    std::array<double, 4> body_moments(const CVec& coeffs, int j) const;
    const Vec& pair_potential() const { return pair_; }
    int dim() const { return static_cast<int>(pair_.size()); }
    double dt() const { return dt_; }

private:
    SpaceGrid g_;
    int N_;
    double hbar_, dt_;
    Vec pair_;         // (1/2N) sum_{j,k} V(x_j - x_k)
    Vec k2_;           // |k|^2 in FFT order
    CVec half_phase_;  // exp(-i dt/(2 hbar) pair)
    CVec kin_phase_;   // exp(-i dt hbar |k|^2 / 2) / n^N
};

// budget on n^N amplitudes for a single state
constexpr long kNBodyAmplitudeBudget = 1L << 21;

NBodyState nbody_step(const NBodyState& s, double dt);
DensityOperatorN marginal_operator(const NBodyState& s, int n);
// n-body marginal of a coefficient vector without forming the N-body matrix
CMat marginal_matrix(const CVec& coeffs, int n_x, int N, int n);

// --- checkpoints ---
struct CheckpointRow {
    double t, trace, purity, energy;
};

// writes op_<step>.bin, op_<step>.eig.csv and appends to manifest.csv
class CheckpointWriter {
public:
    CheckpointWriter(std::string dir, int every);
    void maybe_write(int step, const HartreeState& s);
    const std::vector<CheckpointRow>& rows() const { return rows_; }
    std::vector<std::string> files() const { return files_; }

private:
    std::string dir_;
    int every_;
    std::vector<CheckpointRow> rows_;
    std::vector<std::string> files_;
};

}  // namespace qcl
