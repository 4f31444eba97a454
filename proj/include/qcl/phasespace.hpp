#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcl/common.hpp"

namespace qcl {

// Uniform cell-centred grid on [x_min,x_max) x [xi_min,xi_max).
struct PhaseGrid {
    int d = 1;
    double x_min = -1, x_max = 1;
    int n_x = 2;
    double xi_min = -1, xi_max = 1;
    int n_xi = 2;

    void validate() const;
    double hx() const { return (x_max - x_min) / n_x; }
    double hxi() const { return (xi_max - xi_min) / n_xi; }
    double cell_volume() const { return hx() * hxi(); }
    int cells() const { return n_x * n_xi; }
    double x_center(int i) const { return x_min + (i + 0.5) * hx(); }
    double xi_center(int j) const { return xi_min + (j + 0.5) * hxi(); }
    int index(int i, int j) const { return i * n_xi + j; }
    bool operator==(const PhaseGrid&) const = default;
};

struct Particle {
    double x = 0, xi = 0, w = 0;
};

// Cell masses on a PhaseGrid, optionally with the weighted particles they were
// deposited from. Weights are probability masses, not densities.
struct PhaseDensity {
    PhaseGrid grid;
    std::vector<double> weights;
    std::optional<std::vector<Particle>> particles;

    double total_mass() const;
    void validate(double mass_tol = 1e-9) const;

    // Cell masses of a Gaussian, integrated exactly over each cell and renormalized.
    static PhaseDensity gaussian(const PhaseGrid& g, double x0, double xi0, double sx, double sxi);
    // Clipped Gaussian deposition, bandwidth one cell, 3 cells cut-off.
    static PhaseDensity from_particles(const PhaseGrid& g, std::vector<Particle> ps);
    static PhaseDensity point_mass(const PhaseGrid& g, double x, double xi);
};

class Potential {
public:
    enum class Kind { Cosine, GaussianBump, Zero };

    static Potential cosine(double amplitude = 1.0, double frequency = 1.0);
    static Potential gaussian_bump(double amplitude, double width);
    static Potential zero();
    // "cos", "cos:<a>:<k>", "gauss:<a>:<s>", "zero"
    static Potential parse(const std::string& tag);

    double value(double x) const;
    double gradient(double x) const;
    double sup_V() const { return sup_v_; }
    double sup_gradV() const { return sup_g_; }
    double lipschitz_gradV() const { return lip_; }
    Kind kind() const { return kind_; }
    std::string tag() const;

    // Sampled evenness, Lipschitz and sup checks; throws PreconditionError.
    void check_hypotheses(double radius = 10.0, int samples = 2001) const;

private:
    Kind kind_ = Kind::Zero;
    double a_ = 0, k_ = 1;
    double sup_v_ = 0, sup_g_ = 0, lip_ = 0;
};

// Gronwall rates built from L = Lip(grad V).
double lambda_rate(const Potential& V);  // 1 + max(1, 4 L^2)
double gamma_rate(const Potential& V);   // 2 + max(4 L^2, 1)

// Weighted N-particle samples; sample s occupies x[s*N .. s*N+N).
struct ClassicalEnsembleN {
    int N = 1;
    std::vector<double> x, xi, w;

    std::size_t n_samples() const { return w.size(); }
    void validate(double mass_tol = 1e-9) const;

    // All ordered N-tuples of the one-body nodes, product weights.
    static ClassicalEnsembleN product(const std::vector<Particle>& one_body, int N);
    // Seeded Gaussian samples, then every label permutation added with weight 1/N!.
    static ClassicalEnsembleN sampled_gaussian(int N, std::size_t count, double x0, double xi0,
                                               double sx, double sxi, std::uint64_t seed);
    ClassicalEnsembleN permuted(const std::vector<int>& sigma) const;
    // Sums weights of identical samples; output sorted lexicographically.
    ClassicalEnsembleN merged() const;
};

// Lattice discretization of a Gaussian: nodes_per_axis^2 nodes spanning +-span sigmas.
std::vector<Particle> lattice_gaussian(double x0, double xi0, double sx, double sxi,
                                       int nodes_per_axis, double span = 2.0);

// (grad V * rho)(x) for the spatial marginal of p; the force is minus this.
double mean_field_force(const PhaseDensity& p, const Potential& V, double x);
double mean_field_force(const std::vector<Particle>& ps, const Potential& V, double x);

double second_moment(const PhaseDensity& p);
double second_moment(const std::vector<Particle>& ps);
double vlasov_energy(const std::vector<Particle>& ps, const Potential& V);

// One velocity-Verlet step with the field recomputed after the drift.
void vlasov_step_inplace(std::vector<Particle>& ps, const Potential& V, double dt);
PhaseDensity vlasov_step(const PhaseDensity& p, const Potential& V, double dt);

// Particle positions recorded on a uniform time grid; the field at time
// times[k] is generated by (xs[k], ws).
struct RhoPath {
    std::vector<double> times;
    std::vector<std::vector<double>> xs;
    std::vector<double> ws;

    double field(const Potential& V, std::size_t k, double x) const;
};

struct VlasovTrajectory {
    RhoPath path;
    std::vector<std::vector<Particle>> snapshots;  // at every path time
    std::vector<double> energy;
    std::vector<double> m2;
};

VlasovTrajectory vlasov_run(std::vector<Particle> ps, const Potential& V, double dt, int steps);

// Z(t,s,z0) along the stored field; velocity Verlet aligned to the path nodes.
std::pair<double, double> characteristic_flow(double x0, double xi0, double s, double t,
                                              const RhoPath& path, const Potential& V);

double liouville_energy(const ClassicalEnsembleN& e, const Potential& V, std::size_t sample);
void liouville_step_inplace(ClassicalEnsembleN& e, const Potential& V, double dt);
ClassicalEnsembleN liouville_step(const ClassicalEnsembleN& e, const Potential& V, double dt);

ClassicalEnsembleN marginal_classical(const ClassicalEnsembleN& e, int n);
std::vector<Particle> one_body_particles(const ClassicalEnsembleN& e);

// Mass of particles within `margin` cells of the grid edge (or outside it).
double boundary_mass(const PhaseGrid& g, const std::vector<Particle>& ps, int margin = 3);

void write_density_csv(const std::string& path, const PhaseDensity& p);
PhaseDensity read_density_csv(const std::string& path);
void write_particles_csv(const std::string& path, const std::vector<Particle>& ps);
std::vector<Particle> read_particles_csv(const std::string& path);

}  // namespace qcl
