#include "qcl/qdynamics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace qcl {

namespace {

class MeanField {
public:
    MeanField(const SpaceGrid& g, const Potential& V) : h_(g.h())
    {
        const int n = g.n;
        kernel_.resize(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) kernel_(a, b) = V.value(g.x(a) - g.x(b));
    }
    Vec apply(const Vec& rho) const { return kernel_ * rho * h_; }

private:
    Mat kernel_;
    double h_;
};

Vec rho_from_factor(const CMat& B, double h)
{
    return B.rowwise().squaredNorm() / h;
}

void kinetic(const SpaceGrid& g, double hbar, double dt, CMat& cols)
{
    const int n = g.n;
    CVec ph(n);
    for (int j = 0; j < n; ++j) {
        double a = -dt * hbar * g.k(j) * g.k(j) / 2;
        ph[j] = cplx(std::cos(a), std::sin(a)) / double(n);
    }
    const int batch = static_cast<int>(cols.cols());
    fft_forward(cols.data(), {n}, batch);
    for (int c = 0; c < batch; ++c) cols.col(c).array() *= ph.array();
    fft_backward(cols.data(), {n}, batch);
}

CVec phase_of(const Vec& U, double dt, double hbar)
{
    CVec p(U.size());
    for (Eigen::Index a = 0; a < U.size(); ++a) {
        double th = -dt / (2 * hbar) * U[a];
        p[a] = cplx(std::cos(th), std::sin(th));
    }
    return p;
}

void check_step(const Potential& V, double dt)
{
    require(dt > 0, "time step must be positive");
    if (dt * std::max(1.0, V.lipschitz_gradV()) > 0.01 + 1e-15)
        throw PreconditionError("time step violates dt*max(1,L) <= 0.01");
}

// one Strang step on either representation; returns the two half-step potentials
std::pair<Vec, Vec> strang(HartreeState& s, const MeanField& mf, double dt, const HartreeOptions& opt)
{
    const auto& g = s.R.grid;
    const double hbar = s.R.hbar, h = g.h();
    Vec Ua, Ub;
    if (s.factor) {
        CMat& B = *s.factor;
        Ua = mf.apply(rho_from_factor(B, h));
        CVec pa = phase_of(Ua, dt, hbar);
        for (Eigen::Index c = 0; c < B.cols(); ++c) B.col(c).array() *= pa.array();
        kinetic(g, hbar, dt, B);
        Ub = opt.refreeze ? mf.apply(rho_from_factor(B, h)) : Ua;
        CVec pb = phase_of(Ub, dt, hbar);
        for (Eigen::Index c = 0; c < B.cols(); ++c) B.col(c).array() *= pb.array();
    } else {
        CMat& R = s.R.matrix;
        Ua = mf.apply(rho_of(s.R));
        CVec pa = phase_of(Ua, dt, hbar);
        R = pa.asDiagonal() * R * pa.conjugate().asDiagonal();
        kinetic(g, hbar, dt, R);
        CMat A = R.adjoint();
        kinetic(g, hbar, dt, A);
        R = A.adjoint();
        Ub = opt.refreeze ? mf.apply(rho_of(s.R)) : Ua;
        CVec pb = phase_of(Ub, dt, hbar);
        R = pb.asDiagonal() * R * pb.conjugate().asDiagonal();
    }
    s.t += dt;
    return {std::move(Ua), std::move(Ub)};
}

void materialize(HartreeState& s)
{
    if (s.factor) {
        s.R.matrix = (*s.factor) * s.factor->adjoint();
        if (s.factor->cols() == 1)
            s.R.pure_factor = s.factor->col(0);
        else
            s.R.pure_factor.reset();
    } else {
        s.R.pure_factor.reset();
    }
}

}  // namespace

Vec rho_of(const DensityOperator& R)
{
    return R.matrix.diagonal().real() / R.grid.h();
}

Vec mean_field_potential(const SpaceGrid& g, const Potential& V, const Vec& rho)
{
    return MeanField(g, V).apply(rho);
}

HartreeState HartreeState::from_operator(const DensityOperator& R, const Potential& V, const HartreeOptions& opt)
{
    HartreeState s{R, 0.0, V, std::nullopt};
    if (R.pure_factor) {
        s.factor = CMat(*R.pure_factor);
        return s;
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(R.matrix);
    const Vec& ev = es.eigenvalues();
    const double cut = 1e-14 * std::max(ev.maxCoeff(), 1e-300);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (ev[k] > cut) keep.push_back(k);
    if (static_cast<int>(keep.size()) <= opt.max_factor_rank) {
        CMat B(R.grid.n, static_cast<Eigen::Index>(keep.size()));
        for (std::size_t c = 0; c < keep.size(); ++c)
            B.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(ev[keep[c]]);
        s.factor = std::move(B);
    }
    return s;
}

HartreeState HartreeState::from_factor(const SpaceGrid& g, double hbar, const CMat& B, const Potential& V,
                                       const HartreeOptions& opt)
{
    HartreeState s{DensityOperator::from_factor(g, hbar, B), 0.0, V, std::nullopt};
    if (B.cols() <= opt.max_factor_rank) s.factor = B;
    return s;
}

double hartree_energy(const DensityOperator& R, const Potential& V)
{
    CMat P2R = R.matrix;
    apply_momentum(R.grid, R.hbar, P2R, 2);
    double kin = 0.5 * P2R.trace().real();
    Vec rho = rho_of(R);
    Vec U = mean_field_potential(R.grid, V, rho);
    double pot = 0.5 * rho.dot(U) * R.grid.h();
    return kin + pot;
}

HartreeState hartree_step(const HartreeState& s, double dt, const HartreeOptions& opt)
{
    check_step(s.V, dt);
    HartreeState out = s;
    MeanField mf(s.R.grid, s.V);
    strang(out, mf, dt, opt);
    materialize(out);
    return out;
}

void HartreeTrajectory::propagate(CMat& cols, int from, int to) const
{
    require(from >= 0 && to <= steps() && from <= to, "step range outside the recorded run");
    for (int k = from; k < to; ++k) {
        CVec pa = phase_of(first_half[k], dt, hbar);
        for (Eigen::Index c = 0; c < cols.cols(); ++c) cols.col(c).array() *= pa.array();
        kinetic(grid, hbar, dt, cols);
        CVec pb = phase_of(second_half[k], dt, hbar);
        for (Eigen::Index c = 0; c < cols.cols(); ++c) cols.col(c).array() *= pb.array();
    }
}

HartreeTrajectory hartree_run(const HartreeState& s0, double dt, int steps, int sample_every,
                              const HartreeOptions& opt)
{
    check_step(s0.V, dt);
    require(steps >= 0 && sample_every >= 1, "bad step counts");
    HartreeTrajectory tr;
    tr.grid = s0.R.grid;
    tr.hbar = s0.R.hbar;
    tr.dt = dt;
    tr.sample_every = sample_every;
    MeanField mf(s0.R.grid, s0.V);
    HartreeState s = s0;
    materialize(s);
    tr.samples.push_back(s);
    for (int k = 1; k <= steps; ++k) {
        auto [ua, ub] = strang(s, mf, dt, opt);
        tr.first_half.push_back(std::move(ua));
        tr.second_half.push_back(std::move(ub));
        if (k % sample_every == 0) {
            s.t = k * dt;
            materialize(s);
            tr.samples.push_back(s);
        }
    }
    return tr;
}

double hartree_boundary_mass(const DensityOperator& R, int margin)
{
    const int n = R.grid.n;
    double pos = 0;
    for (int a = 0; a < n; ++a)
        if (a < margin || a >= n - margin) pos += R.matrix(a, a).real();
    // momentum diagonal of F R F^* / n
    CMat A = R.matrix;
    fft_forward(A.data(), {n}, n);
    CMat B = A.adjoint();
    fft_forward(B.data(), {n}, n);
    double mom = 0;
    for (int j = n / 2 - margin; j < n / 2 + margin; ++j) mom += std::abs(B(j, j).real()) / n;
    return pos + mom;
}

}  // namespace qcl
