#include "qcl/qdynamics.hpp"

#include <cmath>

namespace qcl {

namespace {

long ipow(int b, int e)
{
    long r = 1;
    for (int k = 0; k < e; ++k) r *= b;
    return r;
}

}  // namespace

NBodyState NBodyState::product(const SpaceGrid& g, double hbar, const Potential& V, const std::vector<CVec>& one_body)
{
    require(!one_body.empty(), "product state needs at least one factor");
    CVec c = one_body[0];
    for (std::size_t k = 1; k < one_body.size(); ++k) {
        const CVec& f = one_body[k];
        CVec next(c.size() * f.size());
        for (Eigen::Index a = 0; a < c.size(); ++a) next.segment(a * f.size(), f.size()) = c[a] * f;
        c = std::move(next);
    }
    NBodyState s;
    s.grid = g;
    s.N = static_cast<int>(one_body.size());
    s.hbar = hbar;
    s.V = V;
    s.coeffs = std::move(c);
    return s;
}

NBodyPropagator::NBodyPropagator(const SpaceGrid& g, int N, const Potential& V, double hbar, double dt)
    : g_(g), N_(N), hbar_(hbar), dt_(dt)
{
    g.validate();
    require(N >= 1, "N-body propagator needs N >= 1");
    require(hbar > 0, "hbar must be positive");
    const long dim = ipow(g.n, N);
    if (dim > kNBodyAmplitudeBudget) throw PreconditionError("N-body grid exceeds the memory budget");
    pair_.resize(dim);
    k2_.resize(dim);
    half_phase_.resize(dim);
    kin_phase_.resize(dim);
    std::vector<int> idx(N, 0);
    for (long I = 0; I < dim; ++I) {
        long r = I;
        for (int k = N - 1; k >= 0; --k) {
            idx[k] = static_cast<int>(r % g.n);
            r /= g.n;
        }
        double v = 0, kk = 0;
        for (int j = 0; j < N; ++j) {
            kk += g.k(idx[j]) * g.k(idx[j]);
            for (int l = 0; l < N; ++l) v += V.value(g.x(idx[j]) - g.x(idx[l]));
        }
        pair_[I] = v / (2.0 * N);
        k2_[I] = kk;
        double a = -dt / (2 * hbar) * pair_[I];
        half_phase_[I] = cplx(std::cos(a), std::sin(a));
        double b = -dt * hbar * kk / 2;
        kin_phase_[I] = cplx(std::cos(b), std::sin(b)) / double(dim);
    }
}

void NBodyPropagator::step(CMat& cols) const
{
    require(cols.rows() == pair_.size(), "state does not match propagator");
    std::vector<int> dims(N_, g_.n);
    const int batch = static_cast<int>(cols.cols());
    for (int c = 0; c < batch; ++c) cols.col(c).array() *= half_phase_.array();
    fft_forward(cols.data(), dims, batch);
    for (int c = 0; c < batch; ++c) cols.col(c).array() *= kin_phase_.array();
    fft_backward(cols.data(), dims, batch);
    for (int c = 0; c < batch; ++c) cols.col(c).array() *= half_phase_.array();
}

double NBodyPropagator::energy(const CVec& coeffs) const
{
    CMat f = coeffs;
    fft_forward(f.data(), std::vector<int>(N_, g_.n), 1);
    double kin = 0;
    for (Eigen::Index I = 0; I < f.rows(); ++I) kin += std::norm(f(I, 0)) * k2_[I];
    kin *= hbar_ * hbar_ / 2 / double(f.rows());
    double pot = (coeffs.cwiseAbs2().array() * pair_.array()).sum();
    return kin + pot;
}

std::array<double, 4> NBodyPropagator::body_moments(const CVec& coeffs, int j) const
{
    require(j >= 0 && j < N_, "body index out of range");
    const long stride = ipow(g_.n, N_ - 1 - j);
    std::array<double, 4> m{0, 0, 0, 0};
    for (Eigen::Index I = 0; I < coeffs.size(); ++I) {
        int a = static_cast<int>((I / stride) % g_.n);
        double p = std::norm(coeffs[I]), x = g_.x(a);
        m[0] += p * x;
        m[1] += p * x * x;
    }
    CMat f = coeffs;
    fft_forward(f.data(), std::vector<int>(N_, g_.n), 1);
    const double scale = 1.0 / double(f.rows());
    for (Eigen::Index I = 0; I < f.rows(); ++I) {
        int a = static_cast<int>((I / stride) % g_.n);
        double p = std::norm(f(I, 0)) * scale, k = hbar_ * g_.k(a);
        m[2] += p * k;
        m[3] += p * k * k;
    }
    return m;
}

NBodyState nbody_step(const NBodyState& s, double dt)
{
    require(dt > 0, "time step must be positive");
    if (dt * std::max(1.0, s.V.lipschitz_gradV()) > 0.01 + 1e-15)
        throw PreconditionError("time step violates dt*max(1,L) <= 0.01");
    NBodyPropagator prop(s.grid, s.N, s.V, s.hbar, dt);
    NBodyState out = s;
    CMat c = s.coeffs;
    prop.step(c);
    out.coeffs = c.col(0);
    out.t += dt;
    return out;
}

CMat marginal_matrix(const CVec& coeffs, int n_x, int N, int n)
{
    require(n >= 1 && n <= N, "marginal order out of range");
    const long keep = ipow(n_x, n), rest = ipow(n_x, N - n);
    require(coeffs.size() == keep * rest, "coefficients do not match the tensor grid");
    require(keep <= 4096, "marginal matrix exceeds the memory budget");
    using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> A(coeffs.data(), keep, rest);
    return A * A.adjoint();
}

DensityOperatorN marginal_operator(const NBodyState& s, int n)
{
    return DensityOperatorN{s.grid, n, marginal_matrix(s.coeffs, s.grid.n, s.N, n), s.hbar};
}

}  // namespace qcl
