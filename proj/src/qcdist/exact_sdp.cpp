// ADMM for   min sum_k tr(C_k Q_k)  s.t.  Q_k >= 0, tr Q_k = p_k, sum_k Q_k = R,
// solved on the range of R where every feasible Q_k lives, in the variables
// q_k = R^{-1/2} Q_k R^{-1/2} so that the sum constraint reads sum_k q_k = I.
#include "qcl/qcdist.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace qcl {

namespace {

CMat psd_part(const CMat& A)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (A + A.adjoint()));
    Vec lam = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

TinyResult ehbar_exact_tiny(const DiscreteMeasure& p, const DensityOperator& R, const TinyOptions& opt)
{
    require(p.dim == 2, "classical marginal must be a one-body phase measure");
    p.validate(1e-9);
    R.validate(1e-8);
    const SpaceGrid& g = R.grid;
    const double hbar = R.hbar;

    std::vector<Eigen::Index> cells;
    for (Eigen::Index k = 0; k < p.size(); ++k)
        if (p.masses[k] > 0) cells.push_back(k);
    const int M = static_cast<int>(cells.size());
    if (M > 64) throw PreconditionError("exact solver is limited to 64 phase cells");

    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (R.matrix + R.matrix.adjoint()));
    const Vec& lam_all = es.eigenvalues();
    const double cut = opt.range_cutoff * std::max(lam_all.maxCoeff(), 1e-300);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < lam_all.size(); ++i)
        if (lam_all[i] > cut) keep.push_back(i);
    const int r = static_cast<int>(keep.size());
    if (r > 16) throw PreconditionError("exact solver is limited to operators of rank 16");
    CMat V(g.n, r);
    Vec lam(r);
    for (int c = 0; c < r; ++c) {
        V.col(c) = es.eigenvectors().col(keep[c]);
        lam[c] = lam_all[keep[c]];
    }
    lam /= lam.sum();

    // reduced moment operators
    CMat XV = V, X2V = V;
    for (int i = 0; i < g.n; ++i) {
        XV.row(i) *= g.x(i);
        X2V.row(i) *= g.x(i) * g.x(i);
    }
    CMat PV = V, P2V = V;
    apply_momentum(g, hbar, PV, 1);
    apply_momentum(g, hbar, P2V, 2);
    const CMat Xr = V.adjoint() * XV, X2r = V.adjoint() * X2V;
    CMat Pr = V.adjoint() * PV, P2r = V.adjoint() * P2V;
    Pr = 0.5 * (Pr + Pr.adjoint());
    P2r = 0.5 * (P2r + P2r.adjoint());
    const CMat I = CMat::Identity(r, r);
    const Vec sq = lam.cwiseSqrt();
    const double c2 = lam.squaredNorm();

    std::vector<CMat> C(M);
    std::vector<double> pk(M);
    double cscale = 0;
    for (int k = 0; k < M; ++k) {
        double x = p.points(cells[k], 0), xi = p.points(cells[k], 1);
        C[k] = 0.5 * sq.asDiagonal() * ((x * x + xi * xi) * I - 2 * x * Xr + X2r - 2 * xi * Pr + P2r) *
               sq.asDiagonal();
        pk[k] = p.masses[cells[k]];
        cscale = std::max(cscale, C[k].norm());
    }

    auto project_affine = [&](std::vector<CMat>& Z) {
        CMat S = CMat::Zero(r, r);
        for (const auto& z : Z) S += z;
        const double trRS = (lam.array() * S.diagonal().real().array()).sum();
        const CMat shift = (S - I) / double(M);
        for (int k = 0; k < M; ++k) {
            double trRZ = (lam.array() * Z[k].diagonal().real().array()).sum();
            double a = (trRZ - pk[k]) / c2 - (trRS - 1.0) / (c2 * M);
            Z[k] -= shift;
            Z[k].diagonal() -= (a * lam).cast<cplx>();
        }
    };
    auto objective = [&](const std::vector<CMat>& Q) {
        double s = 0;
        for (int k = 0; k < M; ++k) s += (C[k] * Q[k]).trace().real();
        return s;
    };

    // smallest blend weight theta making (1 - theta) q_k + theta p_k I PSD for all k
    auto blend_weight = [&](const std::vector<CMat>& Q) {
        double s = 0;
        for (int k = 0; k < M; ++k) {
            CMat D = Q[k] / pk[k];
            Eigen::SelfAdjointEigenSolver<CMat> ek(0.5 * (D + D.adjoint()), Eigen::EigenvaluesOnly);
            s = std::max(s, -ek.eigenvalues()[0]);
        }
        if (s <= 0) return 0.0;
        s = s * (1 + 1e-9) + 1e-15;
        return s / (1 + s);
    };

    std::vector<CMat> Q(M), Y(M), U(M, CMat::Zero(r, r)), Yold(M);
    for (int k = 0; k < M; ++k) Y[k] = pk[k] * I;
    const double trivial_obj = objective(Y);
    double rho = std::max(cscale, 1e-12);
    double prev_obj = trivial_obj;
    double pres = 0, dres = 0, tol = opt.tol;
    int it = 0;
    bool converged = false;
    for (it = 1; it <= opt.max_iter; ++it) {
        for (int k = 0; k < M; ++k) Q[k] = Y[k] - U[k] - C[k] / rho;
        project_affine(Q);
        Yold = Y;
        for (int k = 0; k < M; ++k) Y[k] = psd_part(Q[k] + U[k]);
        double p2 = 0, d2 = 0;
        for (int k = 0; k < M; ++k) {
            U[k] += Q[k] - Y[k];
            p2 += (Q[k] - Y[k]).squaredNorm();
            d2 += (Y[k] - Yold[k]).squaredNorm();
        }
        pres = std::sqrt(p2);
        dres = rho * std::sqrt(d2);
        if (M == 1) {
            converged = true;
            break;
        }
        if (it % 10 == 0) {
            double obj = objective(Q);
            bool stalled = std::abs(obj - prev_obj) <= opt.stall * std::max(std::abs(obj), 1e-300);
            prev_obj = obj;
            if (pres <= tol && dres <= tol * std::max(1.0, cscale) && stalled) {
                // the feasibility repair must not move the objective beyond the stall tolerance
                double theta = blend_weight(Q);
                if (theta * std::abs(trivial_obj - obj) <= opt.stall * std::abs(obj)) {
                    converged = true;
                    break;
                }
                tol *= 0.1;
            }
            // residual balancing, penalty changed by a factor 2
            if (pres > 10 * dres / std::max(1.0, cscale)) {
                rho *= 2;
                for (auto& u : U) u *= 0.5;
            } else if (dres / std::max(1.0, cscale) > 10 * pres) {
                rho *= 0.5;
                for (auto& u : U) u *= 2.0;
            }
        }
    }

    // q is affine-feasible; blend towards p_k I until every block is PSD
    const double theta = blend_weight(Q);

    TinyResult res;
    res.iterations = std::min(it, opt.max_iter);
    res.primal_residual = pres;
    res.dual_residual = dres;
    res.blend = theta;
    res.range_dim = r;
    res.converged = converged;
    res.coupling.grid = g;
    res.coupling.hbar = hbar;
    std::vector<CMat> blocks(M);
    for (int k = 0; k < M; ++k)
        blocks[k] = sq.asDiagonal() * ((1 - theta) * Q[k] + theta * pk[k] * I) * sq.asDiagonal();
    // lift back to the full grid as factors
    for (Eigen::Index k = 0, c = 0; k < p.size(); ++k) {
        CouplingBlock b{p.points(k, 0), p.points(k, 1), p.masses[k], nullptr, 1.0};
        if (c < M && cells[c] == k) {
            Eigen::SelfAdjointEigenSolver<CMat> eb(0.5 * (blocks[c] + blocks[c].adjoint()));
            Vec w = eb.eigenvalues().cwiseMax(0.0);
            CMat F = V * eb.eigenvectors() * w.cwiseSqrt().asDiagonal();
            b.factor = std::make_shared<const CMat>(std::move(F));
            ++c;
        } else {
            b.factor = std::make_shared<const CMat>(g.n, 0);
        }
        res.coupling.blocks.push_back(std::move(b));
    }
    res.value = res.coupling.objective();
    return res;
}

}  // namespace qcl
