#include "qcl/qcdist.hpp"

#include <Eigen/Eigenvalues>

namespace qcl {

CostMoments cost_moments(const SpaceGrid& g, double hbar, const CMat& Q)
{
    require(Q.rows() == g.n && Q.cols() == g.n, "operator does not match grid");
    CostMoments m;
    for (int i = 0; i < g.n; ++i) {
        double q = Q(i, i).real(), x = g.x(i);
        m.tr += q;
        m.x += x * q;
        m.x2 += x * x * q;
    }
    // trace(P Q) from the diagonal of F Q F^*, two batched transforms
    CMat A = Q;
    fft_forward(A.data(), {g.n}, g.n);  // F Q
    CMat B = A.adjoint();               // Q F^*
    fft_forward(B.data(), {g.n}, g.n);  // F Q F^*
    for (int j = 0; j < g.n; ++j) {
        double d = B(j, j).real() / g.n;
        double k = hbar * g.k(j);
        m.p += k * d;
        m.p2 += k * k * d;
    }
    return m;
}

CostMoments factor_moments(const SpaceGrid& g, double hbar, const CMat& B)
{
    require(B.rows() == g.n, "factor does not match grid");
    CostMoments m;
    for (int i = 0; i < g.n; ++i) {
        double q = B.row(i).squaredNorm(), x = g.x(i);
        m.tr += q;
        m.x += x * q;
        m.x2 += x * x * q;
    }
    CMat F = B;
    fft_forward(F.data(), {g.n}, static_cast<int>(F.cols()));
    for (int j = 0; j < g.n; ++j) {
        double d = F.row(j).squaredNorm() / g.n;
        double k = hbar * g.k(j);
        m.p += k * d;
        m.p2 += k * k * d;
    }
    return m;
}

CMat cost_matrix(const SpaceGrid& g, double hbar, double x, double xi)
{
    g.validate();
    CMat S = CMat::Identity(g.n, g.n);
    // (xi - P)^2 = F^* diag((xi - hbar k)^2) F
    fft_forward(S.data(), {g.n}, g.n);
    for (int j = 0; j < g.n; ++j) {
        double v = xi - hbar * g.k(j);
        S.row(j) *= 0.5 * v * v / g.n;
    }
    fft_backward(S.data(), {g.n}, g.n);
    CMat C = 0.5 * (S + S.adjoint());
    for (int i = 0; i < g.n; ++i) {
        double dx = x - g.x(i);
        C(i, i) += 0.5 * dx * dx;
    }
    return C;
}

CostOperatorField CostOperatorField::on_grid(const PhaseGrid& pg, const SpaceGrid& g, double hbar)
{
    pg.validate();
    g.validate();
    require(hbar > 0, "hbar must be positive");
    CostOperatorField f;
    f.grid = g;
    f.hbar = hbar;
    for (int i = 0; i < pg.n_x; ++i)
        for (int j = 0; j < pg.n_xi; ++j) {
            f.xs.push_back(pg.x_center(i));
            f.xis.push_back(pg.xi_center(j));
        }
    return f;
}

CostOperatorField CostOperatorField::on_nodes(const DiscreteMeasure& nodes, const SpaceGrid& g, double hbar)
{
    require(nodes.dim == 2, "cost field nodes must be one-body phase points");
    g.validate();
    CostOperatorField f;
    f.grid = g;
    f.hbar = hbar;
    for (Eigen::Index k = 0; k < nodes.size(); ++k) {
        f.xs.push_back(nodes.points(k, 0));
        f.xis.push_back(nodes.points(k, 1));
    }
    return f;
}

double CostOperatorField::ground_eigenvalue(int k) const
{
    Eigen::SelfAdjointEigenSolver<CMat> es(matrix(k), Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
}

CostOperatorField cost_field(const PhaseGrid& pg, const SpaceGrid& g, double hbar)
{
    return CostOperatorField::on_grid(pg, g, hbar);
}

}  // namespace qcl
