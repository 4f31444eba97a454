#include "qcl/qcdist.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <unordered_map>

namespace qcl {

namespace {

double op_norm(const CMat& A)
{
    if (A.size() == 0) return 0;
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (A + A.adjoint()), Eigen::EigenvaluesOnly);
    return std::max(std::abs(es.eigenvalues()[0]), std::abs(es.eigenvalues()[A.rows() - 1]));
}

std::shared_ptr<const CMat> operator_factor(const DensityOperator& R)
{
    if (R.pure_factor) return std::make_shared<const CMat>(*R.pure_factor);
    Eigen::SelfAdjointEigenSolver<CMat> es(R.matrix);
    const Vec& lam = es.eigenvalues();
    const double cut = 1e-14 * std::max(1.0, lam.cwiseAbs().maxCoeff());
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        if (lam[i] > cut) keep.push_back(i);
    auto B = std::make_shared<CMat>(R.matrix.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
        B->col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(lam[keep[c]]);
    return B;
}

}  // namespace

CMat CouplingField::block_matrix(int k) const
{
    const auto& b = blocks.at(k);
    if (!b.factor || b.factor->cols() == 0) return CMat::Zero(grid.n, grid.n);
    return b.scale * (*b.factor) * b.factor->adjoint();
}

CMat CouplingField::quantum_marginal() const
{
    std::unordered_map<const CMat*, double> weight;
    for (const auto& b : blocks)
        if (b.factor) weight[b.factor.get()] += b.scale;
    CMat S = CMat::Zero(grid.n, grid.n);
    for (const auto& [F, w] : weight)
        if (F->cols() > 0) S.noalias() += w * (*F) * F->adjoint();
    return S;
}

Vec CouplingField::classical_marginal() const
{
    Vec p(size());
    for (int k = 0; k < size(); ++k) p[k] = blocks[k].p;
    return p;
}

CouplingCheck CouplingField::check(const DensityOperator& R) const
{
    require(R.grid == grid, "coupling and operator live on different grids");
    CouplingCheck c;
    for (const auto& b : blocks) {
        double tr = b.factor ? b.scale * b.factor->squaredNorm() : 0.0;
        c.trace_error = std::max(c.trace_error, std::abs(tr - b.p));
        if (b.scale < 0 && b.factor && b.factor->cols() > 0) c.min_eig = std::min(c.min_eig, b.scale * b.factor->squaredNorm());
    }
    c.sum_error = op_norm(quantum_marginal() - R.matrix);
    return c;
}

void CouplingField::validate(const DensityOperator& R, double trace_tol, double sum_tol) const
{
    CouplingCheck c = check(R);
    char buf[200];
    if (!c.ok(trace_tol, sum_tol)) {
        std::snprintf(buf, sizeof buf, "coupling marginals off: trace %.3e, sum %.3e, min eig %.3e", c.trace_error,
                      c.sum_error, c.min_eig);
        throw NumericalError(buf);
    }
}

double CouplingField::objective() const
{
    std::unordered_map<const CMat*, CostMoments> cache;
    double s = 0;
    for (const auto& b : blocks) {
        if (!b.factor || b.factor->cols() == 0) continue;
        auto it = cache.find(b.factor.get());
        if (it == cache.end()) it = cache.emplace(b.factor.get(), factor_moments(grid, hbar, *b.factor)).first;
        s += b.scale * it->second.pair(b.x, b.xi);
    }
    return s;
}

CouplingField trivial_coupling(const DiscreteMeasure& p, const DensityOperator& R)
{
    require(p.dim == 2, "classical marginal must be a one-body phase measure");
    p.validate(1e-9);
    R.validate(1e-8);
    CouplingField Q;
    Q.grid = R.grid;
    Q.hbar = R.hbar;
    auto F = operator_factor(R);
    const double tr = F->squaredNorm();
    for (Eigen::Index k = 0; k < p.size(); ++k)
        Q.blocks.push_back({p.points(k, 0), p.points(k, 1), p.masses[k], F, p.masses[k] / tr});
    return Q;
}

CouplingField toeplitz_lift_coupling(const DiscreteMeasure& p, const DiscreteMeasure& mu, const TransportPlan& plan,
                                     double hbar, const SpaceGrid& g)
{
    require(p.dim == 2 && mu.dim == 2, "lift needs one-body phase measures");
    require(plan.rows == p.size() && plan.cols == mu.size(), "plan does not match the measures");
    if (plan.marginal_error(p, mu) > 1e-9) throw PreconditionError("plan marginals do not match p and mu");
    std::vector<double> xs(mu.size()), xis(mu.size());
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
        xs[j] = mu.points(j, 0);
        xis[j] = mu.points(j, 1);
        check_coherent_support(g, hbar, xs[j], xis[j]);
    }
    const CMat Z = coherent_columns(g, hbar, xs, xis);

    std::vector<std::vector<std::pair<int, double>>> rows(p.size());
    for (const auto& e : plan.entries)
        if (e.mass > 0) rows[e.i].push_back({e.j, e.mass});

    CouplingField Q;
    Q.grid = g;
    Q.hbar = hbar;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        auto F = std::make_shared<CMat>(g.n, static_cast<Eigen::Index>(rows[k].size()));
        for (std::size_t c = 0; c < rows[k].size(); ++c)
            F->col(static_cast<Eigen::Index>(c)) = std::sqrt(rows[k][c].second) * Z.col(rows[k][c].first);
        Q.blocks.push_back({p.points(k, 0), p.points(k, 1), p.masses[k], F, 1.0});
    }
    return Q;
}

void write_bound_intervals_csv(const std::string& path, const std::vector<BoundInterval>& rows)
{
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    os << "t,lower,upper,exact_or_nan,flags\n";
    char buf[200];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,", r.t, r.lower, r.upper, r.exact);
        os << buf << r.flags << "\n";
    }
}

}  // namespace qcl
