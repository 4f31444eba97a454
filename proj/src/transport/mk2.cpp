#include "qcl/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace qcl {

namespace {

Mat cost_matrix(const DiscreteMeasure& a, const DiscreteMeasure& b)
{
    Mat C(a.size(), b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < b.size(); ++j) C(i, j) = half_sq_dist(a, i, b, j);
    return C;
}

double spread_sq(const DiscreteMeasure& a, const DiscreteMeasure& b)
{
    Eigen::RowVectorXd lo = a.points.colwise().minCoeff().cwiseMin(b.points.colwise().minCoeff());
    Eigen::RowVectorXd hi = a.points.colwise().maxCoeff().cwiseMax(b.points.colwise().maxCoeff());
    return 0.5 * (hi - lo).squaredNorm();
}

double max_violation(const Mat& C, const Vec& u, const Vec& v)
{
    double worst = 0;
    for (Eigen::Index i = 0; i < C.rows(); ++i)
        for (Eigen::Index j = 0; j < C.cols(); ++j) worst = std::max(worst, u[i] + v[j] - C(i, j));
    return worst;
}

// Relaxation on the residual graph: rows -> cols with weight C_ij, cols -> rows with
// weight -C_ij on support edges. Converges iff the plan is optimal (no negative cycle).
bool relax(const Mat& C, const std::vector<std::vector<int>>& col_support, Vec& d)
{
    const int n = static_cast<int>(C.rows()), m = static_cast<int>(C.cols());
    const int V = n + m;
    std::deque<int> queue;
    std::vector<char> queued(V, 1);
    std::vector<int> pops(V, 0);
    for (int k = 0; k < V; ++k) queue.push_back(k);
    const double tol = 1e-13 * (1.0 + C.cwiseAbs().maxCoeff());
    while (!queue.empty()) {
        int x = queue.front();
        queue.pop_front();
        queued[x] = 0;
        if (++pops[x] > V + 1) return false;
        if (x < n) {
            for (int j = 0; j < m; ++j) {
                double nd = d[x] + C(x, j);
                if (d[n + j] > nd + tol) {
                    d[n + j] = nd;
                    if (!queued[n + j]) {
                        queued[n + j] = 1;
                        queue.push_back(n + j);
                    }
                }
            }
        } else {
            for (int i : col_support[x - n]) {
                double nd = d[x] - C(i, x - n);
                if (d[i] > nd + tol) {
                    d[i] = nd;
                    if (!queued[i]) {
                        queued[i] = 1;
                        queue.push_back(i);
                    }
                }
            }
        }
    }
    return true;
}

}  // namespace

TransportResult mk2_squared(const DiscreteMeasure& a, const DiscreteMeasure& b)
{
    a.validate();
    b.validate();
    require(a.dim == b.dim, "measures live in different dimensions");
    if (a.size() > kExactTransportLimit || b.size() > kExactTransportLimit) {
        const double eps = 1e-3 * (1.0 + spread_sq(a, b));
        return sinkhorn_divergence(a, b, eps);
    }
    const Mat C = cost_matrix(a, b);
    TransportResult r = network_simplex(a.masses, b.masses, C);
    r.plan.cost = r.plan.recompute_cost(a, b);
    r.cost = r.plan.cost;
    return r;
}

DualCertificate dual_certificate(const DiscreteMeasure& a, const DiscreteMeasure& b, const TransportPlan& plan)
{
    require(plan.rows == a.size() && plan.cols == b.size(), "plan shape does not match the measures");
    for (const auto& e : plan.entries) require(e.mass >= -1e-15, "plan has negative entries");
    if (plan.marginal_error(a, b) > 1e-9) throw PreconditionError("plan is not feasible for the given marginals");

    const Mat C = cost_matrix(a, b);
    const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());

    std::vector<std::vector<int>> row_support(n), col_support(m);
    for (const auto& e : plan.entries)
        if (e.mass > 0) {
            row_support[e.i].push_back(e.j);
            col_support[e.j].push_back(e.i);
        }

    // equality potentials along the support forest, then relaxation for the rest
    Vec d = Vec::Constant(n + m, std::numeric_limits<double>::quiet_NaN());
    for (int start = 0; start < n + m; ++start) {
        if (!std::isnan(d[start])) continue;
        d[start] = 0;
        std::deque<int> q{start};
        while (!q.empty()) {
            int x = q.front();
            q.pop_front();
            if (x < n) {
                for (int j : row_support[x])
                    if (std::isnan(d[n + j])) {
                        d[n + j] = d[x] + C(x, j);
                        q.push_back(n + j);
                    }
            } else {
                for (int i : col_support[x - n])
                    if (std::isnan(d[i])) {
                        d[i] = d[x] - C(i, x - n);
                        q.push_back(i);
                    }
            }
        }
    }

    DualCertificate cert;
    cert.primal = plan.recompute_cost(a, b);
    if (relax(C, col_support, d)) {
        cert.u = -d.head(n);
        cert.v = d.tail(m);
        cert.from_slackness = true;
    } else {
        // plan not optimal: fall back to a double c-transform, still dual feasible
        cert.v = Vec::Zero(m);
        cert.u = C.rowwise().minCoeff();
        for (int j = 0; j < m; ++j) cert.v[j] = (C.col(j) - cert.u).minCoeff();
        cert.from_slackness = false;
    }
    const double shift = cert.u.minCoeff();
    cert.u.array() -= shift;
    cert.v.array() += shift;
    cert.dual = a.masses.dot(cert.u) + b.masses.dot(cert.v);
    cert.max_violation = std::max(0.0, max_violation(C, cert.u, cert.v));
    return cert;
}

}  // namespace qcl
