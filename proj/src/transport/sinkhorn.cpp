// Log-domain Sinkhorn with epsilon scaling; the cost is evaluated on the fly so
// large supports never materialize an n x m matrix.
#include "qcl/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qcl {

namespace {

struct Potentials {
    Vec f, g;
};

// c-softmin of h over the support of `other`: -eps log sum_j b_j exp((h_j - C_ij)/eps)
Vec softmin(const DiscreteMeasure& x, const DiscreteMeasure& y, const Vec& logb, const Vec& h, double eps)
{
    const Eigen::Index n = x.size(), m = y.size();
    Vec out(n);
    Vec t(m);
    for (Eigen::Index i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < m; ++j) {
            t[j] = logb[j] + (h[j] - half_sq_dist(x, i, y, j)) / eps;
            mx = std::max(mx, t[j]);
        }
        out[i] = -eps * (mx + std::log((t.array() - mx).exp().sum()));
    }
    return out;
}

Vec safe_log(const Vec& w)
{
    Vec l(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i)
        l[i] = w[i] > 0 ? std::log(w[i]) : -std::numeric_limits<double>::infinity();
    return l;
}

double diameter_sq(const DiscreteMeasure& a, const DiscreteMeasure& b)
{
    Eigen::RowVectorXd lo = a.points.colwise().minCoeff().cwiseMin(b.points.colwise().minCoeff());
    Eigen::RowVectorXd hi = a.points.colwise().maxCoeff().cwiseMax(b.points.colwise().maxCoeff());
    return 0.5 * (hi - lo).squaredNorm();
}

Potentials solve(const DiscreteMeasure& a, const DiscreteMeasure& b, double eps, bool symmetric)
{
    const Vec la = safe_log(a.masses), lb = safe_log(b.masses);
    Potentials p{Vec::Zero(a.size()), Vec::Zero(b.size())};
    double e = std::max(eps, diameter_sq(a, b));
    while (true) {
        const int iters = e > eps ? 10 : 2000;
        for (int it = 0; it < iters; ++it) {
            if (symmetric) {
                Vec f = softmin(a, a, la, p.f, e);
                double change = (f - p.f).cwiseAbs().maxCoeff();
                p.f = 0.5 * (p.f + f);
                if (e <= eps && change < 1e-9 * (1 + eps)) break;
            } else {
                Vec f = softmin(a, b, lb, p.g, e);
                Vec g = softmin(b, a, la, f, e);
                double change = std::max((f - p.f).cwiseAbs().maxCoeff(), (g - p.g).cwiseAbs().maxCoeff());
                p.f = f;
                p.g = g;
                if (e <= eps && change < 1e-9 * (1 + eps)) break;
            }
        }
        if (e <= eps) break;
        e = std::max(eps, e * 0.5);
    }
    if (symmetric) p.g = p.f;
    return p;
}

}  // namespace

TransportResult sinkhorn_divergence(const DiscreteMeasure& a, const DiscreteMeasure& b, double epsilon)
{
    require(epsilon > 0, "entropic regularization must be positive");
    require(a.dim == b.dim, "measures live in different dimensions");
    const Potentials ab = solve(a, b, epsilon, false);
    const Potentials aa = solve(a, a, epsilon, true);
    const Potentials bb = solve(b, b, epsilon, true);
    const double ot_ab = a.masses.dot(ab.f) + b.masses.dot(ab.g);
    const double ot_aa = a.masses.dot(aa.f);
    const double ot_bb = b.masses.dot(bb.f);

    TransportResult r;
    r.exact = false;
    r.epsilon = epsilon;
    r.cost = std::max(0.0, ot_ab - 0.5 * (ot_aa + ot_bb));
    r.u = ab.f;
    r.v = ab.g;
    r.plan.rows = static_cast<int>(a.size());
    r.plan.cols = static_cast<int>(b.size());
    double plan_cost = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < b.size(); ++j) {
            double c = half_sq_dist(a, i, b, j);
            double m = a.masses[i] * b.masses[j] * std::exp((ab.f[i] + ab.g[j] - c) / epsilon);
            if (m > 1e-14) {
                r.plan.entries.push_back({static_cast<int>(i), static_cast<int>(j), m});
                plan_cost += m * c;
            }
        }
    r.plan.cost = plan_cost;
    return r;
}

}  // namespace qcl
