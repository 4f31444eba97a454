#include "qcl/transport.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace qcl {

void DiscreteMeasure::validate(double tol) const
{
    require(dim >= 1 && points.cols() == dim, "measure dimension mismatch");
    require(points.rows() == masses.size(), "support and masses differ in length");
    require(masses.size() > 0, "empty measure");
    require(masses.minCoeff() >= 0, "negative mass");
    require(std::abs(masses.sum() - 1.0) <= tol, "measure is not normalized");
}

DiscreteMeasure DiscreteMeasure::from_density(const PhaseDensity& p, double drop_below, double* dropped)
{
    const auto& g = p.grid;
    std::vector<Eigen::Index> keep;
    double lost = 0;
    for (int i = 0; i < g.n_x; ++i)
        for (int j = 0; j < g.n_xi; ++j) {
            double w = p.weights[g.index(i, j)];
            if (w >= drop_below && w > 0)
                keep.push_back(g.index(i, j));
            else
                lost += w;
        }
    require(!keep.empty(), "density has no cell above the drop threshold");
    DiscreteMeasure m;
    m.dim = 2;
    m.points.resize(static_cast<Eigen::Index>(keep.size()), 2);
    m.masses.resize(static_cast<Eigen::Index>(keep.size()));
    double total = 0;
    for (std::size_t k = 0; k < keep.size(); ++k) {
        int c = static_cast<int>(keep[k]);
        m.points(k, 0) = g.x_center(c / g.n_xi);
        m.points(k, 1) = g.xi_center(c % g.n_xi);
        m.masses[k] = p.weights[c];
        total += p.weights[c];
    }
    m.masses /= total;
    if (dropped) *dropped = lost;
    return m;
}

DiscreteMeasure DiscreteMeasure::from_particles(const std::vector<Particle>& ps, double drop_below, double* dropped)
{
    DiscreteMeasure m;
    m.dim = 2;
    double lost = 0, total = 0;
    std::vector<Particle> kept;
    for (const auto& p : ps) {
        if (p.w > drop_below && p.w > 0) {
            kept.push_back(p);
            total += p.w;
        } else {
            lost += p.w;
        }
    }
    require(!kept.empty(), "no particle above the drop threshold");
    m.points.resize(static_cast<Eigen::Index>(kept.size()), 2);
    m.masses.resize(static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) {
        m.points(k, 0) = kept[k].x;
        m.points(k, 1) = kept[k].xi;
        m.masses[k] = kept[k].w / total;
    }
    if (dropped) *dropped = lost;
    return m.deduplicated();
}

DiscreteMeasure DiscreteMeasure::from_ensemble(const ClassicalEnsembleN& e)
{
    DiscreteMeasure m;
    m.dim = 2 * e.N;
    m.points.resize(static_cast<Eigen::Index>(e.n_samples()), m.dim);
    m.masses.resize(static_cast<Eigen::Index>(e.n_samples()));
    for (std::size_t s = 0; s < e.n_samples(); ++s) {
        for (int k = 0; k < e.N; ++k) {
            m.points(s, 2 * k) = e.x[s * e.N + k];
            m.points(s, 2 * k + 1) = e.xi[s * e.N + k];
        }
        m.masses[s] = e.w[s];
    }
    return m.deduplicated();
}

DiscreteMeasure DiscreteMeasure::deduplicated() const
{
    std::vector<Eigen::Index> order(static_cast<std::size_t>(size()));
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](Eigen::Index a, Eigen::Index b) {
        for (int d = 0; d < dim; ++d)
            if (points(a, d) != points(b, d)) return points(a, d) < points(b, d);
        return false;
    };
    std::stable_sort(order.begin(), order.end(), less);
    std::vector<Eigen::Index> reps;
    std::vector<double> mass;
    for (auto k : order) {
        if (masses[k] == 0) continue;
        if (!reps.empty() && !less(reps.back(), k) && !less(k, reps.back())) {
            mass.back() += masses[k];
            continue;
        }
        reps.push_back(k);
        mass.push_back(masses[k]);
    }
    DiscreteMeasure m;
    m.dim = dim;
    m.points.resize(static_cast<Eigen::Index>(reps.size()), dim);
    m.masses.resize(static_cast<Eigen::Index>(reps.size()));
    for (std::size_t r = 0; r < reps.size(); ++r) {
        m.points.row(r) = points.row(reps[r]);
        m.masses[r] = mass[r];
    }
    return m;
}

double half_sq_dist(const DiscreteMeasure& a, Eigen::Index i, const DiscreteMeasure& b, Eigen::Index j)
{
    return 0.5 * (a.points.row(i) - b.points.row(j)).squaredNorm();
}

Mat TransportPlan::dense() const
{
    Mat P = Mat::Zero(rows, cols);
    for (const auto& e : entries) P(e.i, e.j) += e.mass;
    return P;
}

double TransportPlan::marginal_error(const DiscreteMeasure& a, const DiscreteMeasure& b) const
{
    Vec r = Vec::Zero(rows), c = Vec::Zero(cols);
    for (const auto& e : entries) {
        r[e.i] += e.mass;
        c[e.j] += e.mass;
    }
    return std::max((r - a.masses).cwiseAbs().maxCoeff(), (c - b.masses).cwiseAbs().maxCoeff());
}

double TransportPlan::recompute_cost(const DiscreteMeasure& a, const DiscreteMeasure& b) const
{
    double s = 0;
    for (const auto& e : entries) s += e.mass * half_sq_dist(a, e.i, b, e.j);
    return s;
}

DiscreteMeasure tensor_product(const std::vector<DiscreteMeasure>& factors)
{
    require(!factors.empty(), "empty product");
    DiscreteMeasure m = factors[0];
    for (std::size_t f = 1; f < factors.size(); ++f) {
        const auto& b = factors[f];
        DiscreteMeasure n;
        n.dim = m.dim + b.dim;
        n.points.resize(m.size() * b.size(), n.dim);
        n.masses.resize(m.size() * b.size());
        for (Eigen::Index i = 0; i < m.size(); ++i)
            for (Eigen::Index j = 0; j < b.size(); ++j) {
                Eigen::Index r = i * b.size() + j;
                n.points.row(r).head(m.dim) = m.points.row(i);
                n.points.row(r).tail(b.dim) = b.points.row(j);
                n.masses[r] = m.masses[i] * b.masses[j];
            }
        m = std::move(n);
    }
    return m;
}

double tensor_mk2_bound(const std::vector<DiscreteMeasure>& a_factors, const std::vector<DiscreteMeasure>& b_factors)
{
    require(!a_factors.empty() && a_factors.size() == b_factors.size(), "factor lists must match and be non-empty");
    double s = 0;
    for (std::size_t k = 0; k < a_factors.size(); ++k) s += mk2_squared(a_factors[k], b_factors[k]).cost;
    return s;
}

void write_plan_csv(const std::string& path, const TransportPlan& plan)
{
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    os << "i,j,mass\n";
    char buf[64];
    for (const auto& e : plan.entries) {
        std::snprintf(buf, sizeof buf, "%.17g", e.mass);
        os << e.i << "," << e.j << "," << buf << "\n";
    }
}

}  // namespace qcl
