// Primal network simplex for the transportation problem, uncapacitated arcs,
// strongly feasible spanning trees and block-search pivoting.
#include "qcl/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qcl {

namespace {

constexpr int UP = 1;     // pred arc points from node to its parent
constexpr int DOWN = -1;  // pred arc points from parent to node

class Simplex {
public:
    Simplex(const Vec& a, const Vec& b, const Mat& C) : C_(C)
    {
        n_ = static_cast<int>(a.size());
        m_ = static_cast<int>(b.size());
        nodes_ = n_ + m_ + 1;
        root_ = n_ + m_;
        transport_arcs_ = static_cast<long>(n_) * m_;
        arcs_ = transport_arcs_ + n_ + m_;
        double cmax = C.size() ? C.cwiseAbs().maxCoeff() : 0.0;
        art_ = (cmax + 1.0) * (n_ + m_ + 1);
        eps_ = 1e-10 * (cmax + 1.0);

        flow_.assign(arcs_, 0.0);
        in_tree_.assign(arcs_, 0);
        parent_.assign(nodes_, -1);
        pred_arc_.assign(nodes_, -1);
        dir_.assign(nodes_, 0);
        pi_.assign(nodes_, 0.0);
        depth_.assign(nodes_, 0);
        first_child_.assign(nodes_, -1);
        next_sib_.assign(nodes_, -1);
        prev_sib_.assign(nodes_, -1);

        for (int u = 0; u < n_ + m_; ++u) {
            long e = transport_arcs_ + u;
            in_tree_[e] = 1;
            depth_[u] = 1;
            if (u < n_) {
                flow_[e] = a[u];
                set_pred(u, e, UP);
                pi_[u] = -art_cost(e);  // cost + pi_u - pi_root = 0
            } else {
                flow_[e] = b[u - n_];
                set_pred(u, e, DOWN);
                pi_[u] = art_cost(e);
            }
            attach(u, root_);
        }
        block_ = std::max<long>(10, static_cast<long>(std::sqrt(double(arcs_))));
    }

    long solve()
    {
        long pivots = 0;
        const long max_pivots = 50L * arcs_ + 100000;
        while (true) {
            long in = find_entering();
            if (in < 0) break;
            pivot(in);
            if (++pivots > max_pivots) throw NumericalError("network simplex did not converge");
        }
        return pivots;
    }

    TransportResult result() const
    {
        TransportResult r;
        r.plan.rows = n_;
        r.plan.cols = m_;
        double cost = 0;
        for (long e = 0; e < transport_arcs_; ++e) {
            if (!in_tree_[e] || flow_[e] <= 0) continue;
            int i = static_cast<int>(e / m_), j = static_cast<int>(e % m_);
            r.plan.entries.push_back({i, j, flow_[e]});
            cost += flow_[e] * C_(i, j);
        }
        std::sort(r.plan.entries.begin(), r.plan.entries.end(),
                  [](const PlanEntry& x, const PlanEntry& y) { return x.i != y.i ? x.i < y.i : x.j < y.j; });
        r.plan.cost = cost;
        r.cost = cost;
        r.u.resize(n_);
        r.v.resize(m_);
        for (int i = 0; i < n_; ++i) r.u[i] = -pi_[i];
        for (int j = 0; j < m_; ++j) r.v[j] = pi_[n_ + j];
        double shift = r.u.minCoeff();
        r.u.array() -= shift;
        r.v.array() += shift;
        return r;
    }

private:
    int source(long e) const
    {
        if (e < transport_arcs_) return static_cast<int>(e / m_);
        int u = static_cast<int>(e - transport_arcs_);
        return u < n_ ? u : root_;
    }
    int target(long e) const
    {
        if (e < transport_arcs_) return n_ + static_cast<int>(e % m_);
        int u = static_cast<int>(e - transport_arcs_);
        return u < n_ ? root_ : u;
    }
    double cost(long e) const
    {
        if (e < transport_arcs_) return C_(e / m_, e % m_);
        return art_cost(e);
    }
    double art_cost(long e) const
    {
        int u = static_cast<int>(e - transport_arcs_);
        return u < n_ ? 0.0 : art_;
    }
    double reduced(long e) const { return cost(e) + pi_[source(e)] - pi_[target(e)]; }

    void set_pred(int u, long e, int d)
    {
        pred_arc_[u] = e;
        dir_[u] = d;
    }

    void attach(int u, int p)
    {
        parent_[u] = p;
        prev_sib_[u] = -1;
        next_sib_[u] = first_child_[p];
        if (first_child_[p] >= 0) prev_sib_[first_child_[p]] = u;
        first_child_[p] = u;
    }

    void detach(int u)
    {
        int p = parent_[u];
        if (prev_sib_[u] >= 0)
            next_sib_[prev_sib_[u]] = next_sib_[u];
        else if (p >= 0)
            first_child_[p] = next_sib_[u];
        if (next_sib_[u] >= 0) prev_sib_[next_sib_[u]] = prev_sib_[u];
        prev_sib_[u] = next_sib_[u] = -1;
        parent_[u] = -1;
    }

    long find_entering()
    {
        double best = -eps_;
        long best_arc = -1;
        long scanned = 0;
        long e = next_arc_;
        for (long cnt = 0; cnt < arcs_; ++cnt) {
            if (!in_tree_[e]) {
                double rc = reduced(e);
                if (rc < best) {
                    best = rc;
                    best_arc = e;
                }
            }
            if (++e == arcs_) e = 0;
            if (++scanned == block_) {
                if (best_arc >= 0) break;
                scanned = 0;
            }
        }
        next_arc_ = e;
        return best_arc;
    }

    void pivot(long in)
    {
        const int first = source(in), second = target(in);
        int u = first, v = second;
        while (u != v) {
            if (depth_[u] > depth_[v])
                u = parent_[u];
            else if (depth_[v] > depth_[u])
                v = parent_[v];
            else {
                u = parent_[u];
                v = parent_[v];
            }
        }
        const int join = u;

        // leaving arc, strongly feasible rule
        double delta = std::numeric_limits<double>::infinity();
        int u_out = -1, side = 0;
        for (int w = first; w != join; w = parent_[w]) {
            double d = dir_[w] == UP ? flow_[pred_arc_[w]] : std::numeric_limits<double>::infinity();
            if (d < delta) {
                delta = d;
                u_out = w;
                side = 1;
            }
        }
        for (int w = second; w != join; w = parent_[w]) {
            double d = dir_[w] == DOWN ? flow_[pred_arc_[w]] : std::numeric_limits<double>::infinity();
            if (d <= delta) {
                delta = d;
                u_out = w;
                side = 2;
            }
        }
        if (side == 0) throw NumericalError("unbounded transport cycle");

        if (delta > 0) {
            flow_[in] += delta;
            for (int w = first; w != join; w = parent_[w]) flow_[pred_arc_[w]] -= dir_[w] * delta;
            for (int w = second; w != join; w = parent_[w]) flow_[pred_arc_[w]] += dir_[w] * delta;
        }
        const long out = pred_arc_[u_out];
        flow_[out] = 0.0;

        const int u_in = side == 1 ? first : second;
        const int v_in = side == 1 ? second : first;
        const double rc_in = reduced(in);

        // reverse the path u_in -> u_out and hang it below v_in
        std::vector<int> path;
        for (int w = u_in;; w = parent_[w]) {
            path.push_back(w);
            if (w == u_out) break;
        }
        std::vector<long> old_arc(path.size());
        std::vector<int> old_dir(path.size());
        for (std::size_t k = 0; k < path.size(); ++k) {
            old_arc[k] = pred_arc_[path[k]];
            old_dir[k] = dir_[path[k]];
        }
        for (int w : path) detach(w);
        set_pred(u_in, in, source(in) == u_in ? UP : DOWN);
        attach(u_in, v_in);
        for (std::size_t k = 0; k + 1 < path.size(); ++k) {
            set_pred(path[k + 1], old_arc[k], -old_dir[k]);
            attach(path[k + 1], path[k]);
        }
        in_tree_[in] = 1;
        in_tree_[out] = 0;

        const double shift = (target(in) == u_in) ? rc_in : -rc_in;
        // depth and potential update over the moved subtree
        std::vector<int> stack{u_in};
        while (!stack.empty()) {
            int w = stack.back();
            stack.pop_back();
            pi_[w] += shift;
            depth_[w] = depth_[parent_[w]] + 1;
            for (int c = first_child_[w]; c >= 0; c = next_sib_[c]) stack.push_back(c);
        }
    }

    const Mat& C_;
    int n_ = 0, m_ = 0, nodes_ = 0, root_ = 0;
    long transport_arcs_ = 0, arcs_ = 0;
    double art_ = 0, eps_ = 0;
    long block_ = 10, next_arc_ = 0;

    std::vector<double> flow_;
    std::vector<char> in_tree_;
    std::vector<int> parent_, dir_, depth_, first_child_, next_sib_, prev_sib_;
    std::vector<long> pred_arc_;
    std::vector<double> pi_;
};

}  // namespace

TransportResult network_simplex(const Vec& a, const Vec& b, const Mat& C)
{
    require(a.size() > 0 && b.size() > 0, "empty transport marginals");
    require(C.rows() == a.size() && C.cols() == b.size(), "cost matrix shape mismatch");
    require(a.minCoeff() >= 0 && b.minCoeff() >= 0, "negative transport mass");
    require(std::abs(a.sum() - b.sum()) <= 1e-9, "transport marginals have different mass");
    Simplex s(a, b, C);
    long pivots = s.solve();
    TransportResult r = s.result();
    r.pivots = pivots;
    return r;
}

}  // namespace qcl
