#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "grm/errors.hpp"
#include "grm/graph.hpp"
#include "grm/parallel.hpp"

namespace grm {

// Column-stochastic Google matrix G = alpha*S + (1-alpha)/N, kept implicit:
// sparse adjacency action plus two scalar accumulators for dangling and
// teleport mass.  Cost of one application is O(edges + nodes); the matrix is
// never materialized densely except entry-by-entry via entry().
class GoogleMatrix {
public:
    explicit GoogleMatrix(const DirectedGraph& graph, double alpha = 0.85, unsigned threads = 1)
        : graph_(&graph), alpha_(alpha), threads_(threads) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("damping alpha must lie in (0, 1)");
        const NodeId n = graph.n_nodes();
        inv_out_degree_.assign(n, 0.0);
        for (NodeId j = 0; j < n; ++j) {
            const NodeId deg = graph.out_degree(j);
            if (deg == 0)
                dangling_.push_back(j);
            else
                inv_out_degree_[j] = 1.0 / static_cast<double>(deg);
        }
        inv_n_ = 1.0 / static_cast<double>(n);
        teleport_ = (1.0 - alpha_) * inv_n_;
    }

    const DirectedGraph& graph() const { return *graph_; }
    double alpha() const { return alpha_; }
    NodeId size() const { return graph_->n_nodes(); }
    std::span<const NodeId> dangling_nodes() const { return dangling_; }
    bool is_dangling(NodeId j) const { return inv_out_degree_[j] == 0.0; }
    double inverse_out_degree(NodeId j) const { return inv_out_degree_[j]; }
    double teleport() const { return teleport_; }
    double inv_n() const { return inv_n_; }

    // Single dense element G(i, j).  Shared by every dense materialization so
    // sparse and dense paths agree bit for bit on direct entries.
    double entry(NodeId i, NodeId j) const {
        double base = 0.0;
        if (inv_out_degree_[j] == 0.0)
            base = inv_n_; // dangling column is uniform
        else if (graph_->has_edge(j, i))
            base = inv_out_degree_[j];
        return alpha_ * base + teleport_;
    }

    // w = G v.  Pull form: each destination row sums its in-links in a fixed
    // order, so the result does not depend on the thread count.
    void apply(std::span<const double> v, std::span<double> w) const {
        const NodeId n = size();
        if (v.size() != n || w.size() != n)
            throw std::invalid_argument("vector length does not match node count");
        double total = 0.0;
        for (const double x : v) total += x;
        double dangling_mass = 0.0;
        for (const NodeId j : dangling_) dangling_mass += v[j];
        const double base = alpha_ * dangling_mass * inv_n_ + teleport_ * total;
        parallel_for(n, threads_, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                double acc = 0.0;
                for (const NodeId j : graph_->in_links(static_cast<NodeId>(i)))
                    acc += v[j] * inv_out_degree_[j];
                w[i] = alpha_ * acc + base;
            }
        });
    }

    std::vector<double> apply(std::span<const double> v) const {
        std::vector<double> w(v.size());
        apply(v, w);
        return w;
    }

private:
    const DirectedGraph* graph_;
    double alpha_;
    unsigned threads_;
    std::vector<double> inv_out_degree_; // 0 marks a dangling node
    std::vector<NodeId> dangling_;
    double inv_n_ = 0.0;
    double teleport_ = 0.0;
};

struct PageRankResult {
    std::vector<double> probabilities;     // non-negative, sums to 1
    std::vector<NodeId> order;             // decreasing probability, ties by ascending id
    double residual = 0.0;                 // L1 distance of the last two iterates
    std::size_t iterations = 0;
    std::vector<double> residual_history;  // one entry per iteration
};

namespace detail {

inline std::vector<NodeId> rank_order(std::span<const double> p) {
    std::vector<NodeId> order(p.size());
    std::iota(order.begin(), order.end(), NodeId{0});
    std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        if (p[a] != p[b]) return p[a] > p[b];
        return a < b;
    });
    return order;
}

} // namespace detail

// Power iteration from the uniform vector until the L1 step residual drops
// to tol.  The iteration is an L1 contraction with factor alpha on
// zero-sum differences, so the returned vector satisfies
// |G p - p|_1 <= tol as well.
inline PageRankResult pagerank(const GoogleMatrix& op, double tol = 1e-12,
                               std::size_t max_iter = 10000) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    const NodeId n = op.size();
    PageRankResult result;
    std::vector<double> v(n, 1.0 / static_cast<double>(n));
    std::vector<double> w(n);
    for (std::size_t it = 1; it <= max_iter; ++it) {
        op.apply(v, w);
        double sum = 0.0;
        for (const double x : w) sum += x;
        const double inv_sum = 1.0 / sum; // guards float drift; sum stays ~1
        double residual = 0.0;
        for (NodeId i = 0; i < n; ++i) {
            w[i] *= inv_sum;
            residual += std::abs(w[i] - v[i]);
        }
        v.swap(w);
        result.residual_history.push_back(residual);
        if (residual <= tol) {
            result.probabilities = std::move(v);
            result.order = detail::rank_order(result.probabilities);
            result.residual = residual;
            result.iterations = it;
            return result;
        }
    }
    throw ConvergenceError("pagerank power iteration did not converge",
                           result.residual_history.back(), max_iter);
}

struct RankedNode {
    std::size_t k = 0; // 1-based rank
    NodeId node = 0;
    OriginalId original_id = 0;
    std::string label;
    double probability = 0.0;
};

inline std::vector<RankedNode> rank_nodes(const PageRankResult& pr, const DirectedGraph& graph) {
    std::vector<RankedNode> rows;
    rows.reserve(pr.order.size());
    for (std::size_t k = 0; k < pr.order.size(); ++k) {
        const NodeId v = pr.order[k];
        rows.push_back({k + 1, v, graph.original_id(v), graph.label(v), pr.probabilities[v]});
    }
    return rows;
}

} // namespace grm
