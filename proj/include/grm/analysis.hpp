#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "grm/errors.hpp"
#include "grm/google_matrix.hpp"
#include "grm/graph.hpp"
#include "grm/reduced_matrix.hpp"

namespace grm {

// Per-edition ranking of a named candidate list (1-based, dense).
struct EditionRankTable {
    std::string edition_tag;
    std::unordered_map<std::string, std::size_t> entries; // name -> rank
};

// Ranks the subset members among themselves by global PageRank probability,
// ties broken by ascending internal id.
inline EditionRankTable local_subset_ranking(const PageRankResult& pr, const NodeSubset& subset,
                                             std::string edition_tag = {}) {
    for (const NodeId v : subset.indices)
        if (v >= pr.probabilities.size())
            throw std::invalid_argument("subset id out of range of the PageRank vector");
    std::vector<std::size_t> positions(subset.size());
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    std::sort(positions.begin(), positions.end(), [&](std::size_t a, std::size_t b) {
        const double pa = pr.probabilities[subset.indices[a]];
        const double pb = pr.probabilities[subset.indices[b]];
        if (pa != pb) return pa > pb;
        return subset.indices[a] < subset.indices[b];
    });
    EditionRankTable table;
    table.edition_tag = std::move(edition_tag);
    for (std::size_t rank = 0; rank < positions.size(); ++rank)
        table.entries.emplace(subset.names[positions[rank]], rank + 1);
    return table;
}

struct LocalRankRow {
    std::size_t local_rank = 0;
    std::string name;
    OriginalId original_id = 0;
    std::size_t global_k = 0;
    double probability = 0.0;
};

inline std::vector<LocalRankRow> local_ranking_rows(const PageRankResult& pr,
                                                    const NodeSubset& subset,
                                                    const DirectedGraph& graph) {
    std::vector<std::size_t> global_k(pr.order.size());
    for (std::size_t k = 0; k < pr.order.size(); ++k) global_k[pr.order[k]] = k + 1;
    std::vector<std::size_t> positions(subset.size());
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    std::sort(positions.begin(), positions.end(), [&](std::size_t a, std::size_t b) {
        const double pa = pr.probabilities[subset.indices[a]];
        const double pb = pr.probabilities[subset.indices[b]];
        if (pa != pb) return pa > pb;
        return subset.indices[a] < subset.indices[b];
    });
    std::vector<LocalRankRow> rows;
    rows.reserve(positions.size());
    for (std::size_t rank = 0; rank < positions.size(); ++rank) {
        const std::size_t p = positions[rank];
        const NodeId v = subset.indices[p];
        rows.push_back({rank + 1, subset.names[p], graph.original_id(v), global_k[v],
                        pr.probabilities[v]});
    }
    return rows;
}

struct ThetaEntry {
    std::string name;
    std::uint64_t theta = 0;
    std::vector<std::optional<std::size_t>> ranks; // parallel to the input tables
};

// Multi-edition score: sum over editions of (cutoff+1 - rank), counting only
// editions where the item ranks within the cutoff.  Sorted by decreasing
// score, ties alphabetical.
inline std::vector<ThetaEntry> theta_score(std::span<const EditionRankTable> tables,
                                           std::size_t cutoff = 100) {
    if (tables.empty()) throw std::invalid_argument("theta_score needs at least one table");
    std::map<std::string, std::vector<std::optional<std::size_t>>> by_name;
    for (std::size_t e = 0; e < tables.size(); ++e)
        for (const auto& [name, rank] : tables[e].entries) {
            auto& ranks = by_name[name];
            ranks.resize(tables.size());
            ranks[e] = rank;
        }
    std::vector<ThetaEntry> scored;
    scored.reserve(by_name.size());
    for (auto& [name, ranks] : by_name) {
        ThetaEntry entry;
        entry.name = name;
        ranks.resize(tables.size());
        entry.ranks = std::move(ranks);
        for (const auto& rank : entry.ranks)
            if (rank && *rank <= cutoff) entry.theta += cutoff + 1 - *rank;
        scored.push_back(std::move(entry));
    }
    std::sort(scored.begin(), scored.end(), [](const ThetaEntry& a, const ThetaEntry& b) {
        if (a.theta != b.theta) return a.theta > b.theta;
        return a.name < b.name;
    });
    return scored;
}

enum class MatrixComponent { GR, Grr, Gqrnd, GrrPlusGqrnd };
enum class Dominance { Direct, Indirect };
enum class Generation { Leader, Closure };

inline const char* to_string(MatrixComponent c) {
    switch (c) {
        case MatrixComponent::GR: return "gr";
        case MatrixComponent::Grr: return "grr";
        case MatrixComponent::Gqrnd: return "gqrnd";
        case MatrixComponent::GrrPlusGqrnd: return "grr+gqrnd";
    }
    return "?";
}
inline const char* to_string(Dominance d) {
    return d == Dominance::Indirect ? "indirect" : "direct";
}
inline const char* to_string(Generation g) {
    return g == Generation::Closure ? "closure" : "leader";
}

inline std::optional<MatrixComponent> parse_component(const std::string& s) {
    if (s == "gr") return MatrixComponent::GR;
    if (s == "grr") return MatrixComponent::Grr;
    if (s == "gqrnd") return MatrixComponent::Gqrnd;
    if (s == "grr+gqrnd") return MatrixComponent::GrrPlusGqrnd;
    return std::nullopt;
}

namespace detail {

inline Eigen::MatrixXd component_matrix(const ReducedMatrixSet& rs, MatrixComponent c) {
    switch (c) {
        case MatrixComponent::GR: return rs.gr;
        case MatrixComponent::Grr: return rs.grr;
        case MatrixComponent::Gqrnd: return rs.gqrnd;
        case MatrixComponent::GrrPlusGqrnd: return rs.grr + rs.gqrnd;
    }
    throw std::invalid_argument("unknown matrix component");
}

inline std::size_t subset_position(const NodeSubset& subset, const std::string& name) {
    const auto it = std::find(subset.names.begin(), subset.names.end(), name);
    if (it == subset.names.end())
        throw std::invalid_argument("name not in subset: " + name);
    return static_cast<std::size_t>(it - subset.names.begin());
}

} // namespace detail

struct FriendEntry {
    std::size_t position = 0; // subset position of the friend
    std::string name;
    double weight = 0.0;
    Dominance dominance = Dominance::Direct;
};

// Strongest rows of a source column: the probabilistic attractors of the
// source node.  The diagonal never counts; dominance compares the hidden
// entry against the direct one regardless of the chosen component.
inline std::vector<FriendEntry> top_friends_at(const ReducedMatrixSet& rs, std::size_t source,
                                               std::size_t k,
                                               MatrixComponent component =
                                                   MatrixComponent::GrrPlusGqrnd) {
    const std::size_t nr = static_cast<std::size_t>(rs.nr());
    if (source >= nr) throw std::invalid_argument("source position out of range");
    if (k >= nr) throw std::invalid_argument("k must be smaller than the subset size");
    const Eigen::MatrixXd m = detail::component_matrix(rs, component);
    std::vector<std::size_t> rows;
    rows.reserve(nr - 1);
    for (std::size_t i = 0; i < nr; ++i)
        if (i != source) rows.push_back(i);
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
        const double wa = m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(source));
        const double wb = m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(source));
        if (wa != wb) return wa > wb;
        return a < b;
    });
    rows.resize(std::min(k, rows.size()));
    std::vector<FriendEntry> friends;
    friends.reserve(rows.size());
    for (const std::size_t i : rows) {
        const auto ei = static_cast<Eigen::Index>(i);
        const auto ej = static_cast<Eigen::Index>(source);
        friends.push_back({i, rs.subset.names[i], m(ei, ej),
                           rs.gqrnd(ei, ej) > rs.grr(ei, ej) ? Dominance::Indirect
                                                             : Dominance::Direct});
    }
    return friends;
}

inline std::vector<FriendEntry> top_friends(const ReducedMatrixSet& rs, const std::string& source,
                                            std::size_t k,
                                            MatrixComponent component =
                                                MatrixComponent::GrrPlusGqrnd) {
    return top_friends_at(rs, detail::subset_position(rs.subset, source), k, component);
}

struct FriendshipEdge {
    std::size_t source = 0; // subset positions
    std::size_t target = 0;
    double weight = 0.0;
    Dominance dominance = Dominance::Direct;
    Generation generation = Generation::Leader;
};

struct FriendshipGraph {
    std::vector<std::string> nodes; // all subset names, in subset order
    std::vector<FriendshipEdge> edges;
};

// Expands every subset node with its top-k friends.
inline FriendshipGraph friendship_graph(const ReducedMatrixSet& rs, std::size_t k = 4,
                                        MatrixComponent component =
                                            MatrixComponent::GrrPlusGqrnd) {
    FriendshipGraph fg;
    fg.nodes = rs.subset.names;
    const std::size_t nr = static_cast<std::size_t>(rs.nr());
    for (std::size_t j = 0; j < nr; ++j)
        for (const auto& f : top_friends_at(rs, j, k, component))
            fg.edges.push_back({j, f.position, f.weight, f.dominance, Generation::Leader});
    return fg;
}

// Friends-of-friends closure: leaders expand first, then every newly reached
// node expands in turn until no new edges appear.  Each node expands at most
// once, so the process finishes within Nr rounds.
inline FriendshipGraph leader_closure_graph(const ReducedMatrixSet& rs,
                                            std::span<const std::string> leaders,
                                            std::size_t k = 4,
                                            MatrixComponent component = MatrixComponent::Gqrnd) {
    FriendshipGraph fg;
    fg.nodes = rs.subset.names;
    std::vector<std::size_t> frontier;
    frontier.reserve(leaders.size());
    std::unordered_set<std::size_t> expanded;
    for (const auto& name : leaders) {
        const std::size_t p = detail::subset_position(rs.subset, name);
        if (expanded.insert(p).second) frontier.push_back(p);
    }
    Generation generation = Generation::Leader;
    while (!frontier.empty()) {
        std::vector<std::size_t> next;
        for (const std::size_t j : frontier)
            for (const auto& f : top_friends_at(rs, j, k, component)) {
                fg.edges.push_back({j, f.position, f.weight, f.dominance, generation});
                if (expanded.insert(f.position).second) next.push_back(f.position);
            }
        frontier = std::move(next);
        generation = Generation::Closure;
    }
    return fg;
}

// Entrywise equal-weight mean of several reduced sets over the same subset.
// The mean of column-stochastic matrices is again column-stochastic, so the
// result is a valid reduced set; lambda_c is averaged for provenance.
inline ReducedMatrixSet average_reduced(std::span<const ReducedMatrixSet> sets) {
    if (sets.empty()) throw std::invalid_argument("nothing to average");
    const auto& first = sets.front();
    for (const auto& rs : sets) {
        if (rs.subset.names != first.subset.names)
            throw std::invalid_argument("mismatched subsets across reduced sets");
        if (rs.alpha != first.alpha)
            throw std::invalid_argument("mismatched alpha across reduced sets");
    }
    ReducedMatrixSet avg;
    avg.subset = first.subset;
    avg.alpha = first.alpha;
    avg.edition_tag = "average";
    avg.tolerances = first.tolerances;
    const double w = 1.0 / static_cast<double>(sets.size());
    const Eigen::Index nr = first.gr.rows();
    avg.gr = Eigen::MatrixXd::Zero(nr, nr);
    avg.grr = Eigen::MatrixXd::Zero(nr, nr);
    avg.gpr = Eigen::MatrixXd::Zero(nr, nr);
    avg.gqrd = Eigen::MatrixXd::Zero(nr, nr);
    avg.gqrnd = Eigen::MatrixXd::Zero(nr, nr);
    for (const auto& rs : sets) {
        avg.gr += w * rs.gr;
        avg.grr += w * rs.grr;
        avg.gpr += w * rs.gpr;
        avg.gqrd += w * rs.gqrd;
        avg.gqrnd += w * rs.gqrnd;
        avg.lambda_c += w * rs.lambda_c;
    }
    return avg;
}

// Stationary distribution of a dense column-stochastic matrix by power
// iteration from the uniform vector.
inline PageRankResult stationary_distribution(const Eigen::MatrixXd& m, double tol = 1e-12,
                                              std::size_t max_iter = 10000) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw std::invalid_argument("matrix must be square and non-empty");
    const Eigen::Index n = m.rows();
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    PageRankResult result;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd w = m * v;
        w /= w.sum();
        const double residual = (w - v).lpNorm<1>();
        v = std::move(w);
        result.residual_history.push_back(residual);
        if (residual <= tol) {
            result.probabilities.assign(v.data(), v.data() + n);
            result.order = detail::rank_order(result.probabilities);
            result.residual = residual;
            result.iterations = it;
            return result;
        }
    }
    throw ConvergenceError("stationary distribution did not converge",
                           result.residual_history.back(), max_iter);
}

// PageRank of the reduced matrix itself.  GR columns already sum to one and
// inherit the teleport effects of the full chain, so no second damping is
// applied.
inline PageRankResult pagerank_of_reduced(const ReducedMatrixSet& rs, double tol = 1e-12,
                                          std::size_t max_iter = 10000) {
    return stationary_distribution(rs.gr, tol, max_iter);
}

struct SensitivityResult {
    std::string source, destination; // the perturbed link source -> destination
    double delta = 0.0;
    std::vector<double> d;  // logarithmic derivative per subset position
    bool varied = true;     // false when the perturbed entry was zero
};

namespace detail {

inline Eigen::MatrixXd perturb_link(const Eigen::MatrixXd& gr, Eigen::Index row, Eigen::Index col,
                                    double delta) {
    Eigen::MatrixXd m = gr;
    m(row, col) *= 1.0 + delta;
    m.col(col) /= m.col(col).sum(); // keep the column stochastic
    return m;
}

} // namespace detail

// Logarithmic derivative of the reduced PageRank with respect to a relative
// weight change of one link, estimated by a central difference over +-delta
// with column renormalization after each perturbation.
inline SensitivityResult sensitivity(const ReducedMatrixSet& rs, const std::string& from,
                                     const std::string& to, double delta = 0.01,
                                     double tol = 1e-12, std::size_t max_iter = 10000) {
    if (!(delta > -1.0)) throw std::invalid_argument("delta must exceed -1");
    const auto col = static_cast<Eigen::Index>(detail::subset_position(rs.subset, from));
    const auto row = static_cast<Eigen::Index>(detail::subset_position(rs.subset, to));
    SensitivityResult result;
    result.source = from;
    result.destination = to;
    result.delta = delta;
    result.d.assign(static_cast<std::size_t>(rs.nr()), 0.0);
    if (delta == 0.0) return result;
    if (rs.gr(row, col) == 0.0) {
        result.varied = false; // nothing to vary
        return result;
    }
    const auto base = pagerank_of_reduced(rs, tol, max_iter);
    const auto plus =
        stationary_distribution(detail::perturb_link(rs.gr, row, col, delta), tol, max_iter);
    const auto minus =
        stationary_distribution(detail::perturb_link(rs.gr, row, col, -delta), tol, max_iter);
    for (std::size_t i = 0; i < result.d.size(); ++i)
        result.d[i] = (plus.probabilities[i] - minus.probabilities[i])
                      / (2.0 * delta * base.probabilities[i]);
    return result;
}

// Combined bidirectional influence on node c: the sum of the c-sensitivities
// to the p->c link and to the c->p link.
inline double two_way_sensitivity(const ReducedMatrixSet& rs, const std::string& p,
                                  const std::string& c, double delta = 0.01, double tol = 1e-12,
                                  std::size_t max_iter = 10000) {
    const std::size_t at_c = detail::subset_position(rs.subset, c);
    const double forward = sensitivity(rs, p, c, delta, tol, max_iter).d[at_c];
    const double backward = sensitivity(rs, c, p, delta, tol, max_iter).d[at_c];
    return forward + backward;
}

// Grid of two-way sensitivities: rows follow cs, columns follow ps.
inline Eigen::MatrixXd diagonal_sensitivity_matrix(const ReducedMatrixSet& rs,
                                                   std::span<const std::string> ps,
                                                   std::span<const std::string> cs,
                                                   double delta = 0.01, double tol = 1e-12,
                                                   std::size_t max_iter = 10000) {
    Eigen::MatrixXd grid(static_cast<Eigen::Index>(cs.size()),
                         static_cast<Eigen::Index>(ps.size()));
    for (std::size_t i = 0; i < cs.size(); ++i)
        for (std::size_t j = 0; j < ps.size(); ++j)
            grid(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                two_way_sensitivity(rs, ps[j], cs[i], delta, tol, max_iter);
    return grid;
}

} // namespace grm
