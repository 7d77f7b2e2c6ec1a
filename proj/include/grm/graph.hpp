#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "grm/errors.hpp"

namespace grm {

using NodeId = std::uint32_t;
using OriginalId = std::uint64_t;

struct GraphOptions {
    bool keep_self_loops = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

// Consumes leading whitespace and one decimal integer.  Returns false on a
// missing/garbled token; throws ParseError on a value that overflows u64.
inline bool consume_u64(std::string_view& s, std::uint64_t& out, const std::string& where) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    if (s.empty()) return false;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec == std::errc::result_out_of_range)
        throw ParseError(where + ": id overflow");
    if (res.ec != std::errc{} || res.ptr == s.data()) return false;
    s.remove_prefix(static_cast<std::size_t>(res.ptr - s.data()));
    return true;
}

} // namespace detail

// Immutable directed network with contiguous internal ids 0..n_nodes-1.
// Adjacency is stored twice in CSR form: out_links per source and in_links
// per destination (the exact transpose).  Original ids from the input are
// remapped densely in ascending order; the bijection is retained so results
// can always be reported in original-id space.  Optional labels map nodes to
// unique title strings.
class DirectedGraph {
public:
    DirectedGraph() = default;

    // Builds a graph from (source, destination) pairs in original-id space.
    // Duplicate edges collapse to one; self-loops are dropped unless kept by
    // option.  declared_nodes additionally registers ids 0..declared_nodes-1
    // so nodes without any edge still exist (they become dangling).
    static DirectedGraph from_edges(std::vector<std::pair<OriginalId, OriginalId>> edges,
                                    std::optional<std::uint64_t> declared_nodes = {},
                                    const GraphOptions& opts = {}) {
        std::vector<OriginalId> ids;
        if (declared_nodes) {
            if (*declared_nodes > std::numeric_limits<NodeId>::max())
                throw std::invalid_argument("declared node count overflows internal id type");
            ids.reserve(*declared_nodes + 2 * edges.size());
            for (std::uint64_t i = 0; i < *declared_nodes; ++i) ids.push_back(i);
        } else {
            ids.reserve(2 * edges.size());
        }
        for (const auto& [s, d] : edges) {
            ids.push_back(s);
            ids.push_back(d);
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        if (ids.empty()) throw std::invalid_argument("graph has no nodes");
        if (ids.size() > std::numeric_limits<NodeId>::max())
            throw std::invalid_argument("node count overflows internal id type");

        DirectedGraph g;
        g.external_ids_ = std::move(ids);
        const NodeId n = static_cast<NodeId>(g.external_ids_.size());
        g.internal_ids_.reserve(n);
        for (NodeId v = 0; v < n; ++v) g.internal_ids_.emplace(g.external_ids_[v], v);

        std::vector<std::pair<NodeId, NodeId>> internal;
        internal.reserve(edges.size());
        for (const auto& [s, d] : edges) {
            const NodeId is = g.internal_ids_.at(s);
            const NodeId id = g.internal_ids_.at(d);
            if (is == id && !opts.keep_self_loops) continue;
            internal.emplace_back(is, id);
        }
        std::sort(internal.begin(), internal.end());
        internal.erase(std::unique(internal.begin(), internal.end()), internal.end());

        g.out_offsets_.assign(n + 1, 0);
        g.out_targets_.reserve(internal.size());
        for (const auto& [s, d] : internal) ++g.out_offsets_[s + 1];
        for (NodeId v = 0; v < n; ++v) g.out_offsets_[v + 1] += g.out_offsets_[v];
        for (const auto& [s, d] : internal) g.out_targets_.push_back(d);

        // Transpose.  Edges are sorted by (src, dst), so scattering by dst
        // leaves each in_links list sorted by source.
        g.in_offsets_.assign(n + 1, 0);
        for (const auto& [s, d] : internal) ++g.in_offsets_[d + 1];
        for (NodeId v = 0; v < n; ++v) g.in_offsets_[v + 1] += g.in_offsets_[v];
        g.in_sources_.resize(internal.size());
        std::vector<std::size_t> cursor(g.in_offsets_.begin(), g.in_offsets_.end() - 1);
        for (const auto& [s, d] : internal) g.in_sources_[cursor[d]++] = s;
        return g;
    }

    NodeId n_nodes() const { return static_cast<NodeId>(external_ids_.size()); }
    std::size_t n_edges() const { return out_targets_.size(); }

    std::span<const NodeId> out_links(NodeId j) const {
        return {out_targets_.data() + out_offsets_[j], out_offsets_[j + 1] - out_offsets_[j]};
    }
    std::span<const NodeId> in_links(NodeId i) const {
        return {in_sources_.data() + in_offsets_[i], in_offsets_[i + 1] - in_offsets_[i]};
    }
    NodeId out_degree(NodeId j) const {
        return static_cast<NodeId>(out_offsets_[j + 1] - out_offsets_[j]);
    }
    bool has_edge(NodeId from, NodeId to) const {
        const auto links = out_links(from);
        return std::binary_search(links.begin(), links.end(), to);
    }

    OriginalId original_id(NodeId v) const { return external_ids_[v]; }
    std::span<const OriginalId> external_ids() const { return external_ids_; }
    std::optional<NodeId> find_original(OriginalId id) const {
        const auto it = internal_ids_.find(id);
        if (it == internal_ids_.end()) return std::nullopt;
        return it->second;
    }

    bool has_labels() const { return !labels_.empty(); }
    const std::string& label(NodeId v) const {
        static const std::string empty;
        return labels_.empty() ? empty : labels_[v];
    }
    std::optional<NodeId> find_title(const std::string& title) const {
        const auto it = title_index_.find(title);
        if (it == title_index_.end()) return std::nullopt;
        return it->second;
    }

    // Titles resolve back to exactly one node, so conflicting assignments
    // are rejected rather than silently overwritten.
    void set_label(NodeId v, const std::string& title) {
        if (title.empty()) throw std::invalid_argument("empty title");
        if (labels_.empty()) labels_.resize(n_nodes());
        if (!labels_[v].empty()) {
            if (labels_[v] == title) return;
            throw std::invalid_argument("node " + std::to_string(external_ids_[v])
                                        + " already labeled '" + labels_[v] + "'");
        }
        const auto it = title_index_.find(title);
        if (it != title_index_.end() && it->second != v)
            throw std::invalid_argument("title '" + title + "' is already mapped to id "
                                        + std::to_string(external_ids_[it->second]));
        title_index_.emplace(title, v);
        labels_[v] = title;
    }

private:
    std::vector<std::size_t> out_offsets_;
    std::vector<NodeId> out_targets_;
    std::vector<std::size_t> in_offsets_;
    std::vector<NodeId> in_sources_;
    std::vector<OriginalId> external_ids_;
    std::unordered_map<OriginalId, NodeId> internal_ids_;
    std::vector<std::string> labels_;
    std::unordered_map<std::string, NodeId> title_index_;
};

// An ordered selection of nodes.  The order is canonical: it fixes the
// row/column order of every reduced matrix built from the subset.
struct NodeSubset {
    std::vector<NodeId> indices;
    std::vector<std::string> names;

    std::size_t size() const { return indices.size(); }
};

// Reads an edge-list file: one "src dst" pair of non-negative integers per
// line, '#' comments, optional header "# nodes=<N>".
inline DirectedGraph load_edge_list(const std::filesystem::path& path,
                                    const GraphOptions& opts = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open edge list: " + path.string());
    std::vector<std::pair<OriginalId, OriginalId>> edges;
    std::optional<std::uint64_t> declared;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        std::string_view sv = detail::trim(line);
        if (sv.empty()) continue;
        if (sv.front() == '#') {
            sv.remove_prefix(1);
            sv = detail::trim(sv);
            if (sv.starts_with("nodes=")) {
                sv.remove_prefix(6);
                std::uint64_t n = 0;
                if (!detail::consume_u64(sv, n, where) || !detail::trim(sv).empty())
                    throw ParseError(where + ": malformed node-count header");
                if (declared) throw ParseError(where + ": duplicate node-count header");
                declared = n;
            }
            continue;
        }
        std::uint64_t src = 0, dst = 0;
        if (!detail::consume_u64(sv, src, where) || !detail::consume_u64(sv, dst, where)
            || !detail::trim(sv).empty())
            throw ParseError(where + ": malformed edge line (expected \"src dst\")");
        edges.emplace_back(src, dst);
    }
    if (edges.empty() && !declared)
        throw ParseError(path.string() + ": empty edge list");
    try {
        return DirectedGraph::from_edges(std::move(edges), declared, opts);
    } catch (const std::invalid_argument& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

struct LabelReport {
    std::size_t attached = 0;
    std::vector<std::string> warnings; // ids in the file but not in the graph
};

// Attaches titles from a "<id>\t<title>" file.  Unknown ids are collected as
// warnings; ambiguous assignments (one title on two ids, or two titles on
// one id) are errors.
inline LabelReport load_labels(DirectedGraph& graph, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open label file: " + path.string());
    LabelReport report;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError(where + ": malformed label line (expected \"<id>\\t<title>\")");
        std::string_view id_sv = detail::trim(std::string_view(line).substr(0, tab));
        const std::string title(detail::trim(std::string_view(line).substr(tab + 1)));
        std::uint64_t id = 0;
        if (!detail::consume_u64(id_sv, id, where) || !id_sv.empty() || title.empty())
            throw ParseError(where + ": malformed label line (expected \"<id>\\t<title>\")");
        const auto v = graph.find_original(id);
        if (!v) {
            report.warnings.push_back(where + ": id " + std::to_string(id) + " not in graph");
            continue;
        }
        try {
            graph.set_label(*v, title);
        } catch (const std::invalid_argument& e) {
            throw ParseError(where + ": " + e.what());
        }
        ++report.attached;
    }
    return report;
}

// Resolves titles (or "@<original-id>" entries) to a subset in the given
// order.  All unresolvable entries are reported together.
inline NodeSubset resolve_subset(std::span<const std::string> entries,
                                 const DirectedGraph& graph) {
    if (entries.empty()) throw std::invalid_argument("subset is empty");
    NodeSubset subset;
    subset.indices.reserve(entries.size());
    subset.names.reserve(entries.size());
    std::vector<std::string> misses;
    std::unordered_set<NodeId> seen;
    for (const auto& entry : entries) {
        std::optional<NodeId> v;
        std::string name = entry;
        if (!entry.empty() && entry.front() == '@') {
            std::string_view sv = std::string_view(entry).substr(1);
            std::uint64_t id = 0;
            try {
                if (detail::consume_u64(sv, id, entry) && detail::trim(sv).empty())
                    v = graph.find_original(id);
            } catch (const ParseError&) {
                // overflowing id cannot name a node; report as a miss
            }
            if (v && graph.has_labels() && !graph.label(*v).empty()) name = graph.label(*v);
        } else {
            v = graph.find_title(entry);
        }
        if (!v) {
            misses.push_back(entry);
            continue;
        }
        if (!seen.insert(*v).second)
            throw std::invalid_argument("duplicate subset entry: " + entry);
        subset.indices.push_back(*v);
        subset.names.push_back(std::move(name));
    }
    if (!misses.empty()) {
        std::string msg = "unresolvable subset entries:";
        for (const auto& m : misses) msg += " '" + m + "'";
        throw std::invalid_argument(msg);
    }
    return subset;
}

// Reads a subset file (one title or "@<id>" per line; file order becomes
// matrix order) and resolves it against the graph.
inline NodeSubset load_subset(const std::filesystem::path& path, const DirectedGraph& graph) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open subset file: " + path.string());
    std::vector<std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
        const std::string_view sv = detail::trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        entries.emplace_back(sv);
    }
    if (entries.empty()) throw ParseError(path.string() + ": empty subset file");
    try {
        return resolve_subset(entries, graph);
    } catch (const std::invalid_argument& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace grm
