#pragma once

// Undirected weighted gene networks: storage, ingestion, components and the
// column-stochastic transition operator used by random walks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "camirada/detail/text.hpp"
#include "camirada/error.hpp"

namespace camirada {

using GeneId = std::string;
using NodeIndex = std::uint32_t;

/// Named set of gene identifiers; duplicates collapse on insertion.
struct GeneSet {
    std::string name;
    std::set<GeneId> members;

    std::size_t size() const noexcept { return members.size(); }
    bool empty() const noexcept { return members.empty(); }
    bool contains(std::string_view g) const { return members.find(std::string(g)) != members.end(); }
};

template <class Range>
GeneSet make_gene_set(std::string name, const Range& genes) {
    GeneSet s{std::move(name), {}};
    for (const auto& g : genes) s.members.emplace(g);
    return s;
}

inline GeneSet make_gene_set(std::string name, std::initializer_list<const char*> genes) {
    GeneSet s{std::move(name), {}};
    for (const char* g : genes) s.members.emplace(g);
    return s;
}

/// Reads one gene identifier per line. Blank lines and '#' comments are skipped.
inline GeneSet read_gene_set(std::istream& in, std::string name, const std::string& source = "<stream>") {
    GeneSet s{std::move(name), {}};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_comment_or_blank(line)) continue;
        const auto tok = detail::trim(line);
        if (detail::has_whitespace(tok)) throw ParseError(source, lineno, "expected one gene id per line");
        s.members.emplace(tok);
    }
    return s;
}

inline GeneSet load_gene_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open gene set file: " + path);
    return read_gene_set(in, path, path);
}

/// Dense index <-> gene id mapping, in first-encounter order.
class NodeTable {
public:
    NodeTable() = default;

    template <class Range>
    explicit NodeTable(const Range& ids) {
        for (const auto& id : ids) intern(GeneId(id));
    }

    /// Index of `id`, appending it if unseen.
    NodeIndex intern(const GeneId& id) {
        const auto [it, inserted] = index_.try_emplace(id, static_cast<NodeIndex>(ids_.size()));
        if (inserted) ids_.push_back(id);
        return it->second;
    }

    std::optional<NodeIndex> find(std::string_view id) const {
        const auto it = index_.find(std::string(id));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    const GeneId& id(NodeIndex i) const { return ids_.at(i); }
    const std::vector<GeneId>& ids() const noexcept { return ids_; }
    std::size_t size() const noexcept { return ids_.size(); }

private:
    std::vector<GeneId> ids_;
    std::unordered_map<GeneId, NodeIndex> index_;
};

struct Edge {
    NodeIndex u = 0;
    NodeIndex v = 0;
    double weight = 1.0;
};

struct Neighbor {
    NodeIndex node = 0;
    double weight = 1.0;
};

namespace detail {
inline std::uint64_t pair_key(NodeIndex a, NodeIndex b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}
} // namespace detail

/// Immutable undirected weighted simple graph.
///
/// Each unordered pair is stored once in `edges()` and appears in the
/// adjacency lists of both endpoints. The node table is shared between a
/// network and the networks derived from it by rewiring.
class Network {
public:
    Network() : nodes_(std::make_shared<NodeTable>()) { build_adjacency(); }

    Network(std::shared_ptr<const NodeTable> nodes, std::vector<Edge> edges)
        : nodes_(std::move(nodes)), edges_(std::move(edges)) {
        if (!nodes_) throw Error("network requires a node table");
        validate();
        build_adjacency();
    }

    std::size_t node_count() const noexcept { return nodes_->size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    bool empty() const noexcept { return nodes_->size() == 0; }

    const GeneId& gene(NodeIndex i) const { return nodes_->id(i); }
    std::optional<NodeIndex> find(std::string_view id) const { return nodes_->find(id); }
    const std::shared_ptr<const NodeTable>& node_table() const noexcept { return nodes_; }

    std::span<const Edge> edges() const noexcept { return edges_; }

    std::span<const Neighbor> neighbors(NodeIndex i) const {
        return {adjacency_.data() + offsets_.at(i), adjacency_.data() + offsets_.at(i + 1)};
    }

    std::size_t degree(NodeIndex i) const { return offsets_.at(i + 1) - offsets_.at(i); }

    double strength(NodeIndex i) const {
        double s = 0.0;
        for (const auto& nb : neighbors(i)) s += nb.weight;
        return s;
    }

    std::vector<std::size_t> degrees() const {
        std::vector<std::size_t> d(node_count());
        for (NodeIndex i = 0; i < d.size(); ++i) d[i] = degree(i);
        return d;
    }

    /// Node indices of the members of `set` present in the network, ascending.
    std::vector<NodeIndex> map_genes(const GeneSet& set) const {
        std::vector<NodeIndex> out;
        for (const auto& g : set.members)
            if (auto i = find(g)) out.push_back(*i);
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    void validate() const {
        const auto n = nodes_->size();
        std::unordered_map<std::uint64_t, std::size_t> seen;
        seen.reserve(edges_.size() * 2);
        for (std::size_t k = 0; k < edges_.size(); ++k) {
            const auto& e = edges_[k];
            if (e.u >= n || e.v >= n) throw Error("edge endpoint out of range");
            if (e.u == e.v) throw Error("self-loop on node " + nodes_->id(e.u));
            if (!(e.weight > 0.0) || !std::isfinite(e.weight))
                throw Error("non-positive edge weight between " + nodes_->id(e.u) + " and " + nodes_->id(e.v));
            if (!seen.emplace(detail::pair_key(e.u, e.v), k).second)
                throw Error("duplicate edge " + nodes_->id(e.u) + " - " + nodes_->id(e.v));
        }
    }

    void build_adjacency() {
        const auto n = nodes_->size();
        offsets_.assign(n + 1, 0);
        for (const auto& e : edges_) {
            ++offsets_[e.u + 1];
            ++offsets_[e.v + 1];
        }
        std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
        adjacency_.resize(offsets_.back());
        std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
        for (const auto& e : edges_) {
            adjacency_[fill[e.u]++] = {e.v, e.weight};
            adjacency_[fill[e.v]++] = {e.u, e.weight};
        }
        // Ascending neighbor order keeps sparse products deterministic.
        for (std::size_t i = 0; i < n; ++i)
            std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                      adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]),
                      [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    }

    std::shared_ptr<const NodeTable> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::size_t> offsets_;
    std::vector<Neighbor> adjacency_;
};

/// Accumulates string-keyed edges, collapsing duplicates of equal weight.
class NetworkBuilder {
public:
    enum class AddResult { added, duplicate };

    AddResult add_edge(const GeneId& a, const GeneId& b, double weight = 1.0) {
        if (a == b) throw DomainError("self-loop on node " + a);
        if (!(weight > 0.0) || !std::isfinite(weight)) throw DomainError("edge weight must be positive and finite");
        const auto u = nodes_->intern(a);
        const auto v = nodes_->intern(b);
        const auto [it, inserted] = index_.try_emplace(detail::pair_key(u, v), edges_.size());
        if (!inserted) {
            if (edges_[it->second].weight != weight)
                throw DomainError("conflicting weights for edge " + a + " - " + b);
            return AddResult::duplicate;
        }
        edges_.push_back({u, v, weight});
        return AddResult::added;
    }

    NodeIndex add_node(const GeneId& id) { return nodes_->intern(id); }

    Network build() && { return Network(std::move(nodes_), std::move(edges_)); }

private:
    std::shared_ptr<NodeTable> nodes_ = std::make_shared<NodeTable>();
    std::vector<Edge> edges_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
};

/// Parses `geneA<TAB>geneB[<TAB>weight]` lines. Lines starting with '#' are ignored.
/// When `weighted` is false any third column is ignored and every weight is 1.
inline Network read_edge_list(std::istream& in, bool weighted, const std::string& source = "<stream>") {
    NetworkBuilder builder;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_comment_or_blank(line)) continue;
        const auto cols = detail::split_tsv(line);
        if (cols.size() != 2 && cols.size() != 3)
            throw ParseError(source, lineno, "expected 2 or 3 tab-separated columns, got " + std::to_string(cols.size()));
        const auto a = detail::trim(cols[0]);
        const auto b = detail::trim(cols[1]);
        if (a.empty() || b.empty() || detail::has_whitespace(a) || detail::has_whitespace(b))
            throw ParseError(source, lineno, "invalid gene id");
        double w = 1.0;
        if (weighted && cols.size() == 3) {
            const auto parsed = detail::parse_double(cols[2]);
            if (!parsed) throw ParseError(source, lineno, "non-numeric weight '" + std::string(cols[2]) + "'");
            w = *parsed;
        }
        if (a == b) throw ParseError(source, lineno, "self-loop on " + std::string(a));
        if (!(w > 0.0) || !std::isfinite(w)) throw ParseError(source, lineno, "non-positive weight");
        try {
            builder.add_edge(GeneId(a), GeneId(b), w);
        } catch (const DomainError& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
    return std::move(builder).build();
}

inline Network load_edge_list(const std::string& path, bool weighted) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open edge list: " + path);
    return read_edge_list(in, weighted, path);
}

/// Writes every edge as `geneA<TAB>geneB<TAB>weight` with round-trip precision.
inline void write_edge_list(const Network& net, std::ostream& out) {
    for (const auto& e : net.edges())
        out << net.gene(e.u) << '\t' << net.gene(e.v) << '\t' << detail::format_exact(e.weight) << '\n';
}

/// Subgraph induced by `keep`; node order follows the parent network's order.
inline Network induced_subgraph(const Network& net, std::span<const NodeIndex> keep) {
    std::vector<NodeIndex> sorted(keep.begin(), keep.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    constexpr auto absent = static_cast<NodeIndex>(-1);
    std::vector<NodeIndex> remap(net.node_count(), absent);
    auto table = std::make_shared<NodeTable>();
    for (const auto i : sorted) {
        if (i >= net.node_count()) throw Error("induced_subgraph: node index out of range");
        remap[i] = table->intern(net.gene(i));
    }
    std::vector<Edge> edges;
    for (const auto& e : net.edges())
        if (remap[e.u] != absent && remap[e.v] != absent) edges.push_back({remap[e.u], remap[e.v], e.weight});
    return Network(std::move(table), std::move(edges));
}

/// Connected components as lists of node indices, each ascending, ordered by
/// their smallest member.
inline std::vector<std::vector<NodeIndex>> connected_components(const Network& net) {
    const auto n = net.node_count();
    std::vector<bool> visited(n, false);
    std::vector<std::vector<NodeIndex>> comps;
    for (NodeIndex s = 0; s < n; ++s) {
        if (visited[s]) continue;
        std::vector<NodeIndex> comp;
        std::queue<NodeIndex> q;
        q.push(s);
        visited[s] = true;
        while (!q.empty()) {
            const auto x = q.front();
            q.pop();
            comp.push_back(x);
            for (const auto& nb : net.neighbors(x))
                if (!visited[nb.node]) {
                    visited[nb.node] = true;
                    q.push(nb.node);
                }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

/// Largest connected component; ties go to the component holding the lowest node index.
inline Network largest_connected_component(const Network& net) {
    if (net.empty()) throw DomainError("largest_connected_component: empty network");
    const auto comps = connected_components(net);
    std::size_t best = 0;
    for (std::size_t c = 1; c < comps.size(); ++c)
        if (comps[c].size() > comps[best].size()) best = c;
    return induced_subgraph(net, comps[best]);
}

/// Column-stochastic operator W with W[i][j] = weight(i,j) / strength(j).
class TransitionOperator {
public:
    explicit TransitionOperator(const Network& net) : nodes_(net.node_table()) {
        const auto n = net.node_count();
        std::vector<double> inv_strength(n);
        for (NodeIndex j = 0; j < n; ++j) {
            const double s = net.strength(j);
            if (!(s > 0.0)) throw DomainError("transition_operator: isolated node " + net.gene(j));
            inv_strength[j] = 1.0 / s;
        }
        offsets_.reserve(n + 1);
        offsets_.push_back(0);
        for (NodeIndex i = 0; i < n; ++i) {
            for (const auto& nb : net.neighbors(i)) {
                cols_.push_back(nb.node);
                coef_.push_back(nb.weight * inv_strength[nb.node]);
            }
            offsets_.push_back(cols_.size());
        }
    }

    std::size_t size() const noexcept { return offsets_.size() - 1; }
    const std::shared_ptr<const NodeTable>& node_table() const noexcept { return nodes_; }

    /// out = W * in
    void apply(std::span<const double> in, std::span<double> out) const {
        const auto n = size();
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (auto k = offsets_[i]; k < offsets_[i + 1]; ++k) acc += coef_[k] * in[cols_[k]];
            out[i] = acc;
        }
    }

    /// Entry W[i][j]; zero when i and j are not adjacent.
    double at(NodeIndex i, NodeIndex j) const {
        for (auto k = offsets_.at(i); k < offsets_.at(i + 1); ++k)
            if (cols_[k] == j) return coef_[k];
        return 0.0;
    }

    /// Non-zero entries of column j as (row, probability).
    std::vector<std::pair<NodeIndex, double>> column(NodeIndex j) const {
        std::vector<std::pair<NodeIndex, double>> out;
        for (NodeIndex i = 0; i < size(); ++i) {
            const double w = at(i, j);
            if (w != 0.0) out.emplace_back(i, w);
        }
        return out;
    }

private:
    std::shared_ptr<const NodeTable> nodes_;
    std::vector<std::size_t> offsets_;
    std::vector<NodeIndex> cols_;
    std::vector<double> coef_;
};

inline TransitionOperator transition_operator(const Network& net) { return TransitionOperator(net); }

} // namespace camirada
