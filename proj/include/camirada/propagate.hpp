#pragma once

// Random walk with restart from a seed set and the ranked gene lists it yields.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "camirada/error.hpp"
#include "camirada/netcore.hpp"

namespace camirada {

struct RwrParams {
    double restart = 0.7;
    double tol = 1e-10;
    int max_iter = 1000;
};

struct RankedGene {
    NodeIndex node = 0;
    double score = 0.0;
};

/// Every node of a network ordered by descending score, ties by node order.
class RankedGeneList {
public:
    RankedGeneList() = default;

    RankedGeneList(std::shared_ptr<const NodeTable> nodes, std::vector<double> scores)
        : nodes_(std::move(nodes)), scores_(std::move(scores)) {
        if (!nodes_ || nodes_->size() != scores_.size()) throw Error("ranked list: score vector does not match nodes");
        order_.resize(scores_.size());
        std::iota(order_.begin(), order_.end(), NodeIndex{0});
        std::stable_sort(order_.begin(), order_.end(),
                         [this](NodeIndex a, NodeIndex b) { return scores_[a] > scores_[b]; });
    }

    /// List whose rank order is exactly `genes` (scores decrease linearly).
    static RankedGeneList from_order(const std::vector<GeneId>& genes) {
        auto table = std::make_shared<NodeTable>(genes);
        if (table->size() != genes.size()) throw Error("ranked list: duplicate gene in order");
        std::vector<double> scores(genes.size());
        for (std::size_t i = 0; i < genes.size(); ++i) scores[i] = static_cast<double>(genes.size() - i);
        return RankedGeneList(std::move(table), std::move(scores));
    }

    std::size_t size() const noexcept { return order_.size(); }
    const std::shared_ptr<const NodeTable>& node_table() const noexcept { return nodes_; }

    /// Node at 0-based rank position.
    NodeIndex node_at(std::size_t rank) const { return order_.at(rank); }
    const GeneId& gene_at(std::size_t rank) const { return nodes_->id(order_.at(rank)); }
    double score_at(std::size_t rank) const { return scores_[order_.at(rank)]; }
    double score_of(NodeIndex node) const { return scores_.at(node); }

    std::span<const NodeIndex> order() const noexcept { return order_; }
    std::span<const double> scores() const noexcept { return scores_; }

    // Diagnostics from the walk that produced the list.
    int iterations = 0;
    bool converged = true;
    double last_change = 0.0;
    std::size_t mapped_seeds = 0;
    std::size_t dropped_seeds = 0;

private:
    std::shared_ptr<const NodeTable> nodes_;
    std::vector<double> scores_;
    std::vector<NodeIndex> order_;
};

inline void validate(const RwrParams& p) {
    if (!(p.restart > 0.0 && p.restart <= 1.0)) throw DomainError("rwr: restart must lie in (0, 1]");
    if (!(p.tol > 0.0)) throw DomainError("rwr: tol must be positive");
    if (p.max_iter < 1) throw DomainError("rwr: max_iter must be positive");
}

/// Iterates p <- (1-r) W p + r p0 with p0 uniform over `seeds` until the L1
/// change drops below tol or max_iter is reached (reported via `converged`).
inline RankedGeneList rwr(const TransitionOperator& op, std::span<const NodeIndex> seeds, const RwrParams& params) {
    validate(params);
    if (seeds.empty()) throw DomainError("rwr: no seed maps into the network");
    const auto n = op.size();
    std::vector<double> p0(n, 0.0);
    std::size_t mapped = 0;
    for (const auto s : seeds) {
        if (s >= n) throw DomainError("rwr: seed index out of range");
        if (p0[s] == 0.0) ++mapped;
        p0[s] = 1.0;
    }
    for (auto& x : p0) x /= static_cast<double>(mapped);

    const double r = params.restart;
    std::vector<double> p = p0;
    std::vector<double> next(n);
    int it = 0;
    double change = 0.0;
    bool converged = false;
    while (it < params.max_iter) {
        op.apply(p, next);
        change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = (1.0 - r) * next[i] + r * p0[i];
            change += std::abs(next[i] - p[i]);
        }
        p.swap(next);
        ++it;
        if (change < params.tol) {
            converged = true;
            break;
        }
    }
    RankedGeneList ranks(op.node_table(), std::move(p));
    ranks.iterations = it;
    ranks.converged = converged;
    ranks.last_change = change;
    ranks.mapped_seeds = mapped;
    return ranks;
}

/// Seeds not present in the network are dropped and counted in `dropped_seeds`.
inline RankedGeneList rwr(const TransitionOperator& op, const GeneSet& seeds, const RwrParams& params) {
    std::vector<NodeIndex> idx;
    std::size_t dropped = 0;
    for (const auto& g : seeds.members) {
        if (auto i = op.node_table()->find(g))
            idx.push_back(*i);
        else
            ++dropped;
    }
    std::sort(idx.begin(), idx.end());
    auto ranks = rwr(op, idx, params);
    ranks.dropped_seeds = dropped;
    return ranks;
}

/// The k best-ranked genes (all genes when k >= list size).
inline GeneSet top_k_genes(const RankedGeneList& ranks, std::size_t k) {
    if (k < 1) throw DomainError("top_k_genes: k must be >= 1");
    GeneSet out{"top" + std::to_string(k), {}};
    const auto take = std::min(k, ranks.size());
    for (std::size_t i = 0; i < take; ++i) out.members.insert(ranks.gene_at(i));
    return out;
}

inline std::vector<NodeIndex> top_k_nodes(const RankedGeneList& ranks, std::size_t k) {
    if (k < 1) throw DomainError("top_k_genes: k must be >= 1");
    const auto take = std::min(k, ranks.size());
    return {ranks.order().begin(), ranks.order().begin() + static_cast<std::ptrdiff_t>(take)};
}

} // namespace camirada
