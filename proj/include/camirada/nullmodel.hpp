#pragma once

// Degree-preserving double-edge-swap randomization and permutation p-values.

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <unordered_set>
#include <vector>

#include "camirada/detail/parallel.hpp"
#include "camirada/enrich.hpp"
#include "camirada/error.hpp"
#include "camirada/netcore.hpp"

namespace camirada {

/// Mutable edge list supporting checked double-edge swaps.
class EdgeSwapper {
public:
    explicit EdgeSwapper(std::span<const Edge> edges) : edges_(edges.begin(), edges.end()) {
        present_.reserve(edges_.size() * 2);
        for (const auto& e : edges_) present_.insert(detail::pair_key(e.u, e.v));
    }

    /// Rewires (a,b),(c,d) into (a,d),(c,b), where (c,d) is edge j read in
    /// reverse when `flip` is set. Rejected (returns false, no change) if the
    /// result would hold a self-loop or an edge already present.
    bool try_swap(std::size_t i, std::size_t j, bool flip) {
        if (i == j) return false;
        auto& e1 = edges_.at(i);
        auto& e2 = edges_.at(j);
        const NodeIndex a = e1.u, b = e1.v;
        const NodeIndex c = flip ? e2.v : e2.u;
        const NodeIndex d = flip ? e2.u : e2.v;
        if (a == d || c == b) return false;
        const auto k1 = detail::pair_key(a, d);
        const auto k2 = detail::pair_key(c, b);
        if (k1 == k2 || present_.count(k1) || present_.count(k2)) return false;
        present_.erase(detail::pair_key(a, b));
        present_.erase(detail::pair_key(c, d));
        present_.insert(k1);
        present_.insert(k2);
        // Weights travel with the edge slot they came from.
        e1 = {a, d, e1.weight};
        e2 = {c, b, e2.weight};
        return true;
    }

    const std::vector<Edge>& edges() const noexcept { return edges_; }
    std::vector<Edge> release() && { return std::move(edges_); }

private:
    std::vector<Edge> edges_;
    std::unordered_set<std::uint64_t> present_;
};

struct RewireStats {
    std::size_t attempted = 0;
    std::size_t accepted = 0;
};

/// swap_factor * |E| attempted swaps on uniformly drawn edge pairs.
/// Each node keeps its edge count; deterministic given `seed`.
inline Network degree_preserving_rewire(const Network& net, int swap_factor, std::uint64_t seed,
                                        RewireStats* stats = nullptr) {
    if (net.edge_count() < 2) throw DomainError("degree_preserving_rewire: need at least 2 edges");
    if (swap_factor < 1) throw DomainError("degree_preserving_rewire: swap_factor must be positive");
    EdgeSwapper swapper(net.edges());
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, net.edge_count() - 1);
    std::bernoulli_distribution coin(0.5);
    const auto attempts = static_cast<std::size_t>(swap_factor) * net.edge_count();
    std::size_t accepted = 0;
    for (std::size_t t = 0; t < attempts; ++t) {
        const auto i = pick(rng);
        auto j = pick(rng);
        while (j == i) j = pick(rng);
        if (swapper.try_swap(i, j, coin(rng))) ++accepted;
    }
    if (stats) *stats = {attempts, accepted};
    return Network(net.node_table(), std::move(swapper).release());
}

/// Add-one estimator (#{x >= observed} + 1) / (m + 1).
inline double empirical_pvalue(double observed, std::span<const double> null) {
    if (null.empty()) throw DomainError("empirical_pvalue: empty null sample");
    std::size_t ge = 0;
    for (const double x : null)
        if (x >= observed) ++ge;
    return static_cast<double>(ge + 1) / static_cast<double>(null.size() + 1);
}

struct NullDistribution {
    std::vector<double> samples; ///< in permutation-index order
    double observed = 0.0;

    std::size_t m() const noexcept { return samples.size(); }
    double pvalue() const { return empirical_pvalue(observed, samples); }

    std::vector<double> sorted() const {
        auto s = samples;
        std::sort(s.begin(), s.end());
        return s;
    }
};

struct NullParams {
    ScoreParams score;
    int swap_factor = 10;
    unsigned threads = 1;
};

/// Observed association score on `net` plus its value on m rewired copies;
/// permutation k uses seed base_seed + k.
inline NullDistribution null_distribution(const Network& net, const GeneSet& targets, const GeneSet& reference,
                                          std::size_t m, const NullParams& params, std::uint64_t base_seed) {
    if (m < 1) throw DomainError("null_distribution: m must be >= 1");
    NullDistribution out;
    out.observed = association_score(net, targets, reference, params.score).es;
    out.samples.assign(m, 0.0);
    detail::parallel_for(m, params.threads, [&](std::size_t k) {
        const auto rewired = degree_preserving_rewire(net, params.swap_factor, base_seed + k);
        out.samples[k] = association_score(rewired, targets, reference, params.score).es;
    });
    return out;
}

} // namespace camirada
