#pragma once

// Running-sum enrichment of a gene set along a ranked list, and the
// bidirectional association score combining both walk directions.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "camirada/error.hpp"
#include "camirada/netcore.hpp"
#include "camirada/propagate.hpp"

namespace camirada {

/// balanced: hit +sqrt((N-n)/n), miss -sqrt(n/(N-n)); the walk ends at zero.
/// literal:  hit +sqrt((N-n)/n), miss -sqrt((N-n)/n).
enum class EsMode { balanced, literal };

inline const char* to_string(EsMode m) { return m == EsMode::balanced ? "balanced" : "literal"; }

inline EsMode parse_es_mode(std::string_view s) {
    if (s == "balanced") return EsMode::balanced;
    if (s == "literal") return EsMode::literal;
    throw DomainError("unknown enrichment mode '" + std::string(s) + "'");
}

struct EnrichmentScore {
    double value = 0.0;
    EsMode mode = EsMode::balanced;
    std::size_t n_hits = 0;
    std::size_t list_length = 0;
    double terminal = 0.0;     ///< running sum after the last element
    std::size_t peak_rank = 0; ///< 1-based position where the maximum is first attained
};

/// Maximum prefix of the hit/miss walk over `order`.
///
/// `member` is indexed by node. `weight_n` overrides the set size used in the
/// increments (defaults to `n_hits`).
inline EnrichmentScore running_sum_es(std::span<const NodeIndex> order, std::span<const std::uint8_t> member,
                                      std::size_t n_hits, EsMode mode,
                                      std::optional<std::size_t> weight_n = std::nullopt) {
    const auto N = order.size();
    if (n_hits == 0) throw DomainError("running_sum_es: set does not intersect the ranked list");
    if (n_hits >= N) throw DomainError("running_sum_es: set covers every ranked gene");
    const auto n = weight_n.value_or(n_hits);
    if (n == 0 || n >= N) throw DomainError("running_sum_es: weight cardinality outside [1, N)");

    const double Nn = static_cast<double>(N - n);
    const double hit = std::sqrt(Nn / static_cast<double>(n));
    const double miss = mode == EsMode::balanced ? std::sqrt(static_cast<double>(n) / Nn) : hit;

    EnrichmentScore es;
    es.mode = mode;
    es.n_hits = n_hits;
    es.list_length = N;
    double sum = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < N; ++i) {
        sum += member[order[i]] ? hit : -miss;
        if (sum > best) {
            best = sum;
            es.peak_rank = i + 1;
        }
    }
    es.value = best;
    es.terminal = sum;
    return es;
}

/// Set members absent from the list are ignored; n counts mapped members only.
inline EnrichmentScore running_sum_es(const RankedGeneList& ranks, const GeneSet& set, EsMode mode = EsMode::balanced,
                                      std::optional<std::size_t> weight_n = std::nullopt) {
    std::vector<std::uint8_t> member(ranks.size(), 0);
    std::size_t hits = 0;
    for (const auto& g : set.members)
        if (auto i = ranks.node_table()->find(g)) {
            member[*i] = 1;
            ++hits;
        }
    return running_sum_es(ranks.order(), member, hits, mode, weight_n);
}

/// Which set size enters the ES2 increments.
/// reference: |reference| (the scored set); targets: |targets| as in the printed formula.
enum class Es2Weights { reference, targets };

inline const char* to_string(Es2Weights w) { return w == Es2Weights::reference ? "reference" : "targets"; }

inline Es2Weights parse_es2_weights(std::string_view s) {
    if (s == "reference") return Es2Weights::reference;
    if (s == "targets") return Es2Weights::targets;
    throw DomainError("unknown es2 weight rule '" + std::string(s) + "'");
}

struct ScoreParams {
    double beta = 0.5;
    RwrParams rwr;
    EsMode mode = EsMode::balanced;
    Es2Weights es2_weights = Es2Weights::reference;
};

struct AssociationScore {
    EnrichmentScore es1; ///< targets along the walk seeded by the reference set
    EnrichmentScore es2; ///< reference set along the walk seeded by the targets
    double beta = 0.5;
    double es = 0.0;
};

/// Scores many target sets against one reference set on one network.
///
/// The reference walk is computed once at construction.
class ChannelScorer {
public:
    ChannelScorer(const TransitionOperator& op, const GeneSet& reference, const ScoreParams& params)
        : op_(&op), params_(params) {
        if (!(params.beta >= 0.0 && params.beta <= 1.0)) throw DomainError("association_score: beta must lie in [0, 1]");
        reference_member_.assign(op.size(), 0);
        std::vector<NodeIndex> idx;
        for (const auto& g : reference.members)
            if (auto i = op.node_table()->find(g)) {
                reference_member_[*i] = 1;
                idx.push_back(*i);
            }
        std::sort(idx.begin(), idx.end());
        reference_size_ = idx.size();
        if (idx.empty()) throw DomainError("association_score: reference set does not intersect the network");
        reference_ranks_ = rwr(op, idx, params.rwr);
    }

    std::size_t reference_size() const noexcept { return reference_size_; }
    const RankedGeneList& reference_ranks() const noexcept { return reference_ranks_; }

    /// Mapped node indices of `targets`, ascending.
    std::vector<NodeIndex> map(const GeneSet& targets) const {
        std::vector<NodeIndex> idx;
        for (const auto& g : targets.members)
            if (auto i = op_->node_table()->find(g)) idx.push_back(*i);
        std::sort(idx.begin(), idx.end());
        return idx;
    }

    AssociationScore score(std::span<const NodeIndex> target_nodes) const {
        if (target_nodes.empty()) throw DomainError("association_score: target set does not intersect the network");
        std::vector<std::uint8_t> target_member(op_->size(), 0);
        for (const auto i : target_nodes) target_member[i] = 1;
        const std::size_t n1 = target_nodes.size();

        AssociationScore out;
        out.beta = params_.beta;
        out.es1 = running_sum_es(reference_ranks_.order(), target_member, n1, params_.mode);
        const auto target_ranks = rwr(*op_, target_nodes, params_.rwr);
        out.es2 = params_.es2_weights == Es2Weights::targets
                      ? running_sum_es(target_ranks.order(), reference_member_, reference_size_, params_.mode, n1)
                      : running_sum_es(target_ranks.order(), reference_member_, reference_size_, params_.mode);
        out.es = params_.beta * out.es1.value + (1.0 - params_.beta) * out.es2.value;
        return out;
    }

    AssociationScore score(const GeneSet& targets) const { return score(map(targets)); }

private:
    const TransitionOperator* op_;
    ScoreParams params_;
    std::vector<std::uint8_t> reference_member_;
    std::size_t reference_size_ = 0;
    RankedGeneList reference_ranks_;
};

/// ES1 ranks `targets` along the walk seeded by `reference`; ES2 ranks
/// `reference` along the walk seeded by `targets`; es = beta*ES1 + (1-beta)*ES2.
inline AssociationScore association_score(const TransitionOperator& op, const GeneSet& targets,
                                          const GeneSet& reference, const ScoreParams& params) {
    return ChannelScorer(op, reference, params).score(targets);
}

inline AssociationScore association_score(const Network& net, const GeneSet& targets, const GeneSet& reference,
                                          const ScoreParams& params) {
    const TransitionOperator op(net);
    return association_score(op, targets, reference, params);
}

} // namespace camirada
