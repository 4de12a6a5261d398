#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "camirada/enrich.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace camirada;
using fixtures::gene;

namespace {

std::vector<std::string> genes(int n) {
    std::vector<std::string> g;
    for (int i = 1; i <= n; ++i) g.push_back("g" + std::to_string(i));
    return g;
}

double max_of(const std::vector<double>& xs) { return *std::max_element(xs.begin(), xs.end()); }

} // namespace

TEST(RunningSum, WorkedExampleAlternating) {
    const auto ranks = RankedGeneList::from_order(genes(4));
    const auto sums = oracle::running_sums({true, false, true, false}, 1.0, 1.0);
    const auto es = running_sum_es(ranks, make_gene_set("s", {"g1", "g3"}), EsMode::balanced);
    EXPECT_EQ(es.value, max_of(sums));
    EXPECT_EQ(es.value, 1.0);
    EXPECT_EQ(es.n_hits, 2u);
    EXPECT_EQ(es.list_length, 4u);
}

TEST(RunningSum, WorkedExampleSingleHitBalanced) {
    const auto ranks = RankedGeneList::from_order(genes(5));
    const auto sums = oracle::running_sums({false, true, false, false, false}, 2.0, 0.5);
    ASSERT_EQ(sums, (std::vector<double>{-0.5, 1.5, 1.0, 0.5, 0.0}));
    const auto es = running_sum_es(ranks, make_gene_set("s", {"g2"}), EsMode::balanced);
    EXPECT_EQ(es.value, 1.5);
    EXPECT_EQ(es.terminal, 0.0);
    EXPECT_EQ(es.peak_rank, 2u);
}

TEST(RunningSum, WorkedExampleSingleHitLiteral) {
    const auto ranks = RankedGeneList::from_order(genes(5));
    const auto sums = oracle::running_sums({false, true, false, false, false}, 2.0, 2.0);
    ASSERT_EQ(sums, (std::vector<double>{-2.0, 0.0, -2.0, -4.0, -6.0}));
    const auto es = running_sum_es(ranks, make_gene_set("s", {"g2"}), EsMode::literal);
    EXPECT_EQ(es.value, 0.0);
    EXPECT_EQ(es.terminal, -6.0);
}

// Balanced sums end at 0, so only literal mode can produce a negative maximum.
TEST(RunningSum, NegativeMaximumIsNotClamped) {
    const auto ranks = RankedGeneList::from_order(genes(5));
    const auto es = running_sum_es(ranks, make_gene_set("s", {"g5"}), EsMode::literal);
    EXPECT_EQ(es.value, -2.0);
    EXPECT_EQ(es.peak_rank, 1u);
}

TEST(RunningSum, Errors) {
    const auto ranks = RankedGeneList::from_order(genes(3));
    EXPECT_THROW(running_sum_es(ranks, make_gene_set("s", {"zz"}), EsMode::balanced), DomainError);
    EXPECT_THROW(running_sum_es(ranks, make_gene_set("s", {"g1", "g2", "g3"}), EsMode::balanced), DomainError);
}

TEST(RunningSum, UnmappedMembersIgnored) {
    const auto ranks = RankedGeneList::from_order(genes(5));
    const auto a = running_sum_es(ranks, make_gene_set("s", {"g2"}), EsMode::balanced);
    const auto b = running_sum_es(ranks, make_gene_set("s", {"g2", "absent1", "absent2"}), EsMode::balanced);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(b.n_hits, 1u);
}

TEST(RunningSum, FuzzedBalancedIdentities) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        std::uniform_int_distribution<int> size(2, 200);
        const int N = size(rng);
        std::uniform_int_distribution<int> nd(1, N - 1);
        const int n = nd(rng);
        auto order = genes(N);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<std::string> members(order.begin(), order.begin() + n);
        std::shuffle(order.begin(), order.end(), rng);
        const auto ranks = RankedGeneList::from_order(order);
        const auto set = make_gene_set("s", members);

        const auto es = running_sum_es(ranks, set, EsMode::balanced);
        EXPECT_NEAR(es.terminal, 0.0, 1e-9);

        // Independent re-scan.
        std::vector<bool> hits;
        for (const auto& g : order) hits.push_back(set.contains(g));
        const double hit = std::sqrt(double(N - n) / n), miss = std::sqrt(double(n) / (N - n));
        EXPECT_NEAR(es.value, max_of(oracle::running_sums(hits, hit, miss)), 1e-12);

        // Best case bound.
        EXPECT_LE(es.value, n * hit + 1e-9);
    }
}

TEST(RunningSum, BestAndWorstCaseOrders) {
    for (int N : {5, 17, 60}) {
        for (int n : {1, 2, N / 2, N - 1}) {
            auto order = genes(N);
            std::vector<std::string> first(order.begin(), order.begin() + n);
            std::vector<std::string> last(order.end() - n, order.end());
            const auto ranks = RankedGeneList::from_order(order);
            const double hit = std::sqrt(double(N - n) / n);
            EXPECT_NEAR(running_sum_es(ranks, make_gene_set("a", first)).value, n * hit, 1e-9);
            // All hits last: the sum falls below zero, then climbs back to 0 at the end.
            const auto worst = running_sum_es(ranks, make_gene_set("b", last));
            EXPECT_NEAR(worst.value, 0.0, 1e-9);
        }
    }
}

TEST(RunningSum, AppendingNonMembersKeepsPeakWithFixedWeights) {
    auto base = genes(10);
    const auto set = make_gene_set("s", {"g2", "g3", "g7"});
    const auto ranks = RankedGeneList::from_order(base);
    const auto es = running_sum_es(ranks, set, EsMode::balanced);
    // Same weights (n = 3, N = 10) on the list truncated after the peak.
    std::vector<std::string> prefix(base.begin(), base.begin() + static_cast<long>(es.peak_rank));
    std::vector<NodeIndex> order(prefix.size());
    std::vector<std::uint8_t> member(prefix.size(), 0);
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        order[i] = static_cast<NodeIndex>(i);
        member[i] = set.contains(prefix[i]);
    }
    const double hit = std::sqrt(7.0 / 3.0), miss = std::sqrt(3.0 / 7.0);
    double s = 0.0, best = -1e300;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        s += member[i] ? hit : -miss;
        best = std::max(best, s);
    }
    EXPECT_NEAR(es.value, best, 1e-12);
}

class AssociationTest : public ::testing::Test {
protected:
    Network net = fixtures::network_from(6, fixtures::bridged_triangles());
    GeneSet targets = make_gene_set("t", {"g0", "g1", "g2"});
    GeneSet reference = make_gene_set("r", {"g3", "g4", "g5"});
    ScoreParams params{0.5, {0.7, 1e-12, 10000}, EsMode::balanced, Es2Weights::reference};
};

TEST_F(AssociationTest, BetaEndpoints) {
    auto p = params;
    p.beta = 1.0;
    auto s = association_score(net, targets, reference, p);
    EXPECT_EQ(s.es, s.es1.value);
    p.beta = 0.0;
    s = association_score(net, targets, reference, p);
    EXPECT_EQ(s.es, s.es2.value);
}

TEST_F(AssociationTest, BridgedTrianglesRegression) {
    // Oracle: dense RWR ranking followed by a direct running sum.
    auto oracle_es = [&](const std::vector<int>& seeds, const std::set<int>& scored) {
        const auto p = oracle::dense_rwr(6, fixtures::bridged_triangles(), seeds, 0.7);
        std::vector<int> order = {0, 1, 2, 3, 4, 5};
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p[a] > p[b]; });
        std::vector<bool> hits;
        for (int i : order) hits.push_back(scored.count(i) > 0);
        return max_of(oracle::running_sums(hits, 1.0, 1.0)); // N = 6, n = 3
    };
    const double es1 = oracle_es({3, 4, 5}, {0, 1, 2});
    const double es2 = oracle_es({0, 1, 2}, {3, 4, 5});
    const auto s = association_score(net, targets, reference, params);
    EXPECT_DOUBLE_EQ(s.es1.value, es1);
    EXPECT_DOUBLE_EQ(s.es2.value, es2);
    EXPECT_DOUBLE_EQ(s.es, 0.5 * es1 + 0.5 * es2);
    // Pinned after first computation: both walks meet three misses first and end at 0.
    EXPECT_DOUBLE_EQ(s.es, 0.0);
    EXPECT_EQ(s.es1.peak_rank, 6u);
}

TEST_F(AssociationTest, OverlappingSetsRegression) {
    const auto t = make_gene_set("t", {"g1", "g2"});
    const auto r = make_gene_set("r", {"g2", "g3"});
    auto oracle_es = [&](const std::vector<int>& seeds, const std::set<int>& scored) {
        const auto p = oracle::dense_rwr(6, fixtures::bridged_triangles(), seeds, 0.7);
        std::vector<int> order = {0, 1, 2, 3, 4, 5};
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p[a] > p[b]; });
        std::vector<bool> hits;
        for (int i : order) hits.push_back(scored.count(i) > 0);
        return max_of(oracle::running_sums(hits, std::sqrt(2.0), std::sqrt(0.5)));
    };
    const auto s = association_score(net, t, r, params);
    EXPECT_NEAR(s.es1.value, oracle_es({2, 3}, {1, 2}), 1e-12);
    EXPECT_NEAR(s.es2.value, oracle_es({1, 2}, {2, 3}), 1e-12);
}

TEST_F(AssociationTest, SameSetGivesEqualDirections) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 8 + trial;
        const auto g = fixtures::network_from(n, oracle::random_connected_graph(n, 0.2, rng));
        const auto s = make_gene_set("a", {"g0", "g2", "g5"});
        const auto score = association_score(g, s, s, params);
        EXPECT_EQ(score.es1.value, score.es2.value);
    }
}

TEST_F(AssociationTest, Es2TargetWeightsUseTargetCardinality) {
    auto p = params;
    p.es2_weights = Es2Weights::targets;
    const auto t = make_gene_set("t", {"g0"});
    const auto r = make_gene_set("r", {"g3", "g4", "g5"});
    const auto s = association_score(net, t, r, p);
    EXPECT_EQ(s.es2.n_hits, 3u);
    // Hit weight sqrt(5/1) with n = |targets| = 1: terminal = 3*sqrt(5) - 3/sqrt(5).
    EXPECT_NEAR(s.es2.terminal, 3.0 * std::sqrt(5.0) - 3.0 / std::sqrt(5.0), 1e-12);
}

TEST_F(AssociationTest, Errors) {
    EXPECT_THROW(association_score(net, make_gene_set("t", {"zz"}), reference, params), DomainError);
    EXPECT_THROW(association_score(net, targets, make_gene_set("r", {"zz"}), params), DomainError);
    auto p = params;
    p.beta = 1.5;
    EXPECT_THROW(association_score(net, targets, reference, p), DomainError);
}
