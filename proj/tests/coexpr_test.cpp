#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "camirada/coexpr.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace camirada;

namespace {

ExpressionMatrix matrix(const std::vector<std::vector<double>>& rows, std::size_t n_normal) {
    ExpressionMatrix m;
    const auto ns = rows.front().size();
    for (std::size_t s = 0; s < ns; ++s) {
        m.samples.push_back("s" + std::to_string(s));
        m.groups.push_back(s < n_normal ? SampleGroup::normal : SampleGroup::tumor);
    }
    for (std::size_t g = 0; g < rows.size(); ++g) {
        m.genes.push_back("g" + std::to_string(g));
        m.values.insert(m.values.end(), rows[g].begin(), rows[g].end());
    }
    return m;
}

ExpressionMatrix modular_expression(int genes, int samples, int modules, double noise, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    std::vector<std::vector<double>> factor(modules, std::vector<double>(samples));
    for (auto& f : factor)
        for (auto& v : f) v = nd(rng);
    std::vector<std::vector<double>> rows(genes, std::vector<double>(samples));
    for (int g = 0; g < genes; ++g) {
        const double load = 0.3 + 0.7 * (g % 7) / 6.0;
        for (int s = 0; s < samples; ++s) rows[g][s] = load * factor[g % modules][s] + noise * nd(rng);
    }
    return matrix(rows, samples / 2);
}

} // namespace

TEST(ReadExpression, ParsesHeadersAndDropsMissingRows) {
    std::istringstream in("gene\ta\tb\tc\tdd\n"
                          "group\tnormal\tnormal\ttumor\ttumor\n"
                          "G1\t1\t2\t3\t4\n"
                          "G2\t1\tNA\t3\t4\n"
                          "G3\t0.5\t0.1\t-2\t1e-3\n");
    const auto m = read_expression(in);
    EXPECT_EQ(m.gene_count(), 2u);
    EXPECT_EQ(m.sample_count(), 4u);
    EXPECT_EQ(m.dropped_rows, 1u);
    EXPECT_EQ(m.genes[1], "G3");
    EXPECT_EQ(m.at(1, 2), -2.0);
    EXPECT_EQ(m.group_size(SampleGroup::tumor), 2u);
}

TEST(ReadExpression, RejectsBadInput) {
    std::istringstream bad_group("a\tb\tc\nnormal\tx\ttumor\nG\t1\t2\t3\n");
    EXPECT_THROW(read_expression(bad_group), ParseError);
    std::istringstream ragged("a\tb\tc\nnormal\tnormal\ttumor\nG\t1\t2\t3\nH\t1\t2\n");
    EXPECT_THROW(read_expression(ragged), ParseError);
    std::istringstream text("a\tb\tc\nnormal\tnormal\ttumor\nG\t1\tx\t3\n");
    EXPECT_THROW(read_expression(text), ParseError);
}

TEST(Correlation, WorkedExamples) {
    const auto m = matrix({{1, 2, 3, 4}, {2, 4, 6, 8}, {4, 3, 2, 1}, {1, 2, 2, 1}, {5, 5, 5, 5}}, 2);
    const auto c = correlation_matrix(m);
    ASSERT_EQ(c.size(), 4u);
    EXPECT_EQ(c.dropped_zero_variance, 1u);
    EXPECT_NEAR(c.at(0, 1), 1.0, 1e-15);
    EXPECT_NEAR(c.at(0, 2), -1.0, 1e-15);
    EXPECT_NEAR(c.at(0, 3), 0.0, 1e-15);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(c.at(i, i), 1.0);
}

TEST(Correlation, SymmetricBoundedAndThreadIndependent) {
    std::mt19937_64 rng(1);
    const auto m = modular_expression(40, 20, 4, 0.5, rng);
    const auto a = correlation_matrix(m, 1);
    const auto b = correlation_matrix(m, 4);
    EXPECT_EQ(a.values, b.values);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j) {
            EXPECT_EQ(a.at(i, j), a.at(j, i));
            EXPECT_LE(std::abs(a.at(i, j)), 1.0);
        }
}

TEST(Adjacency, PowerAndThreshold) {
    CorrelationMatrix c;
    c.genes = {"a", "b", "c"};
    c.values = {1.0, 0.5, -0.1, 0.5, 1.0, 0.1000001, -0.1, 0.1000001, 1.0};
    auto net = adjacency_network(c, 6);
    ASSERT_EQ(net.edge_count(), 1u);
    EXPECT_DOUBLE_EQ(net.edges()[0].weight, 0.015625);
    EXPECT_EQ(net.node_count(), 3u);

    // Weight exactly at the cut is excluded; just above is kept.
    c.values = {1.0, 0.75, -0.5, 0.75, 1.0, 0.5000001, -0.5, 0.5000001, 1.0};
    net = adjacency_network(c, 2, 0.25);
    std::size_t kept = 0;
    for (const auto& e : net.edges()) kept += (e.u == 1 && e.v == 2) || (e.u == 2 && e.v == 1);
    EXPECT_EQ(kept, 1u);
    EXPECT_EQ(net.edge_count(), 2u); // |-0.5|^2 == 0.25 is not above the cut
    EXPECT_THROW(adjacency_network(c, 0), DomainError);
}

TEST(SoftThreshold, MatchesIndependentFit) {
    std::mt19937_64 rng(2);
    const auto m = modular_expression(120, 30, 6, 0.8, rng);
    const auto c = correlation_matrix(m);
    std::vector<int> powers(20);
    for (int i = 0; i < 20; ++i) powers[i] = i + 1;
    const auto rep = pick_soft_threshold(c, powers, 0.85);
    ASSERT_EQ(rep.rows.size(), 20u);
    int expect = -1;
    for (const auto& r : rep.rows) {
        const double f = oracle::scale_free_fit(oracle::soft_connectivity(c.values, c.size(), r.power));
        EXPECT_NEAR(r.scale_free_fit, f, 1e-9) << "power " << r.power;
        if (expect < 0 && f >= 0.85) expect = r.power;
    }
    if (expect > 0) {
        EXPECT_TRUE(rep.qualified);
        EXPECT_EQ(rep.chosen_power, expect);
    } else {
        EXPECT_FALSE(rep.qualified);
    }
}

TEST(SoftThreshold, SingletonAndZeroCut) {
    std::mt19937_64 rng(3);
    const auto c = correlation_matrix(modular_expression(30, 15, 3, 1.0, rng));
    const std::vector<int> single = {7};
    EXPECT_EQ(pick_soft_threshold(c, single, 0.85).chosen_power, 7);
    std::vector<int> powers = {1, 2, 3, 4, 5};
    const auto rep = pick_soft_threshold(c, powers, 0.0);
    int first = -1;
    for (const auto& r : rep.rows) {
        if (first < 0 && r.fittable && r.scale_free_fit >= 0.0) first = r.power;
    }
    if (first > 0) {
        EXPECT_EQ(rep.chosen_power, first);
    }
    EXPECT_THROW(pick_soft_threshold(c, std::vector<int>{}, 0.85), DomainError);
    EXPECT_THROW(pick_soft_threshold(c, powers, 1.0), DomainError);
}

TEST(SoftThreshold, FallbackPicksBestFit) {
    std::mt19937_64 rng(4);
    const auto c = correlation_matrix(modular_expression(30, 15, 3, 1.0, rng));
    std::vector<int> powers = {1, 2, 3};
    const auto rep = pick_soft_threshold(c, powers, 0.999999);
    if (!rep.qualified) {
        double best = -2.0;
        int arg = 0;
        for (const auto& r : rep.rows)
            if (r.fittable && r.scale_free_fit > best) best = r.scale_free_fit, arg = r.power;
        EXPECT_EQ(rep.chosen_power, arg);
    }
}

TEST(SoftThreshold, ConstantConnectivityIsUnfittable) {
    const std::vector<double> k(10, 3.0);
    EXPECT_FALSE(scale_free_fit(k, 1).fittable);
}

TEST(SoftThreshold, InvariantUnderGenePermutation) {
    std::mt19937_64 rng(5);
    const auto m = modular_expression(50, 20, 5, 0.7, rng);
    std::vector<std::size_t> perm(m.gene_count());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    ExpressionMatrix p = m;
    p.genes.clear();
    p.values.clear();
    for (auto i : perm) {
        p.genes.push_back(m.genes[i]);
        const auto r = m.row(i);
        p.values.insert(p.values.end(), r.begin(), r.end());
    }
    std::vector<int> powers = {1, 2, 3, 4, 5, 6, 7, 8};
    const auto a = pick_soft_threshold(correlation_matrix(m), powers);
    const auto b = pick_soft_threshold(correlation_matrix(p), powers);
    EXPECT_EQ(a.chosen_power, b.chosen_power);
    for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_NEAR(a.rows[i].scale_free_fit, b.rows[i].scale_free_fit, 1e-9);
}

TEST(Degs, WelchAgreesWithReference) {
    // normal {1,2,3,4}, tumor {2,4,6,9}
    const auto m = matrix({{1, 2, 3, 4, 2, 4, 6, 9}}, 4);
    const auto r = detect_degs(m);
    ASSERT_EQ(r.stats.size(), 1u);
    EXPECT_NEAR(r.stats[0].t, 1.690641214609248, 1e-12);
    EXPECT_NEAR(r.stats[0].df, 4.0836357498523075, 1e-12);
    EXPECT_NEAR(r.stats[0].p, 0.1647020796280566, 1e-12);
    EXPECT_DOUBLE_EQ(r.stats[0].log2_fold_change, 2.75);
    EXPECT_TRUE(r.degs.empty());

    // Unequal group sizes.
    const auto u = detect_degs(matrix({{5.0, 5.05, 4.95, 5.1, 5.3, 4.9, 5.2, 5.0}}, 3));
    EXPECT_NEAR(u.stats[0].t, 1.3093073414159513, 1e-12);
    EXPECT_NEAR(u.stats[0].df, 5.1578947368421, 1e-12);
    EXPECT_NEAR(u.stats[0].p, 0.24572103030770281, 1e-12);
}

TEST(Degs, CutoffsApplyTogether) {
    const auto m = matrix({{1.0, 1.1, 0.9, 1.0, 3.0, 3.1, 2.9, 3.0},     // big shift
                           {1.0, 1.001, 0.999, 1.0, 1.05, 1.051, 1.049, 1.05}, // tiny but significant
                           {1, 2, 3, 4, 2, 4, 6, 9},                        // large but noisy
                           {2, 2, 2, 2, 2, 2, 2, 2}},                       // constant
                          4);
    const auto r = detect_degs(m, 0.05, 0.1);
    EXPECT_EQ(r.degs.members, (std::set<std::string>{"g0"}));
    EXPECT_EQ(r.stats[3].p, 1.0);
    EXPECT_TRUE(detect_degs(m, 0.05, 0.01).degs.contains("g1"));
    EXPECT_THROW(detect_degs(matrix({{1, 2, 3}}, 1)), DomainError);
}

TEST(Subnetwork, PathTopTwo) {
    NetworkBuilder b;
    b.add_edge("A", "B");
    b.add_edge("B", "C");
    b.add_edge("C", "D");
    b.add_node("Z");
    const auto sub = extract_subnetwork(std::move(b).build(), make_gene_set("s", {"A"}), 2, {0.7, 1e-12, 1000});
    EXPECT_EQ(sub.node_count(), 2u);
    EXPECT_EQ(sub.edge_count(), 1u);
    EXPECT_TRUE(sub.find("A"));
    EXPECT_TRUE(sub.find("B"));
}

TEST(Subnetwork, ResultIsConnectedAndBounded) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 40;
        const auto net = fixtures::network_from(n, oracle::random_connected_graph(n, 0.05, rng));
        const std::size_t k = 5 + trial;
        const auto sub = extract_subnetwork(net, make_gene_set("s", {"g1", "g7"}), k, {});
        EXPECT_LE(sub.node_count(), k);
        EXPECT_EQ(connected_components(sub).size(), 1u);
    }
}
