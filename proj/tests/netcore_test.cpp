#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "camirada/netcore.hpp"
#include "support/fixtures.hpp"

using namespace camirada;

namespace {

Network parse(const std::string& text, bool weighted = true) {
    std::istringstream in(text);
    return read_edge_list(in, weighted, "test.tsv");
}

std::size_t error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

} // namespace

TEST(LoadEdgeList, MinimalParse) {
    const auto net = parse("A\tB\nB\tC\n");
    EXPECT_EQ(net.node_count(), 3u);
    EXPECT_EQ(net.edge_count(), 2u);
    for (const auto& e : net.edges()) EXPECT_EQ(e.weight, 1.0);
    EXPECT_EQ(net.gene(0), "A");
    EXPECT_EQ(net.gene(2), "C");
}

TEST(LoadEdgeList, ReversedDuplicateCollapses) {
    const auto net = parse("A\tB\t0.5\nB\tA\t0.5\n");
    EXPECT_EQ(net.edge_count(), 1u);
    EXPECT_DOUBLE_EQ(net.edges()[0].weight, 0.5);
}

TEST(LoadEdgeList, CommentsAndBlankLinesIgnored) {
    const auto net = parse("# header\n\nA\tB\n# mid\nC\tD\n");
    EXPECT_EQ(net.edge_count(), 2u);
}

TEST(LoadEdgeList, RejectsSelfLoopWithLineNumber) {
    EXPECT_EQ(error_line("A\tA\n"), 1u);
    EXPECT_EQ(error_line("A\tB\nC\tC\n"), 2u);
}

TEST(LoadEdgeList, RejectsBadLines) {
    EXPECT_EQ(error_line("A\tB\nA\n"), 2u);                 // column count
    EXPECT_EQ(error_line("A\tB\t1\tx\n"), 1u);              // too many columns
    EXPECT_EQ(error_line("A\tB\tabc\n"), 1u);               // non-numeric
    EXPECT_EQ(error_line("A\tB\t0\n"), 1u);                 // non-positive
    EXPECT_EQ(error_line("A\tB\t-1.5\n"), 1u);
    EXPECT_EQ(error_line("A\tB\t0.5\n#x\nB\tA\t0.7\n"), 3u); // conflicting duplicate
}

TEST(LoadEdgeList, UnweightedIgnoresThirdColumn) {
    const auto net = parse("A\tB\t0.3\n", false);
    EXPECT_EQ(net.edges()[0].weight, 1.0);
}

TEST(Network, ValidatesInvariants) {
    auto table = std::make_shared<NodeTable>(std::vector<std::string>{"a", "b", "c"});
    EXPECT_THROW(Network(table, {{0, 0, 1.0}}), Error);
    EXPECT_THROW(Network(table, {{0, 1, 1.0}, {1, 0, 1.0}}), Error);
    EXPECT_THROW(Network(table, {{0, 1, 0.0}}), Error);
    EXPECT_THROW(Network(table, {{0, 5, 1.0}}), Error);
    EXPECT_NO_THROW(Network(table, {{0, 1, 1.0}, {1, 2, 2.0}}));
}

TEST(Network, DegreeMatchesIncidentEdgeCount) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 5 + trial;
        const auto edges = oracle::random_connected_graph(n, 0.2, rng);
        const auto net = fixtures::network_from(n, edges);
        std::map<int, std::size_t> incident;
        for (const auto& e : edges) {
            ++incident[e.u];
            ++incident[e.v];
        }
        ASSERT_EQ(net.edge_count(), edges.size());
        for (int i = 0; i < n; ++i) EXPECT_EQ(net.degree(static_cast<NodeIndex>(i)), incident[i]);
    }
}

TEST(Network, SerializeRoundTrip) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto net = fixtures::network_from(30, oracle::random_connected_graph(30, 0.1, rng));
        std::stringstream buf;
        write_edge_list(net, buf);
        const auto back = read_edge_list(buf, true);
        ASSERT_EQ(back.node_count(), net.node_count());
        ASSERT_EQ(back.edge_count(), net.edge_count());
        std::map<std::pair<std::string, std::string>, double> a, b;
        for (const auto& e : net.edges()) a[std::minmax(net.gene(e.u), net.gene(e.v))] = e.weight;
        for (const auto& e : back.edges()) b[std::minmax(back.gene(e.u), back.gene(e.v))] = e.weight;
        EXPECT_EQ(a, b);
    }
}

TEST(LargestComponent, PathPlusIsolatedNode) {
    NetworkBuilder b;
    b.add_edge("A", "B");
    b.add_edge("B", "C");
    b.add_node("D");
    const auto lcc = largest_connected_component(std::move(b).build());
    EXPECT_EQ(lcc.node_count(), 3u);
    EXPECT_EQ(lcc.edge_count(), 2u);
    EXPECT_FALSE(lcc.find("D"));
}

TEST(LargestComponent, TieGoesToLowestIndex) {
    const auto lcc = largest_connected_component(parse("C\tD\nA\tB\n"));
    EXPECT_EQ(lcc.node_count(), 2u);
    EXPECT_TRUE(lcc.find("C"));
    EXPECT_TRUE(lcc.find("D"));
    EXPECT_EQ(lcc.gene(0), "C");
}

TEST(LargestComponent, ConnectedGraphUnchanged) {
    const auto k4 = parse("A\tB\nA\tC\nA\tD\nB\tC\nB\tD\nC\tD\n");
    const auto lcc = largest_connected_component(k4);
    EXPECT_EQ(lcc.node_count(), 4u);
    EXPECT_EQ(lcc.edge_count(), 6u);
    for (NodeIndex i = 0; i < 4; ++i) EXPECT_EQ(lcc.gene(i), k4.gene(i));
}

TEST(LargestComponent, EmptyNetworkIsError) {
    EXPECT_THROW(largest_connected_component(Network{}), DomainError);
}

TEST(TransitionOperator, PathColumns) {
    const auto net = parse("A\tB\nB\tC\n");
    const TransitionOperator op(net);
    const auto a = *net.find("A"), b = *net.find("B"), c = *net.find("C");
    EXPECT_DOUBLE_EQ(op.at(a, b), 0.5);
    EXPECT_DOUBLE_EQ(op.at(c, b), 0.5);
    EXPECT_DOUBLE_EQ(op.at(b, a), 1.0);
    EXPECT_DOUBLE_EQ(op.at(b, c), 1.0);
    EXPECT_EQ(op.at(a, c), 0.0);
}

TEST(TransitionOperator, WeightedStar) {
    const auto net = parse("C\tX\t1\nC\tY\t3\n");
    const TransitionOperator op(net);
    const auto c = *net.find("C"), x = *net.find("X"), y = *net.find("Y");
    EXPECT_DOUBLE_EQ(op.at(x, c), 0.25);
    EXPECT_DOUBLE_EQ(op.at(y, c), 0.75);
}

TEST(TransitionOperator, ColumnsSumToOne) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 3 + trial;
        const auto net = fixtures::network_from(n, oracle::random_connected_graph(n, 0.3, rng));
        const TransitionOperator op(net);
        for (NodeIndex j = 0; j < net.node_count(); ++j) {
            double s = 0.0;
            for (const auto& [i, w] : op.column(j)) s += w;
            EXPECT_NEAR(s, 1.0, 1e-12);
        }
    }
}

TEST(TransitionOperator, IsolatedNodeIsError) {
    NetworkBuilder b;
    b.add_edge("A", "B");
    b.add_node("Z");
    EXPECT_THROW(TransitionOperator(std::move(b).build()), DomainError);
}

TEST(TransitionOperator, NeverFailsAfterLargestComponent) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> pick(0, 19);
    for (int trial = 0; trial < 50; ++trial) {
        NetworkBuilder b;
        for (int i = 0; i < 20; ++i) b.add_node(fixtures::gene(i));
        const int m = 1 + trial % 15;
        for (int e = 0; e < m; ++e) {
            const int u = pick(rng), v = pick(rng);
            if (u != v) b.add_edge(fixtures::gene(u), fixtures::gene(v));
        }
        const auto net = std::move(b).build();
        if (net.edge_count() == 0) continue;
        EXPECT_NO_THROW(TransitionOperator(largest_connected_component(net)));
    }
}

TEST(GeneSet, ReadsOnePerLine) {
    std::istringstream in("# seeds\nA\n B \nA\n\nC\n");
    const auto s = read_gene_set(in, "seeds");
    EXPECT_EQ(s.size(), 3u);
    EXPECT_TRUE(s.contains("B"));
    std::istringstream bad("A B\n");
    EXPECT_THROW(read_gene_set(bad, "x"), ParseError);
}
