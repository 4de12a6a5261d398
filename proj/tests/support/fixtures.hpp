#pragma once

// Small graphs and conversions shared by the unit tests.

#include <string>
#include <vector>

#include "camirada/netcore.hpp"
#include "support/oracles.hpp"

namespace fixtures {

inline std::string gene(int i) { return "g" + std::to_string(i); }

/// Network with nodes g0..g{n-1} in index order.
inline camirada::Network network_from(int n, const std::vector<oracle::WeightedEdge>& edges) {
    camirada::NetworkBuilder b;
    for (int i = 0; i < n; ++i) b.add_node(gene(i));
    for (const auto& e : edges) b.add_edge(gene(e.u), gene(e.v), e.w);
    return std::move(b).build();
}

/// Two triangles {g0,g1,g2} and {g3,g4,g5} bridged by g2-g3.
inline std::vector<oracle::WeightedEdge> bridged_triangles() {
    return {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}, {3, 4, 1.0}, {4, 5, 1.0}, {3, 5, 1.0}, {2, 3, 1.0}};
}

} // namespace fixtures
