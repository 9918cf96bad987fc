#pragma once

// Shared instance builders for the test suites.

#include <algorithm>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "pcn/coords.hpp"
#include "pcn/mdt.hpp"
#include "pcn/topology.hpp"

namespace fixture {

using namespace pcn;

struct Instance {
    ChannelGraph g;
    std::vector<Point> coords;
    Mdt mdt;
};

/// Random points in [0,10]^d; channels form a random tree plus links from
/// every node to its nearest `near` points, so virtual links are common but
/// short. Every direction gets `balance`.
inline Instance random_instance(std::mt19937_64& rng, std::size_t n, int dim, Amount balance, std::size_t near = 2) {
    Instance in;
    in.coords = oracle::random_points(rng, n, dim, 0, 10);
    in.g = ChannelGraph(n);
    for (NodeId v = 1; v < n; ++v) {
        const NodeId u = std::uniform_int_distribution<NodeId>(0, v - 1)(rng);
        in.g.add_channel(u, v, balance, balance);
    }
    for (NodeId u = 0; u < n; ++u) {
        std::vector<std::pair<double, NodeId>> by;
        for (NodeId v = 0; v < n; ++v)
            if (v != u) by.emplace_back(dist2(in.coords[u], in.coords[v]), v);
        std::sort(by.begin(), by.end());
        for (std::size_t i = 0; i < near && i < by.size(); ++i)
            if (!in.g.has_channel(u, by[i].second)) in.g.add_channel(u, by[i].second, balance, balance);
    }
    in.mdt = build_mdt(in.g, in.coords);
    return in;
}

inline ChannelGraph connected_waxman(std::size_t n, double degree, std::uint64_t seed,
                                     const CapacityDist& cap = CapacityDist::constant(0)) {
    for (std::uint64_t s = seed;; s += 1000) {
        auto g = gen_waxman(n, 0.4, waxman_beta_for_degree(n, 0.4, degree, s), s, cap);
        if (g.is_connected()) return g;
    }
}

/// Waxman graph with hop-based coordinates and its MDT.
inline Instance waxman_instance(std::size_t n, double degree, std::uint64_t seed, const CapacityDist& cap,
                                int dim = 3) {
    Instance in;
    in.g = connected_waxman(n, degree, seed, cap);
    in.coords = assign_coordinates(in.g, {dim, 0, 0.01}, seed).coords;
    in.mdt = build_mdt(in.g, in.coords);
    return in;
}

}  // namespace fixture
