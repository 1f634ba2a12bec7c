#pragma once

// Shared test networks and random-instance generators. The small named
// fixtures have hand-checkable stationary measures and coarse operators;
// expected values hard-coded in the test files were computed independently
// with the scripts under tools/ and are cited there by script name.

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "fastslow/network.hpp"

namespace fixtures {

using fastslow::Matrix;
using fastslow::ReactionNetwork;
using fastslow::Vector;

struct EdgeSpec {
    int src;
    int dst;
    double rate;
};

inline ReactionNetwork make_network(int n, const std::vector<EdgeSpec>& slow_edges,
                                    const std::vector<EdgeSpec>& fast_edges) {
    Matrix slow = Matrix::Zero(n, n);
    Matrix fast = Matrix::Zero(n, n);
    for (const auto& e : slow_edges) slow(e.dst, e.src) += e.rate;
    for (const auto& e : fast_edges) fast(e.dst, e.src) += e.rate;
    return ReactionNetwork(n, slow, fast);
}

// Two states, no fast part: stationary measure (3/4, 1/4).
inline ReactionNetwork twostate() {
    return make_network(2, {{0, 1, 1.0}, {1, 0, 3.0}}, {});
}

// Four-state chain with unit rates; middle edge fast. Uniform equilibrium
// at every eps, coarse classes {0}, {1,2}, {3}.
inline ReactionNetwork chain4() {
    return make_network(4, {{0, 1, 1.0}, {1, 0, 1.0}, {2, 3, 1.0}, {3, 2, 1.0}},
                        {{1, 2, 1.0}, {2, 1, 1.0}});
}

// Same topology, generic rates. Every edge balances separately, so the
// stationary measure (28, 52, 143, 572)/795 is the same for every eps.
inline ReactionNetwork chain4_rates() {
    return make_network(4, {{0, 1, 1.3}, {1, 0, 0.7}, {2, 3, 2.0}, {3, 2, 0.5}},
                        {{1, 2, 1.1}, {2, 1, 0.4}});
}

// Chain whose middle edge carries both a slow and a fast reaction with
// conflicting ratios: the combined generator is still reversible at every
// eps (birth-death), but the slow part alone is not reversible with
// respect to the eps-level measure, and the measure depends on eps.
inline ReactionNetwork chain4_mixed() {
    return make_network(4,
                        {{0, 1, 2.0},
                         {1, 0, 1.0},
                         {1, 2, 1.0},
                         {2, 1, 2.0},
                         {2, 3, 1.0},
                         {3, 2, 3.0}},
                        {{1, 2, 3.0}, {2, 1, 1.0}});
}

// One-way three-cycle: connected and has a stationary measure (uniform),
// but irreversible; detailed-balance residual 1/3.
inline ReactionNetwork cycle3_oneway() {
    return make_network(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}}, {});
}

// Fast star out of the middle state: w^eps = (1, eps, 1)/(2 + eps), so the
// limiting measure vanishes on state 1.
inline ReactionNetwork vanishing_middle() {
    return make_network(3, {{0, 1, 2.0}, {2, 1, 2.0}}, {{1, 0, 2.0}, {1, 2, 2.0}});
}

// Three-state chain used by the tilt experiments; w = (1/3, 1/6, 1/2).
inline ReactionNetwork chain3_rates() {
    return make_network(3, {{0, 1, 1.0}, {1, 0, 2.0}, {1, 2, 1.5}, {2, 1, 0.5}}, {});
}

inline Vector c0_default() {
    Vector c(4);
    c << 0.1, 0.6, 0.1, 0.2;
    return c;
}

// A generic interior point of the simplex.
inline Vector interior_state(std::mt19937& rng, int n) {
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    Vector c(n);
    for (int i = 0; i < n; ++i) c(i) = unif(rng);
    return c / c.sum();
}

struct RandomNetwork {
    ReactionNetwork net;
    Vector w;  // the shared equilibrium, exact for every eps
};

namespace detail {

// Common body for the random reversible instances: draw a measure, a
// connected edge set, and symmetric intensities; convert intensities to
// rates through the detailed-balance relation rate(i->k) = kappa *
// sqrt(w_k / w_i). Slow and fast edge sets are disjoint, so both parts are
// separately reversible with respect to the same w at every eps.
inline RandomNetwork random_reversible(std::mt19937& rng, int n, bool tree_only) {
    std::uniform_real_distribution<double> logw(-1.6, 1.6);
    Vector w(n);
    for (int i = 0; i < n; ++i) w(i) = std::clamp(std::exp(logw(rng)), 0.2, 5.0);
    w /= w.sum();

    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::pair<int, int>> edges;
    std::vector<std::vector<char>> used(static_cast<size_t>(n),
                                        std::vector<char>(static_cast<size_t>(n), 0));
    auto add_edge = [&](int i, int k) {
        edges.emplace_back(i, k);
        used[static_cast<size_t>(i)][static_cast<size_t>(k)] = 1;
        used[static_cast<size_t>(k)][static_cast<size_t>(i)] = 1;
    };
    for (int i = 1; i < n; ++i) {
        std::uniform_int_distribution<int> pick(0, i - 1);
        add_edge(order[static_cast<size_t>(i)], order[static_cast<size_t>(pick(rng))]);
    }
    if (!tree_only && n >= 3) {
        std::uniform_int_distribution<int> pick(0, n - 1);
        int extras = n / 3;
        for (int t = 0; t < extras; ++t) {
            int i = pick(rng), k = pick(rng);
            if (i != k && !used[static_cast<size_t>(i)][static_cast<size_t>(k)]) add_edge(i, k);
        }
    }

    std::uniform_real_distribution<double> logk(-1.5, 1.5);
    std::bernoulli_distribution coin(0.5);
    Matrix slow = Matrix::Zero(n, n);
    Matrix fast = Matrix::Zero(n, n);
    std::vector<char> is_fast(edges.size());
    for (size_t e = 0; e < edges.size(); ++e) is_fast[e] = coin(rng);
    if (std::find(is_fast.begin(), is_fast.end(), 1) == is_fast.end()) is_fast.front() = 1;
    for (size_t e = 0; e < edges.size(); ++e) {
        auto [i, k] = edges[e];
        double kappa = std::exp(logk(rng));
        Matrix& part = is_fast[e] ? fast : slow;
        part(k, i) = kappa * std::sqrt(w(k) / w(i));  // rate i -> k
        part(i, k) = kappa * std::sqrt(w(i) / w(k));  // rate k -> i
    }
    return RandomNetwork{ReactionNetwork(n, slow, fast), w};
}

}  // namespace detail

// Spanning tree plus a few chords; at least one fast edge.
inline RandomNetwork random_split_network(std::mt19937& rng, int num_states) {
    return detail::random_reversible(rng, num_states, /*tree_only=*/false);
}

// Pure tree variant.
inline RandomNetwork random_tree_network(std::mt19937& rng, int num_states) {
    return detail::random_reversible(rng, num_states, /*tree_only=*/true);
}

}  // namespace fixtures
