#pragma once

#include <cmath>
#include <vector>

// Tolerance assertions used across the suites (doctest is included by every
// test translation unit before this header).
#define CHECK_CLOSE_ABS(a, b, tol) \
    CHECK_MESSAGE(netexp::testing::close_abs((a), (b), (tol)), (a) << " vs " << (b))
#define CHECK_CLOSE_REL(a, b, rel) \
    CHECK_MESSAGE(netexp::testing::close_rel((a), (b), (rel)), (a) << " vs " << (b))

#include "netexp/analysis.hpp"
#include "netexp/oracle.hpp"

namespace netexp::testing {

inline bool close_abs(double a, double b, double tol) { return std::abs(a - b) <= tol; }

/// Relative closeness with an absolute floor for near-zero values.
inline bool close_rel(double a, double b, double rel, double floor = 1e-12) {
    return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), floor);
}

/// Three-node reference model used throughout: alpha = (1,2,3), beta = 1,
/// edges 0->1 (2), 1->2 (4), 2->0 (6). Hand values: tte 5, ate 1, aie 4;
/// under CRD(3,1) the adjusted estimates are (3,5,7) and tte_ht gives
/// (-1.5, -1.0, -0.5).
inline HaneModel chain3() {
    InterferenceGraph g(3, {{0, 1, 2.0}, {1, 2, 4.0}, {2, 0, 6.0}});
    return HaneModel(std::move(g), {1.0, 2.0, 3.0}, {1.0, 1.0, 1.0});
}

inline HaneModel no_edge_model(std::vector<double> alpha, std::vector<double> beta) {
    int n = static_cast<int>(alpha.size());
    return HaneModel(InterferenceGraph(n, {}), std::move(alpha), std::move(beta));
}

/// Random instance in the acceptance-grid style: ER(edge_prob) topology,
/// gamma ~ U(-2,2), beta ~ U(-1,1), alpha ~ U(-5,5) unless overridden.
inline HaneModel random_model(Rng& rng, int n, double edge_prob,
                              DistSpec gamma = DistSpec::uniform(-2, 2),
                              DistSpec beta_law = DistSpec::uniform(-1, 1),
                              DistSpec alpha_law = DistSpec::uniform(-5, 5)) {
    std::vector<Edge> edges;
    for (int s = 0; s < n; ++s)
        for (int d = 0; d < n; ++d) {
            if (s == d) continue;
            if (rng.next_bernoulli(edge_prob)) edges.push_back({s, d, gamma.sample(rng)});
        }
    std::vector<double> alpha(n), beta(n);
    for (int i = 0; i < n; ++i) alpha[i] = alpha_law.sample(rng);
    for (int i = 0; i < n; ++i) beta[i] = beta_law.sample(rng);
    return HaneModel(InterferenceGraph(n, std::move(edges)), std::move(alpha), std::move(beta));
}

inline WeightedLinearEstimator random_weights(Rng& rng, int n, BaselineMode mode) {
    WeightedLinearEstimator e;
    e.w.resize(n);
    e.v.resize(n);
    for (int i = 0; i < n; ++i) e.w[i] = -1.0 + 2.0 * rng.next_unit();
    for (int i = 0; i < n; ++i) e.v[i] = -1.0 + 2.0 * rng.next_unit();
    e.baseline_mode = mode;
    e.label = "random";
    return e;
}

inline Assignment random_assignment(Rng& rng, int n) {
    Assignment z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.next_bernoulli(0.5) ? 1 : 0;
    return z;
}

}  // namespace netexp::testing
