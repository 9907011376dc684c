#pragma once

#include <cmath>
#include <span>

#include "netexp/estimators.hpp"

namespace netexp {

/// Compensated accumulator (Kahan-Babuska/Neumaier variant, which also
/// survives swamping by a large early term). Oracle sums run over up to two
/// million support points against 1e-12 tolerances; naive summation is not
/// enough.
struct Kahan {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

struct ExactMoments {
    double mean = 0.0;
    double variance = 0.0;  // clamped at zero against float negatives
    std::size_t support_size = 0;
};

/// Brute-force exact mean and variance of an estimator under an enumerable
/// design: full support, exact probabilities, compensated sums. This channel
/// never samples and shares only `evaluate`/`estimate` with everything else.
ExactMoments exact_estimator_moments(const HaneModel& model, const WeightedLinearEstimator& e,
                                     const Design& d, const BaselineInfo& baseline,
                                     std::size_t support_cap = kDefaultSupportCap);

ExactMoments exact_law_moments(const HaneModel& model, const WeightedLinearEstimator& e,
                               const ExactLaw& law, const BaselineInfo& baseline);

enum class MomentKind { Raw, Central };

/// Exact design moments by enumeration. Raw: E[prod z over indices].
/// Central: Var[z_i] (one index), Cov[z_i, z_j] (two), Cov[z_i, z_j z_k]
/// (three), Cov[z_i z_j, z_k z_l] (four).
double exact_design_moment(const Design& d, std::span<const int> indices, MomentKind kind,
                           std::size_t support_cap = kDefaultSupportCap);

}  // namespace netexp
