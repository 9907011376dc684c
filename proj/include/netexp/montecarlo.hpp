#pragma once

#include "netexp/estimators.hpp"

namespace netexp {

struct McConfig {
    std::size_t replicates = 0;   // >= 2
    std::uint64_t master_seed = 0;
    bool keep_replicate_values = false;
};

struct McResult {
    double empirical_mean = 0.0;
    double empirical_variance = 0.0;  // unbiased, divisor R-1
    double stderr_of_mean = 0.0;      // sqrt(variance / R)
    std::size_t replicates = 0;
    std::vector<double> replicate_values;  // populated when requested
};

/// Number of worker threads: NETEXP_THREADS when set, otherwise the
/// available hardware parallelism.
int resolve_thread_count();

/// R independent replicates: draw z from the design, evaluate the model,
/// apply the estimator. Replicate r draws from Rng::substream(master_seed, r),
/// so the result is bit-identical for any thread count; the reduction walks
/// the per-replicate values in index order.
McResult run_mc(const HaneModel& model, const WeightedLinearEstimator& e, const Design& d,
                const BaselineInfo& baseline, const McConfig& cfg);

}  // namespace netexp
