#include "netexp/montecarlo.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "netexp/oracle.hpp"

namespace netexp {

int resolve_thread_count() {
    if (const char* env = std::getenv("NETEXP_THREADS")) {
        int value = std::atoi(env);
        if (value >= 1) return value;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

McResult run_mc(const HaneModel& model, const WeightedLinearEstimator& e, const Design& d,
                const BaselineInfo& baseline, const McConfig& cfg) {
    if (cfg.replicates < 2) throw std::invalid_argument("run_mc: need at least 2 replicates");
    if (d.n() != model.n() || e.n() != model.n())
        throw std::invalid_argument("run_mc: size mismatch");
    // Resolve the baseline once up front so an incompatible combination
    // fails before any sampling.
    (void)baseline_adjustment(e, model.n(), baseline);

    const std::size_t r_total = cfg.replicates;
    std::vector<double> values(r_total);

    auto worker = [&](std::size_t begin, std::size_t end) {
        Assignment z;
        std::vector<double> y;
        for (std::size_t r = begin; r < end; ++r) {
            Rng rng = Rng::substream(cfg.master_seed, r);
            d.sample_into(rng, z);
            evaluate_into(model, z, y);
            values[r] = estimate(e, z, y, baseline);
        }
    };

    const int threads = std::min<std::size_t>(resolve_thread_count(), r_total);
    if (threads <= 1) {
        worker(0, r_total);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        const std::size_t chunk = (r_total + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            std::size_t begin = static_cast<std::size_t>(t) * chunk;
            std::size_t end = std::min(begin + chunk, r_total);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    // Deterministic ordered reduction, independent of the thread layout.
    Kahan mean_acc;
    for (double v : values) mean_acc.add(v);
    const double mean = mean_acc.value() / static_cast<double>(r_total);
    Kahan ss_acc;
    for (double v : values) ss_acc.add((v - mean) * (v - mean));
    const double variance = ss_acc.value() / static_cast<double>(r_total - 1);

    McResult out;
    out.empirical_mean = mean;
    out.empirical_variance = variance;
    out.stderr_of_mean = std::sqrt(variance / static_cast<double>(r_total));
    out.replicates = r_total;
    if (cfg.keep_replicate_values) out.replicate_values = std::move(values);
    return out;
}

}  // namespace netexp
