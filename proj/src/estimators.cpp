#include "netexp/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace netexp {

BaselineInfo BaselineInfo::none() { return BaselineInfo(); }

BaselineInfo BaselineInfo::exact_individual(const HaneModel& model) {
    BaselineInfo b;
    b.individual_ = model.alpha();
    double sum = std::accumulate(b.individual_.begin(), b.individual_.end(), 0.0);
    b.population_mean_ = sum / model.n();
    b.description_ = "exact_individual";
    return b;
}

BaselineInfo BaselineInfo::exact_population_mean(const HaneModel& model) {
    BaselineInfo b;
    double sum = std::accumulate(model.alpha().begin(), model.alpha().end(), 0.0);
    b.population_mean_ = sum / model.n();
    b.description_ = "exact_population_mean";
    return b;
}

BaselineInfo BaselineInfo::survey(const HaneModel& model, int sample_size, std::uint64_t seed) {
    const int n = model.n();
    if (sample_size < 1 || sample_size > n)
        throw std::invalid_argument("BaselineInfo::survey: sample size must lie in [1,n]");
    Rng rng(seed);
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    BaselineInfo b;
    double sum = 0.0;
    for (int t = 0; t < sample_size; ++t) {
        int j = t + static_cast<int>(rng.next_below(n - t));
        std::swap(pool[t], pool[j]);
        b.survey_ids_.push_back(pool[t]);
        sum += model.alpha()[pool[t]];
    }
    std::sort(b.survey_ids_.begin(), b.survey_ids_.end());
    b.population_mean_ = sum / sample_size;
    b.description_ = "survey(k=" + std::to_string(sample_size) + ")";
    return b;
}

BaselineInfo BaselineInfo::noisy(std::vector<double> alpha_hat) {
    BaselineInfo b;
    if (alpha_hat.empty()) throw std::invalid_argument("BaselineInfo::noisy: empty estimate");
    double sum = std::accumulate(alpha_hat.begin(), alpha_hat.end(), 0.0);
    b.population_mean_ = sum / static_cast<double>(alpha_hat.size());
    b.individual_ = std::move(alpha_hat);
    b.description_ = "noisy_individual";
    return b;
}

const std::vector<double>& BaselineInfo::individual() const {
    if (individual_.empty())
        throw std::runtime_error("BaselineInfo: per-node baseline data required but not available");
    return individual_;
}

double BaselineInfo::population_mean() const {
    if (!population_mean_)
        throw std::runtime_error("BaselineInfo: population-mean baseline required but not available");
    return *population_mean_;
}

std::vector<double> baseline_adjustment(const WeightedLinearEstimator& e, int n,
                                        const BaselineInfo& baseline) {
    switch (e.baseline_mode) {
        case BaselineMode::None: return std::vector<double>(n, 0.0);
        case BaselineMode::SubtractIndividual: {
            const auto& alpha_hat = baseline.individual();
            if (static_cast<int>(alpha_hat.size()) != n)
                throw std::invalid_argument("baseline_adjustment: baseline length mismatch");
            return alpha_hat;
        }
        case BaselineMode::SubtractPopulationMean:
            return std::vector<double>(n, baseline.population_mean());
    }
    throw std::logic_error("baseline_adjustment: unreachable");
}

double estimate(const WeightedLinearEstimator& e, std::span<const std::uint8_t> z,
                std::span<const double> y, const BaselineInfo& baseline) {
    const std::size_t n = e.w.size();
    if (e.v.size() != n || z.size() != n || y.size() != n)
        throw std::invalid_argument("estimate: dimension mismatch");
    double adj_scalar = 0.0;
    const std::vector<double>* adj_vec = nullptr;
    if (e.baseline_mode == BaselineMode::SubtractIndividual) {
        adj_vec = &baseline.individual();
        if (adj_vec->size() != n)
            throw std::invalid_argument("estimate: baseline length mismatch");
    } else if (e.baseline_mode == BaselineMode::SubtractPopulationMean) {
        adj_scalar = baseline.population_mean();
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double adjusted = y[i] - (adj_vec ? (*adj_vec)[i] : adj_scalar);
        total += (z[i] ? e.w[i] : e.v[i]) * adjusted;
    }
    return total;
}

namespace {

std::vector<double> marginals_of(const Design& d) {
    std::vector<double> p(d.n());
    for (int i = 0; i < d.n(); ++i) p[i] = d.marginal(i);
    return p;
}

void require_interior_marginals(const std::vector<double>& p, const char* who) {
    for (double pi : p)
        if (!(pi > 0.0 && pi < 1.0))
            throw std::invalid_argument(std::string(who) +
                                        ": requires 0 < E[z_i] < 1 for every node");
}

}  // namespace

WeightedLinearEstimator ht_sutva(const Design& d) {
    auto p = marginals_of(d);
    require_interior_marginals(p, "ht_sutva");
    WeightedLinearEstimator e;
    const double n = d.n();
    e.w.resize(d.n());
    e.v.resize(d.n());
    for (int i = 0; i < d.n(); ++i) {
        e.w[i] = 1.0 / (n * p[i]);
        e.v[i] = 1.0 / (n * (1.0 - p[i]));
    }
    e.label = "ht_sutva";
    return e;
}

WeightedLinearEstimator difference_in_means(const Design& d) {
    auto m_opt = d.fixed_treated_count();
    if (!m_opt)
        throw std::invalid_argument(
            "difference_in_means: requires a design with a deterministic treated count");
    const int m = *m_opt;
    if (m == 0 || m == d.n())
        throw std::invalid_argument("difference_in_means: degenerate treated count");
    WeightedLinearEstimator e;
    e.w.assign(d.n(), 1.0 / m);
    e.v.assign(d.n(), -1.0 / (d.n() - m));
    e.label = "difference_in_means";
    return e;
}

WeightedLinearEstimator tte_ht(const Design& d) {
    auto p = marginals_of(d);
    require_interior_marginals(p, "tte_ht");
    WeightedLinearEstimator e;
    const double n = d.n();
    e.w.resize(d.n());
    e.v.resize(d.n());
    for (int i = 0; i < d.n(); ++i) {
        e.w[i] = 1.0 / (n * p[i]);
        e.v[i] = -1.0 / (n * (1.0 - p[i]));
    }
    e.label = "tte_ht";
    return e;
}

WeightedLinearEstimator tte_adjusted(const Design& d, const SymmetryReport& report) {
    auto p = marginals_of(d);
    require_interior_marginals(p, "tte_adjusted");
    const double n = d.n();
    WeightedLinearEstimator e;
    if (report.equal_marginals_global) {
        // Population-mean form: every outcome enters with the same weight,
        // so only the average baseline is needed.
        e.w.assign(d.n(), 1.0 / (n * report.common_marginal));
        e.v = e.w;
        e.baseline_mode = BaselineMode::SubtractPopulationMean;
        e.label = "tte_adjusted";
        return e;
    }
    if (!report.rho_tte.valid)
        throw std::invalid_argument(
            "tte_adjusted: unequal marginals and no valid per-node rho (" +
            report.rho_tte.failure + "); construction refused");
    e.w.resize(d.n());
    e.v.resize(d.n());
    for (int i = 0; i < d.n(); ++i) {
        e.w[i] = 1.0 / (n * p[i]);
        e.v[i] = report.rho_tte.values[i] / (n * (1.0 - p[i]));
    }
    e.baseline_mode = BaselineMode::SubtractIndividual;
    e.label = "tte_adjusted";
    return e;
}

WeightedLinearEstimator tte_adjusted_marginal(const Design& d) {
    auto p = marginals_of(d);
    for (double pi : p)
        if (!(pi > 0.0))
            throw std::invalid_argument("tte_adjusted_marginal: requires E[z_i] > 0 for every node");
    WeightedLinearEstimator e;
    const double n = d.n();
    e.w.resize(d.n());
    e.v.resize(d.n());
    for (int i = 0; i < d.n(); ++i) e.w[i] = e.v[i] = 1.0 / (n * p[i]);
    e.baseline_mode = BaselineMode::SubtractIndividual;
    e.label = "tte_adjusted_marginal";
    return e;
}

WeightedLinearEstimator ate_ht(const Design& d) {
    WeightedLinearEstimator e = tte_ht(d);
    e.label = "ate_ht";
    e.bias_warning = d.kind() != DesignKind::Bernoulli;
    return e;
}

WeightedLinearEstimator ate_adjusted(const Design& d, const SymmetryReport& report) {
    auto p = marginals_of(d);
    require_interior_marginals(p, "ate_adjusted");
    if (!report.rho_ate.valid)
        throw std::invalid_argument("ate_adjusted: no valid per-node rho (" +
                                    report.rho_ate.failure + ")");
    const double n = d.n();
    WeightedLinearEstimator e;
    e.w.resize(d.n());
    e.v.resize(d.n());
    for (int i = 0; i < d.n(); ++i) {
        double rho = report.rho_ate.values[i];
        if (!(rho < 1.0))
            throw std::invalid_argument("ate_adjusted: rho_i = 1 at node " + std::to_string(i) +
                                        " (control weight undefined)");
        e.w[i] = 1.0 / (n * p[i]);
        e.v[i] = -rho / (n * p[i] * (1.0 - rho));
    }
    e.baseline_mode = BaselineMode::SubtractIndividual;
    e.label = "ate_adjusted";
    return e;
}

WeightedLinearEstimator ate_adjusted_approx_crd(const Design& d) {
    if (d.kind() != DesignKind::Crd)
        throw std::invalid_argument("ate_adjusted_approx_crd: requires a CRD design");
    const int n = d.n(), m = d.treated();
    if (m == 0 || m == n) throw std::invalid_argument("ate_adjusted_approx_crd: degenerate budget");
    const double p = static_cast<double>(m) / n;
    WeightedLinearEstimator e;
    // Same outcome weights as the exact CRD form; the treated-group baseline
    // average is replaced by the population mean, which under a fixed treated
    // count is a deterministic shift.
    e.w.assign(n, 1.0 / (n * p));
    e.v.assign(n, -(p * n - 1.0) / (p * n * n * (1.0 - p)));
    e.baseline_mode = BaselineMode::SubtractPopulationMean;
    e.label = "ate_adjusted_approx_crd";
    return e;
}

WeightedLinearEstimator aie_adjusted(const Design& d, const SymmetryReport& report) {
    auto p = marginals_of(d);
    require_interior_marginals(p, "aie_adjusted");
    if (!report.rho_aie.valid)
        throw std::invalid_argument("aie_adjusted: no valid per-node rho (" +
                                    report.rho_aie.failure + ")");
    const double n = d.n();
    WeightedLinearEstimator e;
    e.w.assign(d.n(), 0.0);
    e.v.resize(d.n());
    for (int i = 0; i < d.n(); ++i) {
        double rho = report.rho_aie.values[i];
        if (!(rho > 0.0))
            throw std::invalid_argument("aie_adjusted: rho_i = 0 at node " + std::to_string(i) +
                                        " (e.g. a design that never treats a neighbor)");
        e.v[i] = 1.0 / (n * rho * (1.0 - p[i]));
    }
    e.baseline_mode = BaselineMode::SubtractIndividual;
    e.label = "aie_adjusted";
    return e;
}

WeightedLinearEstimator aie_adjusted_approx_crd(const Design& d) {
    if (d.kind() != DesignKind::Crd)
        throw std::invalid_argument("aie_adjusted_approx_crd: requires a CRD design");
    const int n = d.n(), m = d.treated();
    if (m == 0 || m == n) throw std::invalid_argument("aie_adjusted_approx_crd: degenerate budget");
    const double p = static_cast<double>(m) / n;
    WeightedLinearEstimator e;
    e.w.assign(n, 0.0);
    e.v.assign(n, (n - 1.0) / ((1.0 - p) * p * n * n));
    e.baseline_mode = BaselineMode::SubtractPopulationMean;
    e.label = "aie_adjusted_approx_crd";
    return e;
}

AieInfeasibility aie_unadjusted_feasibility(const Design& d) {
    AieInfeasibility out;
    // Direct-effect constraints w_i E[z_i] = 0 force w_i = 0; the baseline
    // constraints w_i E[z_i] + v_i E[1-z_i] = 0 then force v_i = 0. Each edge
    // constraint needs w_i E[z_i z_k] + v_i E[(1-z_i) z_k] = 1/n, which the
    // forced weights leave at zero.
    auto p = marginals_of(d);
    require_interior_marginals(p, "aie_unadjusted_feasibility");
    out.forced_w = 0.0;
    out.forced_v = 0.0;
    out.edge_constraint_residual = 1.0 / d.n();
    out.feasible = false;
    return out;
}

}  // namespace netexp
