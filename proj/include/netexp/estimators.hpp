#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netexp/designs.hpp"

namespace netexp {

enum class BaselineMode { None, SubtractIndividual, SubtractPopulationMean };

/// Individually weighted linear estimator:
///   est = sum_i (w_i z_i + v_i (1 - z_i)) * (Y_i - adjustment_i),
/// where the adjustment is zero, a per-node baseline estimate, or one shared
/// population-mean estimate. Weights are fixed numbers, never functions of
/// the realized treatment; v carries its sign (difference-style estimators
/// store a negative v). Estimators snapshot their weights at construction.
struct WeightedLinearEstimator {
    std::vector<double> w;
    std::vector<double> v;
    BaselineMode baseline_mode = BaselineMode::None;
    std::string label;
    /// Set when the construction noticed a condition under which the
    /// estimator is expected to be biased (e.g. HT for the direct effect
    /// under a design without pairwise independence).
    bool bias_warning = false;

    int n() const { return static_cast<int>(w.size()); }
};

/// Baseline data available to an estimator: exact per-node baselines, an
/// exact population mean, a pre-experiment survey of a node subsample, or a
/// noisy per-node estimate. Resolved to concrete numbers at construction;
/// all downstream channels treat them as given constants.
class BaselineInfo {
public:
    static BaselineInfo none();
    static BaselineInfo exact_individual(const HaneModel& model);
    static BaselineInfo exact_population_mean(const HaneModel& model);
    /// Uniform without-replacement sample of `sample_size` node baselines.
    static BaselineInfo survey(const HaneModel& model, int sample_size, std::uint64_t seed);
    static BaselineInfo noisy(std::vector<double> alpha_hat);

    bool has_individual() const { return !individual_.empty(); }
    const std::vector<double>& individual() const;
    bool has_population_mean() const { return population_mean_.has_value(); }
    double population_mean() const;
    const std::vector<int>& survey_ids() const { return survey_ids_; }
    std::string describe() const { return description_; }

private:
    std::vector<double> individual_;
    std::optional<double> population_mean_;
    std::vector<int> survey_ids_;
    std::string description_ = "none";
};

/// Evaluates the estimator on realized data. Throws on dimension mismatch or
/// when the baseline data cannot serve the estimator's baseline mode.
double estimate(const WeightedLinearEstimator& e, std::span<const std::uint8_t> z,
                std::span<const double> y, const BaselineInfo& baseline);

/// Per-node adjustment vector implied by (mode, baseline); length n.
/// Subtracting it from the outcomes is exactly what `estimate` does.
std::vector<double> baseline_adjustment(const WeightedLinearEstimator& e, int n,
                                        const BaselineInfo& baseline);

/// Classical Horvitz-Thompson weights under SUTVA: w_i = 1/(n E[z_i]),
/// v_i = +1/(n E[1-z_i]) (per-arm weights; not by itself a difference).
WeightedLinearEstimator ht_sutva(const Design& d);

/// Treated mean minus control mean; requires a deterministic treated count.
WeightedLinearEstimator difference_in_means(const Design& d);

/// The only unbiased-candidate unadjusted form for the total effect:
/// w_i = 1/(n E[z_i]), v_i = -1/(n E[1-z_i]). Unbiased only when connected
/// units are always assigned together; generally biased.
WeightedLinearEstimator tte_ht(const Design& d);

/// Baseline-adjusted total-effect estimator. With globally equal marginals
/// it takes the population-mean form w_i = v_i = 1/(n p); otherwise it needs
/// per-node constants rho_i from the symmetry report and individual
/// baselines: w_i = 1/(n E[z_i]), v_i = rho_i/(n E[1-z_i]). Refused when no
/// valid rho exists and marginals are unequal.
WeightedLinearEstimator tte_adjusted(const Design& d, const SymmetryReport& report);

/// The marginal-scaled adjusted form (1/n) sum (Y_i - alpha_i)/E[z_i],
/// defined for any design with positive marginals. Unbiased exactly when
/// marginals are equal across edges; its bias otherwise is bias_tte_adjusted.
WeightedLinearEstimator tte_adjusted_marginal(const Design& d);

/// Unadjusted direct-effect estimator (same weights as tte_ht); unbiased for
/// the direct effect when treatments are pairwise independent across edges
/// (Bernoulli). Flags an expected bias under other designs.
WeightedLinearEstimator ate_ht(const Design& d);

/// Baseline-adjusted direct-effect estimator: w_i = 1/(n E[z_i]),
/// v_i = -rho_i / (n E[z_i](1 - rho_i)) with rho_i = P(z_i=1 | z_k=1).
WeightedLinearEstimator ate_adjusted(const Design& d, const SymmetryReport& report);

/// CRD large-n variant of ate_adjusted that replaces the treated-group
/// baseline average with the population mean; usable with only a
/// population-mean baseline estimate, at the price of a finite-n bias.
WeightedLinearEstimator ate_adjusted_approx_crd(const Design& d);

/// Baseline-adjusted interference-effect estimator: w_i = 0,
/// v_i = 1/(n rho_i E[1-z_i]) with rho_i = P(z_k=1 | z_i=0).
WeightedLinearEstimator aie_adjusted(const Design& d, const SymmetryReport& report);

/// CRD large-n variant of aie_adjusted on a population-mean baseline.
WeightedLinearEstimator aie_adjusted_approx_crd(const Design& d);

/// Witness that no unadjusted individually weighted linear estimator is
/// unbiased for the interference effect: the direct-effect and baseline
/// constraint families force w = v = 0, leaving the edge constraints
/// (coefficient 1/n each) unsatisfiable.
struct AieInfeasibility {
    bool feasible = false;
    double forced_w = 0.0, forced_v = 0.0;
    double edge_constraint_residual = 0.0;  // |required 1/n - achieved 0|
};
AieInfeasibility aie_unadjusted_feasibility(const Design& d);

}  // namespace netexp
