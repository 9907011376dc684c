#pragma once

#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "netexp/estimators.hpp"

namespace netexp {

/// Per-node influence on the adjusted total-effect estimate when treated:
///   L_i = beta_i + sum over out-edges i->k of E[z_i] * gamma_ik / E[z_k].
/// Under equal marginals the population mean of L equals the total effect.
struct InfluenceProfile {
    std::vector<double> L;
    double population_mean = 0.0;
    double population_variance = 0.0;  // divisor n
};

InfluenceProfile influence(const HaneModel& model, const Design& d);
InfluenceProfile influence_with_marginals(const HaneModel& model,
                                          std::span<const double> marginals);

/// Exact bias of tte_ht under d:
///   (1/n) sum over edges k->i of (Cov[z_i, z_k]/Var[z_i] - 1) * gamma_ki.
double bias_tte_ht(const HaneModel& model, const Design& d);

/// Exact bias of the marginal-scaled adjusted estimator under d:
///   (1/n) sum over edges i->k of (E[z_i]/E[z_k] - 1) * gamma_ik.
/// Zero whenever marginals are equal across edges.
double bias_tte_adjusted(const HaneModel& model, const Design& d);
double bias_tte_adjusted(const HaneModel& model, std::span<const double> marginals);

/// Variance of the adjusted estimator under CRD(n, m):
///   (1-p)/(p(n-1)) * popvar(L), p = m/n.
double var_tte_adjusted_crd(const HaneModel& model, int n, int m);

/// Variance under cluster RD with uniform cluster sizes:
///   (1-p)/(p(T-1)) * popvar(L'), L'_tau = (T/n) * sum of L within tau.
/// Refuses non-uniform cluster sizes; use var_general_cluster for those.
double var_tte_adjusted_cluster(const HaneModel& model, const Partition& partition,
                                int m_clusters);

/// Variance under saturation RD with per-cluster treated fractions p_tau:
///   sum_tau (1-p_tau) n_tau^2 / (p_tau n^2 (n_tau-1)) * V_tau,
/// V_tau the within-cluster population variance of L. Fully treated clusters
/// contribute zero; a zero fraction leaves the estimator undefined.
double var_tte_adjusted_saturation(const HaneModel& model, const Partition& partition,
                                   std::span<const double> p_tau);

/// Quadratic form of a weighted linear estimator in the treatment vector:
///   est = constant + sum_i L_i z_i + sum_{i<j} H_ij z_i z_j,
/// with L_i = (w_i - v_i) alpha_i + w_i beta_i + sum over out-edges i->k of
/// v_k gamma_ik, and H_ij collecting (w_dst - v_dst) gamma over the edges
/// between i and j in either orientation. H is symmetric and supported only
/// on pairs linked by an edge. Baselines enter through the model's alpha;
/// for baseline-adjusted estimators pass the model with alpha zeroed (or
/// replaced by alpha - alpha_hat).
struct LHDecomposition {
    std::vector<double> L;
    std::vector<std::tuple<int, int, double>> H;  // (i, j, value), i < j, sorted
    double constant = 0.0;                        // sum_i v_i alpha_i
};

LHDecomposition lh_decompose(const HaneModel& model, const WeightedLinearEstimator& e);

/// Exact variance of any weighted linear estimator under CRD(n, m), the
/// five-term closed form in L, H and the CRD moments. Requires n >= 4 when
/// H is non-empty (the closed form's denominators), 0 < m < n.
double var_general_crd(const HaneModel& model, const WeightedLinearEstimator& e, int n, int m);

/// Exact variance under cluster RD: the CRD closed form applied at cluster
/// level to L'_tau + H'_tau,tau and the cross-cluster pair sums H'_tau,sigma.
double var_general_cluster(const HaneModel& model, const WeightedLinearEstimator& e,
                           const Partition& partition, int m_clusters);

/// Exact variance under saturation RD via the four independent-cluster
/// families: within-cluster variances, within/cross covariances, cross-pair
/// variances, and covariances of cross terms sharing a cluster. Clusters too
/// small for the closed-form denominators fall back to within-cluster
/// enumeration; `notes` (optional) records the fallback per cluster.
double var_general_stratified(const HaneModel& model, const WeightedLinearEstimator& e,
                              const Partition& partition, std::span<const int> treated_per_cluster,
                              std::vector<std::string>* notes = nullptr);

/// Exact E[estimate] from first and second design moments only; valid for
/// every design this module knows. The independent enumeration oracle lives
/// elsewhere and shares no code with this path.
double mean_by_moments(const HaneModel& model, const WeightedLinearEstimator& e, const Design& d,
                       const BaselineInfo& baseline);

}  // namespace netexp
