#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netexp/outcomes.hpp"

namespace netexp {

enum class DesignKind { Bernoulli, Crd, ClusterRd, SaturationRd };

/// A treatment-assignment distribution. Immutable; moment queries are pure.
/// Treatment budgets are integer counts throughout: fractional budgets that
/// do not resolve to whole units are rejected rather than rounded, which
/// keeps every moment formula exact.
class Design {
public:
    static Design bernoulli(int n, double p);
    static Design crd(int n, int treated);
    static Design cluster_rd(Partition partition, int treated_clusters);
    static Design saturation_rd(Partition partition, std::vector<int> treated_per_cluster);
    /// Saturation design from per-cluster fractions; each p_tau * n_tau must
    /// be an integer (within 1e-9).
    static Design saturation_rd_fractions(Partition partition, std::span<const double> p_tau);

    DesignKind kind() const { return kind_; }
    int n() const { return n_; }

    double bernoulli_p() const { return p_; }
    int treated() const { return treated_; }           // CRD
    int treated_clusters() const { return treated_; }  // ClusterRD
    const std::vector<int>& treated_per_cluster() const { return counts_; }
    const Partition& partition() const;
    bool has_partition() const { return partition_.has_value(); }

    /// Exact E[z_i].
    double marginal(int i) const;
    /// Exact E[z_i z_j]; joint2(i,i) == marginal(i).
    double joint2(int i, int j) const;

    /// Total treated count when it is deterministic (CRD, saturation, cluster
    /// RD over equal-size clusters).
    std::optional<int> fixed_treated_count() const;

    /// One draw from the design's law. The caller owns the stream; use
    /// Rng::substream per replicate for reproducible parallelism.
    void sample_into(Rng& rng, Assignment& z) const;
    Assignment sample(Rng& rng) const;

    /// Number of support points (2^n, C(n,m), ...) or nullopt on overflow.
    std::optional<double> support_size() const;

    std::string describe() const;

private:
    Design() = default;
    void check_index(int i) const;

    DesignKind kind_ = DesignKind::Bernoulli;
    int n_ = 0;
    double p_ = 0.0;                    // Bernoulli
    int treated_ = 0;                   // CRD / ClusterRD
    std::vector<int> counts_;           // SaturationRD, per cluster
    std::optional<Partition> partition_;
};

/// E[product of z over `distinct_count` distinct indices] under CRD(n, m):
/// the falling-factorial moment m(m-1)...(m-s+1) / (n(n-1)...(n-s+1)).
double crd_joint_moment(int n, int m, int distinct_count);

/// Exact Cov[z_i, z_j z_k] under CRD; all index-coincidence patterns handled.
double crd_moment3(const Design& d, int i, int j, int k);
/// Exact Cov[z_i z_j, z_k z_l] under CRD; all index-coincidence patterns handled.
double crd_moment4(const Design& d, int i, int j, int k, int l);

/// Full enumeration of a design's support with exact probabilities; the
/// carrier of the brute-force oracle. Assignments are stored flat to keep
/// two-million-point supports affordable.
class ExactLaw {
public:
    ExactLaw(int n, std::vector<std::uint8_t> assignments, std::vector<double> probs);

    int n() const { return n_; }
    std::size_t size() const { return probs_.size(); }
    double prob(std::size_t idx) const { return probs_[idx]; }
    std::span<const std::uint8_t> assignment(std::size_t idx) const {
        return {assignments_.data() + idx * static_cast<std::size_t>(n_),
                static_cast<std::size_t>(n_)};
    }

private:
    int n_;
    std::vector<std::uint8_t> assignments_;  // size() * n, row-major
    std::vector<double> probs_;
};

inline constexpr std::size_t kDefaultSupportCap = 2'000'000;

/// Enumerates the complete support; throws if it exceeds `support_cap`,
/// reporting the cap that would be required.
ExactLaw enumerate_design(const Design& d, std::size_t support_cap = kDefaultSupportCap);

/// Per-node constants for one of the conditional-probability symmetry
/// conditions. `values` is fully populated when `valid`; nodes whose in-edges
/// impose no constraint carry a documented neutral default.
struct RhoValues {
    bool valid = false;
    std::vector<double> values;
    std::string failure;  // human-readable reason when not valid
};

/// Results of checking, on exact moments, the design symmetry conditions the
/// adjusted estimators require over the edges of a graph.
struct SymmetryReport {
    bool equal_marginals = false;         // E[z_src] == E[z_dst] on every edge
    bool equal_marginals_global = false;  // all nodes share one marginal
    double common_marginal = 0.0;         // defined when equal_marginals_global
    RhoValues rho_tte;  // P(z_k=0 | z_i=1) / P(z_k=1 | z_i=0) over in-edges of i
    RhoValues rho_ate;  // P(z_i=1 | z_k=1)
    RhoValues rho_aie;  // P(z_k=1 | z_i=0)
};

SymmetryReport check_symmetry(const Design& d, const InterferenceGraph& g, double tol = 1e-12);

}  // namespace netexp
