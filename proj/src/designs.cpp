#include "netexp/designs.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace netexp {

namespace {

double binomial_coefficient(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double c = 1.0;
    for (int t = 1; t <= k; ++t) c = c * (n - k + t) / t;
    return c;
}

}  // namespace

Design Design::bernoulli(int n, double p) {
    if (n < 1) throw std::invalid_argument("Design::bernoulli: n must be >= 1");
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("Design::bernoulli: p must lie in [0,1]");
    Design d;
    d.kind_ = DesignKind::Bernoulli;
    d.n_ = n;
    d.p_ = p;
    return d;
}

Design Design::crd(int n, int treated) {
    if (n < 1) throw std::invalid_argument("Design::crd: n must be >= 1");
    if (treated < 0 || treated > n)
        throw std::invalid_argument("Design::crd: treated count must lie in [0,n]");
    Design d;
    d.kind_ = DesignKind::Crd;
    d.n_ = n;
    d.treated_ = treated;
    return d;
}

Design Design::cluster_rd(Partition partition, int treated_clusters) {
    const int t_count = partition.cluster_count();
    if (treated_clusters < 0 || treated_clusters > t_count)
        throw std::invalid_argument("Design::cluster_rd: treated clusters must lie in [0,T]");
    Design d;
    d.kind_ = DesignKind::ClusterRd;
    d.n_ = partition.node_count();
    d.treated_ = treated_clusters;
    d.partition_ = std::move(partition);
    return d;
}

Design Design::saturation_rd(Partition partition, std::vector<int> treated_per_cluster) {
    const int t_count = partition.cluster_count();
    if (static_cast<int>(treated_per_cluster.size()) != t_count)
        throw std::invalid_argument("Design::saturation_rd: one treated count per cluster required");
    for (int t = 0; t < t_count; ++t)
        if (treated_per_cluster[t] < 0 || treated_per_cluster[t] > partition.cluster_size(t))
            throw std::invalid_argument("Design::saturation_rd: treated count out of range in cluster " +
                                        std::to_string(t));
    Design d;
    d.kind_ = DesignKind::SaturationRd;
    d.n_ = partition.node_count();
    d.counts_ = std::move(treated_per_cluster);
    d.partition_ = std::move(partition);
    return d;
}

Design Design::saturation_rd_fractions(Partition partition, std::span<const double> p_tau) {
    const int t_count = partition.cluster_count();
    if (static_cast<int>(p_tau.size()) != t_count)
        throw std::invalid_argument("Design::saturation_rd_fractions: one fraction per cluster");
    std::vector<int> counts(t_count);
    for (int t = 0; t < t_count; ++t) {
        double exact = p_tau[t] * partition.cluster_size(t);
        double rounded = std::round(exact);
        if (std::abs(exact - rounded) > 1e-9)
            throw std::invalid_argument(
                "Design::saturation_rd_fractions: p_tau * n_tau is not an integer in cluster " +
                std::to_string(t) + " (budgets are integer counts, not rounded)");
        counts[t] = static_cast<int>(rounded);
    }
    return saturation_rd(std::move(partition), std::move(counts));
}

const Partition& Design::partition() const {
    if (!partition_) throw std::logic_error("Design: no partition for this design kind");
    return *partition_;
}

void Design::check_index(int i) const {
    if (i < 0 || i >= n_) throw std::invalid_argument("Design: node index out of range");
}

double Design::marginal(int i) const {
    check_index(i);
    switch (kind_) {
        case DesignKind::Bernoulli: return p_;
        case DesignKind::Crd: return static_cast<double>(treated_) / n_;
        case DesignKind::ClusterRd:
            return static_cast<double>(treated_) / partition_->cluster_count();
        case DesignKind::SaturationRd: {
            int tau = partition_->cluster_of(i);
            return static_cast<double>(counts_[tau]) / partition_->cluster_size(tau);
        }
    }
    throw std::logic_error("Design::marginal: unreachable");
}

double Design::joint2(int i, int j) const {
    check_index(i);
    check_index(j);
    if (i == j) return marginal(i);
    switch (kind_) {
        case DesignKind::Bernoulli: return p_ * p_;
        case DesignKind::Crd: {
            double n = n_, m = treated_;
            return m * (m - 1.0) / (n * (n - 1.0));
        }
        case DesignKind::ClusterRd: {
            double t_count = partition_->cluster_count(), mc = treated_;
            if (partition_->cluster_of(i) == partition_->cluster_of(j)) return mc / t_count;
            return mc * (mc - 1.0) / (t_count * (t_count - 1.0));
        }
        case DesignKind::SaturationRd: {
            int ti = partition_->cluster_of(i), tj = partition_->cluster_of(j);
            if (ti != tj) return marginal(i) * marginal(j);
            double nt = partition_->cluster_size(ti), mt = counts_[ti];
            return mt * (mt - 1.0) / (nt * (nt - 1.0));
        }
    }
    throw std::logic_error("Design::joint2: unreachable");
}

std::optional<int> Design::fixed_treated_count() const {
    switch (kind_) {
        case DesignKind::Bernoulli:
            if (p_ == 0.0) return 0;
            if (p_ == 1.0) return n_;
            return std::nullopt;
        case DesignKind::Crd: return treated_;
        case DesignKind::ClusterRd: {
            if (treated_ == 0) return 0;
            if (treated_ == partition_->cluster_count()) return n_;
            if (!partition_->uniform_sizes()) return std::nullopt;
            return treated_ * partition_->cluster_size(0);
        }
        case DesignKind::SaturationRd:
            return std::accumulate(counts_.begin(), counts_.end(), 0);
    }
    throw std::logic_error("Design::fixed_treated_count: unreachable");
}

namespace {

// Marks a uniform random size-k subset of `pool` (which it permutes in place).
void mark_subset(Rng& rng, std::vector<int>& pool, int k, Assignment& z) {
    const int n = static_cast<int>(pool.size());
    for (int t = 0; t < k; ++t) {
        int j = t + static_cast<int>(rng.next_below(n - t));
        std::swap(pool[t], pool[j]);
        z[pool[t]] = 1;
    }
}

}  // namespace

void Design::sample_into(Rng& rng, Assignment& z) const {
    z.assign(n_, 0);
    switch (kind_) {
        case DesignKind::Bernoulli: {
            for (int i = 0; i < n_; ++i) z[i] = rng.next_bernoulli(p_) ? 1 : 0;
            return;
        }
        case DesignKind::Crd: {
            std::vector<int> pool(n_);
            std::iota(pool.begin(), pool.end(), 0);
            mark_subset(rng, pool, treated_, z);
            return;
        }
        case DesignKind::ClusterRd: {
            const int t_count = partition_->cluster_count();
            std::vector<int> pool(t_count);
            std::iota(pool.begin(), pool.end(), 0);
            Assignment cluster_z(t_count, 0);
            mark_subset(rng, pool, treated_, cluster_z);
            for (int i = 0; i < n_; ++i) z[i] = cluster_z[partition_->cluster_of(i)];
            return;
        }
        case DesignKind::SaturationRd: {
            // Clusters draw in index order from one stream; the draws are
            // functions of disjoint variates, hence independent across clusters.
            for (int t = 0; t < partition_->cluster_count(); ++t) {
                std::vector<int> pool = partition_->members(t);
                mark_subset(rng, pool, counts_[t], z);
            }
            return;
        }
    }
    throw std::logic_error("Design::sample_into: unreachable");
}

Assignment Design::sample(Rng& rng) const {
    Assignment z;
    sample_into(rng, z);
    return z;
}

std::optional<double> Design::support_size() const {
    double size = 0.0;
    switch (kind_) {
        case DesignKind::Bernoulli:
            size = (p_ == 0.0 || p_ == 1.0) ? 1.0 : std::pow(2.0, n_);
            break;
        case DesignKind::Crd: size = binomial_coefficient(n_, treated_); break;
        case DesignKind::ClusterRd:
            size = binomial_coefficient(partition_->cluster_count(), treated_);
            break;
        case DesignKind::SaturationRd: {
            size = 1.0;
            for (int t = 0; t < partition_->cluster_count(); ++t)
                size *= binomial_coefficient(partition_->cluster_size(t), counts_[t]);
            break;
        }
    }
    if (!(size < 1e18)) return std::nullopt;
    return size;
}

std::string Design::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case DesignKind::Bernoulli: os << "bernoulli(n=" << n_ << ",p=" << p_ << ")"; break;
        case DesignKind::Crd: os << "crd(n=" << n_ << ",treated=" << treated_ << ")"; break;
        case DesignKind::ClusterRd:
            os << "cluster_rd(T=" << partition_->cluster_count() << ",treated=" << treated_ << ")";
            break;
        case DesignKind::SaturationRd: {
            os << "saturation_rd(counts=[";
            for (std::size_t t = 0; t < counts_.size(); ++t)
                os << (t ? "," : "") << counts_[t] << "/" << partition_->cluster_size(static_cast<int>(t));
            os << "])";
            break;
        }
    }
    return os.str();
}

double crd_joint_moment(int n, int m, int distinct_count) {
    double v = 1.0;
    for (int t = 0; t < distinct_count; ++t) {
        v *= static_cast<double>(m - t) / static_cast<double>(n - t);
        if (v == 0.0) return 0.0;
    }
    return v;
}

namespace {

// E[prod z over an index multiset] under CRD = falling-factorial moment of
// the distinct index set.
double crd_product_moment(const Design& d, std::initializer_list<int> ids) {
    int buf[4];
    int count = 0;
    for (int id : ids) {
        bool seen = false;
        for (int t = 0; t < count; ++t) seen = seen || buf[t] == id;
        if (!seen) buf[count++] = id;
    }
    return crd_joint_moment(d.n(), d.treated(), count);
}

void require_crd(const Design& d, const char* op) {
    if (d.kind() != DesignKind::Crd)
        throw std::invalid_argument(std::string(op) + ": requires a CRD design");
}

}  // namespace

double crd_moment3(const Design& d, int i, int j, int k) {
    require_crd(d, "crd_moment3");
    return crd_product_moment(d, {i, j, k}) -
           crd_product_moment(d, {i}) * crd_product_moment(d, {j, k});
}

double crd_moment4(const Design& d, int i, int j, int k, int l) {
    require_crd(d, "crd_moment4");
    return crd_product_moment(d, {i, j, k, l}) -
           crd_product_moment(d, {i, j}) * crd_product_moment(d, {k, l});
}

ExactLaw::ExactLaw(int n, std::vector<std::uint8_t> assignments, std::vector<double> probs)
    : n_(n), assignments_(std::move(assignments)), probs_(std::move(probs)) {
    if (assignments_.size() != probs_.size() * static_cast<std::size_t>(n_))
        throw std::invalid_argument("ExactLaw: inconsistent storage sizes");
    double sum = 0.0, comp = 0.0;
    for (double p : probs_) {
        if (!(p > 0.0)) throw std::invalid_argument("ExactLaw: probabilities must be positive");
        double y = p - comp, t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("ExactLaw: probabilities must sum to 1");
}

namespace {

// Visits all k-subsets of {0..n-1} in lexicographic order.
template <typename Visit>
void for_each_combination(int n, int k, Visit&& visit) {
    std::vector<int> c(k);
    std::iota(c.begin(), c.end(), 0);
    for (;;) {
        visit(static_cast<const std::vector<int>&>(c));
        int i = k - 1;
        while (i >= 0 && c[i] == n - k + i) --i;
        if (i < 0) break;
        ++c[i];
        for (int t = i + 1; t < k; ++t) c[t] = c[t - 1] + 1;
    }
}

}  // namespace

ExactLaw enumerate_design(const Design& d, std::size_t support_cap) {
    auto size_opt = d.support_size();
    if (!size_opt || *size_opt > static_cast<double>(support_cap)) {
        std::ostringstream os;
        os << "enumerate_design: support of " << d.describe() << " has ";
        if (size_opt)
            os << static_cast<std::uint64_t>(*size_opt);
        else
            os << "more than 1e18";
        os << " points, exceeding the cap of " << support_cap << "; required cap: ";
        if (size_opt)
            os << static_cast<std::uint64_t>(std::ceil(*size_opt));
        else
            os << "(not enumerable)";
        throw std::runtime_error(os.str());
    }
    const std::size_t size = static_cast<std::size_t>(*size_opt);
    const int n = d.n();
    std::vector<std::uint8_t> rows;
    rows.reserve(size * static_cast<std::size_t>(n));
    std::vector<double> probs;
    probs.reserve(size);

    switch (d.kind()) {
        case DesignKind::Bernoulli: {
            const double p = d.bernoulli_p();
            if (p == 0.0 || p == 1.0) {
                for (int i = 0; i < n; ++i) rows.push_back(p == 1.0 ? 1 : 0);
                probs.push_back(1.0);
                break;
            }
            std::vector<double> pow_p(n + 1, 1.0), pow_q(n + 1, 1.0);
            for (int t = 1; t <= n; ++t) {
                pow_p[t] = pow_p[t - 1] * p;
                pow_q[t] = pow_q[t - 1] * (1.0 - p);
            }
            for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
                int treated = 0;
                for (int i = 0; i < n; ++i) {
                    std::uint8_t bit = (mask >> i) & 1u;
                    rows.push_back(bit);
                    treated += bit;
                }
                probs.push_back(pow_p[treated] * pow_q[n - treated]);
            }
            break;
        }
        case DesignKind::Crd: {
            const double prob = 1.0 / *size_opt;
            for_each_combination(n, d.treated(), [&](const std::vector<int>& subset) {
                std::size_t base = rows.size();
                rows.resize(base + n, 0);
                for (int i : subset) rows[base + i] = 1;
                probs.push_back(prob);
            });
            break;
        }
        case DesignKind::ClusterRd: {
            const Partition& part = d.partition();
            const double prob = 1.0 / *size_opt;
            for_each_combination(part.cluster_count(), d.treated_clusters(),
                                 [&](const std::vector<int>& clusters) {
                                     std::size_t base = rows.size();
                                     rows.resize(base + n, 0);
                                     for (int tau : clusters)
                                         for (int i : part.members(tau)) rows[base + i] = 1;
                                     probs.push_back(prob);
                                 });
            break;
        }
        case DesignKind::SaturationRd: {
            const Partition& part = d.partition();
            const int t_count = part.cluster_count();
            // Per-cluster subset tables, then an odometer over their product.
            std::vector<std::vector<std::vector<int>>> subsets(t_count);
            for (int t = 0; t < t_count; ++t) {
                const auto& members = part.members(t);
                for_each_combination(static_cast<int>(members.size()),
                                     d.treated_per_cluster()[t],
                                     [&](const std::vector<int>& local) {
                                         std::vector<int> chosen;
                                         chosen.reserve(local.size());
                                         for (int idx : local) chosen.push_back(members[idx]);
                                         subsets[t].push_back(std::move(chosen));
                                     });
            }
            const double prob = 1.0 / *size_opt;
            std::vector<std::size_t> odo(t_count, 0);
            for (;;) {
                std::size_t base = rows.size();
                rows.resize(base + n, 0);
                for (int t = 0; t < t_count; ++t)
                    for (int i : subsets[t][odo[t]]) rows[base + i] = 1;
                probs.push_back(prob);
                int t = t_count - 1;
                while (t >= 0 && odo[t] + 1 == subsets[t].size()) odo[t--] = 0;
                if (t < 0) break;
                ++odo[t];
            }
            break;
        }
    }
    return ExactLaw(n, std::move(rows), std::move(probs));
}

namespace {

struct RatioObservation {
    enum class Kind { Value, Unconstrained, Infeasible } kind;
    double value = 0.0;
};

// Collects per-node constraint values over in-edges; all defined values must
// agree within tol. Nodes whose edges impose nothing get `fallback(i)`.
RhoValues collect_rho(const InterferenceGraph& g, int n, double tol,
                      const std::function<RatioObservation(int src, int dst)>& observe,
                      const std::function<double(int node)>& fallback) {
    RhoValues out;
    out.values.assign(n, 0.0);
    std::vector<bool> constrained(n, false);
    for (const Edge& e : g.edges()) {
        RatioObservation obs = observe(e.src, e.dst);
        if (obs.kind == RatioObservation::Kind::Unconstrained) continue;
        if (obs.kind == RatioObservation::Kind::Infeasible) {
            out.valid = false;
            out.failure = "edge (" + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                          ") admits no valid weight";
            out.values.clear();
            return out;
        }
        if (constrained[e.dst]) {
            if (std::abs(out.values[e.dst] - obs.value) > tol) {
                out.valid = false;
                out.failure = "node " + std::to_string(e.dst) +
                              " sees conflicting conditional ratios across in-edges";
                out.values.clear();
                return out;
            }
        } else {
            out.values[e.dst] = obs.value;
            constrained[e.dst] = true;
        }
    }
    for (int i = 0; i < n; ++i)
        if (!constrained[i]) out.values[i] = fallback(i);
    out.valid = true;
    return out;
}

}  // namespace

SymmetryReport check_symmetry(const Design& d, const InterferenceGraph& g, double tol) {
    if (g.node_count() != d.n())
        throw std::invalid_argument("check_symmetry: graph/design size mismatch");
    const int n = d.n();
    SymmetryReport report;

    report.equal_marginals = true;
    for (const Edge& e : g.edges())
        if (std::abs(d.marginal(e.src) - d.marginal(e.dst)) > tol) {
            report.equal_marginals = false;
            break;
        }
    report.equal_marginals_global = true;
    for (int i = 1; i < n; ++i)
        if (std::abs(d.marginal(i) - d.marginal(0)) > tol) {
            report.equal_marginals_global = false;
            break;
        }
    if (report.equal_marginals_global) report.common_marginal = d.marginal(0);

    const bool crd = d.kind() == DesignKind::Crd;
    const bool bern = d.kind() == DesignKind::Bernoulli;

    // Total-effect ratio P(z_k=0|z_i=1)/P(z_k=1|z_i=0) for edge k->i. A 0/0 edge
    // imposes no constraint (its weight constraint holds for any v_i); a
    // nonzero/0 edge admits no valid weight at all.
    report.rho_tte = collect_rho(
        g, n, tol,
        [&](int src, int dst) -> RatioObservation {
            double pi = d.marginal(dst), pk = d.marginal(src), pik = d.joint2(src, dst);
            if (!(pi > tol) || !(pi < 1.0 - tol))
                return {RatioObservation::Kind::Infeasible, 0.0};
            double num = pi - pik;   // E[z_i (1-z_k)]
            double den = pk - pik;   // E[(1-z_i) z_k]
            if (den <= tol) {
                if (num <= tol) return {RatioObservation::Kind::Unconstrained, 0.0};
                return {RatioObservation::Kind::Infeasible, 0.0};
            }
            return {RatioObservation::Kind::Value,
                    std::max(0.0, num * (1.0 - pi) / (pi * den))};
        },
        [&](int i) {
            double pi = d.marginal(i);
            // A degenerate marginal makes the adjusted path unusable anyway;
            // keep the reported constant finite.
            if (!(pi > tol) || !(pi < 1.0 - tol)) return 1.0;
            return (1.0 - pi) / pi;
        });

    // Direct-effect ratio P(z_i=1|z_k=1) for edge k->i.
    report.rho_ate = collect_rho(
        g, n, tol,
        [&](int src, int dst) -> RatioObservation {
            double pk = d.marginal(src);
            if (!(pk > tol)) return {RatioObservation::Kind::Infeasible, 0.0};
            return {RatioObservation::Kind::Value,
                    std::clamp(d.joint2(src, dst) / pk, 0.0, 1.0)};
        },
        [&](int i) {
            if (crd && d.n() > 1) return (d.treated() - 1.0) / (d.n() - 1.0);
            if (bern) return d.bernoulli_p();
            (void)i;
            return 0.0;  // unconstrained; zero keeps the control weight inert
        });

    // Interference-effect ratio P(z_k=1|z_i=0) for edge k->i.
    report.rho_aie = collect_rho(
        g, n, tol,
        [&](int src, int dst) -> RatioObservation {
            double pi = d.marginal(dst);
            if (!(pi < 1.0 - tol)) return {RatioObservation::Kind::Infeasible, 0.0};
            double value = (d.marginal(src) - d.joint2(src, dst)) / (1.0 - pi);
            return {RatioObservation::Kind::Value, std::clamp(value, 0.0, 1.0)};
        },
        [&](int i) {
            if (crd && d.n() > 1) return std::clamp(d.treated() / (d.n() - 1.0), 0.0, 1.0);
            if (bern) return d.bernoulli_p();
            (void)i;
            return 1.0;  // unconstrained; keeps the weight finite
        });

    return report;
}

}  // namespace netexp
