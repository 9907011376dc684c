#include "netexp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace netexp {

namespace {

double mean_of(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

// Population variance, divisor n.
double popvar(std::span<const double> x) {
    double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

std::vector<double> design_marginals(const Design& d) {
    std::vector<double> p(d.n());
    for (int i = 0; i < d.n(); ++i) p[i] = d.marginal(i);
    return p;
}

}  // namespace

InfluenceProfile influence_with_marginals(const HaneModel& model,
                                          std::span<const double> marginals) {
    const int n = model.n();
    if (static_cast<int>(marginals.size()) != n)
        throw std::invalid_argument("influence: marginal vector length mismatch");
    InfluenceProfile prof;
    prof.L = model.beta();
    for (const Edge& e : model.graph().edges()) {
        if (!(marginals[e.dst] > 0.0))
            throw std::invalid_argument("influence: zero marginal at node " +
                                        std::to_string(e.dst) + " receiving an edge");
        prof.L[e.src] += marginals[e.src] * e.gamma / marginals[e.dst];
    }
    prof.population_mean = mean_of(prof.L);
    prof.population_variance = popvar(prof.L);
    return prof;
}

InfluenceProfile influence(const HaneModel& model, const Design& d) {
    if (d.n() != model.n()) throw std::invalid_argument("influence: design/model size mismatch");
    return influence_with_marginals(model, design_marginals(d));
}

double bias_tte_ht(const HaneModel& model, const Design& d) {
    if (d.n() != model.n()) throw std::invalid_argument("bias_tte_ht: design/model size mismatch");
    double sum = 0.0;
    for (const Edge& e : model.graph().edges()) {
        double pd = d.marginal(e.dst);
        double var = pd * (1.0 - pd);
        if (!(var > 0.0))
            throw std::invalid_argument("bias_tte_ht: degenerate design (Var[z] = 0 at node " +
                                        std::to_string(e.dst) + ")");
        double cov = d.joint2(e.src, e.dst) - d.marginal(e.src) * pd;
        sum += (cov / var - 1.0) * e.gamma;
    }
    return sum / model.n();
}

double bias_tte_adjusted(const HaneModel& model, std::span<const double> marginals) {
    if (static_cast<int>(marginals.size()) != model.n())
        throw std::invalid_argument("bias_tte_adjusted: marginal vector length mismatch");
    double sum = 0.0;
    for (const Edge& e : model.graph().edges()) {
        if (!(marginals[e.dst] > 0.0))
            throw std::invalid_argument("bias_tte_adjusted: zero marginal at node " +
                                        std::to_string(e.dst));
        sum += (marginals[e.src] / marginals[e.dst] - 1.0) * e.gamma;
    }
    return sum / model.n();
}

double bias_tte_adjusted(const HaneModel& model, const Design& d) {
    if (d.n() != model.n())
        throw std::invalid_argument("bias_tte_adjusted: design/model size mismatch");
    auto p = design_marginals(d);
    return bias_tte_adjusted(model, p);
}

double var_tte_adjusted_crd(const HaneModel& model, int n, int m) {
    if (n != model.n()) throw std::invalid_argument("var_tte_adjusted_crd: size mismatch");
    if (m <= 0 || m >= n)
        throw std::invalid_argument("var_tte_adjusted_crd: requires 0 < m < n");
    const double p = static_cast<double>(m) / n;
    // Equal marginals: L_i = beta_i + weighted out-degree.
    std::vector<double> ones(n, p);
    InfluenceProfile prof = influence_with_marginals(model, ones);
    return (1.0 - p) / (p * (n - 1.0)) * prof.population_variance;
}

double var_tte_adjusted_cluster(const HaneModel& model, const Partition& partition,
                                int m_clusters) {
    if (partition.node_count() != model.n())
        throw std::invalid_argument("var_tte_adjusted_cluster: partition/model size mismatch");
    if (!partition.uniform_sizes())
        throw std::invalid_argument(
            "var_tte_adjusted_cluster: non-uniform cluster sizes are outside this closed form; "
            "use var_general_cluster or the enumeration oracle");
    const int t_count = partition.cluster_count();
    if (m_clusters <= 0 || m_clusters >= t_count)
        throw std::invalid_argument("var_tte_adjusted_cluster: requires 0 < m_clusters < T");
    const double p = static_cast<double>(m_clusters) / t_count;
    const int n = model.n();
    std::vector<double> marg(n, p);
    InfluenceProfile prof = influence_with_marginals(model, marg);
    std::vector<double> l_prime(t_count, 0.0);
    for (int i = 0; i < n; ++i) l_prime[partition.cluster_of(i)] += prof.L[i];
    const double scale = static_cast<double>(t_count) / n;
    for (double& v : l_prime) v *= scale;
    return (1.0 - p) / (p * (t_count - 1.0)) * popvar(l_prime);
}

double var_tte_adjusted_saturation(const HaneModel& model, const Partition& partition,
                                   std::span<const double> p_tau) {
    if (partition.node_count() != model.n())
        throw std::invalid_argument("var_tte_adjusted_saturation: partition/model size mismatch");
    const int t_count = partition.cluster_count();
    if (static_cast<int>(p_tau.size()) != t_count)
        throw std::invalid_argument("var_tte_adjusted_saturation: one fraction per cluster");
    for (int t = 0; t < t_count; ++t) {
        if (!(p_tau[t] > 0.0 && p_tau[t] <= 1.0))
            throw std::invalid_argument(
                "var_tte_adjusted_saturation: p_tau must lie in (0,1]; a never-treated cluster "
                "leaves the estimator undefined");
        if (partition.cluster_size(t) == 1 && p_tau[t] < 1.0)
            throw std::invalid_argument(
                "var_tte_adjusted_saturation: cluster of size 1 with 0 < p < 1");
    }
    const int n = model.n();
    std::vector<double> marg(n);
    for (int i = 0; i < n; ++i) marg[i] = p_tau[partition.cluster_of(i)];
    InfluenceProfile prof = influence_with_marginals(model, marg);

    double total = 0.0;
    for (int t = 0; t < t_count; ++t) {
        const double p = p_tau[t];
        if (p >= 1.0) continue;  // fully treated cluster: deterministic, contributes nothing
        const auto& members = partition.members(t);
        const double nt = static_cast<double>(members.size());
        std::vector<double> local;
        local.reserve(members.size());
        for (int i : members) local.push_back(prof.L[i]);
        double v_tau = popvar(local);
        total += (1.0 - p) * nt * nt / (p * n * static_cast<double>(n) * (nt - 1.0)) * v_tau;
    }
    return total;
}

LHDecomposition lh_decompose(const HaneModel& model, const WeightedLinearEstimator& e) {
    const int n = model.n();
    if (e.n() != n) throw std::invalid_argument("lh_decompose: estimator/model size mismatch");
    LHDecomposition out;
    out.L.resize(n);
    for (int i = 0; i < n; ++i) {
        out.L[i] = (e.w[i] - e.v[i]) * model.alpha()[i] + e.w[i] * model.beta()[i];
        out.constant += e.v[i] * model.alpha()[i];
    }
    std::map<std::pair<int, int>, double> h;
    for (const Edge& ed : model.graph().edges()) {
        out.L[ed.src] += e.v[ed.dst] * ed.gamma;
        auto key = std::minmax(ed.src, ed.dst);
        h[key] += (e.w[ed.dst] - e.v[ed.dst]) * ed.gamma;
    }
    out.H.reserve(h.size());
    for (const auto& [key, value] : h) out.H.emplace_back(key.first, key.second, value);
    return out;
}

namespace {

/// Five-term exact CRD variance of  sum L_i z_i + sum_{i<j} H_ij z_i z_j
/// under CRD(n, m). The L-H cross term carries the factor two from the
/// covariance expansion; the enumeration oracle pins this down.
double crd_variance_core(std::span<const double> L,
                         std::span<const std::tuple<int, int, double>> H, int n, int m) {
    if (m <= 0 || m >= n) return 0.0;  // degenerate law: deterministic assignment
    const double p = static_cast<double>(m) / n;
    const double nn = n;

    const double sl = std::accumulate(L.begin(), L.end(), 0.0);
    double sl2 = 0.0;
    for (double v : L) sl2 += v * v;
    const double pop_var_l = sl2 / nn - (sl / nn) * (sl / nn);
    double total = p * (1.0 - p) * nn * nn / (nn - 1.0) * pop_var_l;

    bool has_h = false;
    for (const auto& [i, j, hij] : H)
        if (hij != 0.0) has_h = true;
    if (!has_h) return total;
    if (n < 4)
        throw std::invalid_argument(
            "crd closed form: pair terms require n >= 4 (denominators n-2, n-3)");

    double s_h = 0.0, q_h = 0.0, cross_lh = 0.0;
    std::vector<double> row(n, 0.0);
    for (const auto& [i, j, hij] : H) {
        s_h += hij;
        q_h += hij * hij;
        cross_lh += (L[i] + L[j]) * hij;
        row[i] += hij;
        row[j] += hij;
    }
    double row_sq = 0.0;
    for (double r : row) row_sq += r * r;

    const double np = p * nn;  // = m
    const double q2 = p * (np - 1.0) / (nn - 1.0);  // E[z_i z_j], i != j

    total += 2.0 * p * (1.0 - p) * (np - 1.0) / ((nn - 1.0) * (nn - 2.0)) *
             (nn * cross_lh - 2.0 * sl * s_h);
    const double cov4_distinct = q2 * ((np - 2.0) * (np - 3.0) / ((nn - 2.0) * (nn - 3.0))) - q2 * q2;
    total += cov4_distinct * s_h * s_h;
    total += nn * p * (1.0 - p) * (np - 1.0) * (np - 2.0) /
             ((nn - 1.0) * (nn - 2.0) * (nn - 3.0)) * row_sq;
    total += q2 * nn * (1.0 - p) * (nn - np - 1.0) / ((nn - 2.0) * (nn - 3.0)) * q_h;
    return total;
}

}  // namespace

double var_general_crd(const HaneModel& model, const WeightedLinearEstimator& e, int n, int m) {
    if (n != model.n()) throw std::invalid_argument("var_general_crd: size mismatch");
    if (m <= 0 || m >= n) throw std::invalid_argument("var_general_crd: requires 0 < m < n");
    if (n < 4) throw std::invalid_argument("var_general_crd: requires n >= 4");
    LHDecomposition lh = lh_decompose(model, e);
    return crd_variance_core(lh.L, lh.H, n, m);
}

double var_general_cluster(const HaneModel& model, const WeightedLinearEstimator& e,
                           const Partition& partition, int m_clusters) {
    if (partition.node_count() != model.n())
        throw std::invalid_argument("var_general_cluster: partition/model size mismatch");
    const int t_count = partition.cluster_count();
    if (m_clusters <= 0 || m_clusters >= t_count)
        throw std::invalid_argument("var_general_cluster: requires 0 < m_clusters < T");
    if (t_count < 4) throw std::invalid_argument("var_general_cluster: requires T >= 4");
    LHDecomposition lh = lh_decompose(model, e);

    // Reduce to the cluster level: within-cluster pair sums join the linear
    // coefficient, cross-cluster pair sums become the cluster pair terms.
    std::vector<double> l_cluster(t_count, 0.0);
    for (int i = 0; i < model.n(); ++i) l_cluster[partition.cluster_of(i)] += lh.L[i];
    std::map<std::pair<int, int>, double> h_cluster;
    for (const auto& [i, j, hij] : lh.H) {
        int ti = partition.cluster_of(i), tj = partition.cluster_of(j);
        if (ti == tj)
            l_cluster[ti] += hij;
        else
            h_cluster[std::minmax(ti, tj)] += hij;
    }
    std::vector<std::tuple<int, int, double>> h_list;
    h_list.reserve(h_cluster.size());
    for (const auto& [key, value] : h_cluster) h_list.emplace_back(key.first, key.second, value);
    return crd_variance_core(l_cluster, h_list, t_count, m_clusters);
}

namespace {

struct ClusterLocal {
    std::vector<int> members;                             // global node ids
    std::vector<double> L;                                // local order
    std::vector<std::tuple<int, int, double>> H;          // local indices
    int m = 0;                                            // treated count
    double p = 0.0;
    bool degenerate() const { return m == 0 || m == static_cast<int>(members.size()); }
};

// Var[sum L z + sum H z z] under within-cluster CRD by direct enumeration;
// used when the cluster is too small for the closed-form denominators.
double var_a_by_enumeration(const ClusterLocal& c) {
    const int nt = static_cast<int>(c.members.size());
    std::vector<int> comb(c.m);
    std::iota(comb.begin(), comb.end(), 0);
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    std::vector<std::uint8_t> z(nt, 0);
    for (;;) {
        std::fill(z.begin(), z.end(), 0);
        for (int idx : comb) z[idx] = 1;
        double a = 0.0;
        for (int i = 0; i < nt; ++i)
            if (z[i]) a += c.L[i];
        for (const auto& [i, j, hij] : c.H)
            if (z[i] && z[j]) a += hij;
        sum += a;
        sum_sq += a * a;
        ++count;
        int i = c.m - 1;
        while (i >= 0 && comb[i] == nt - c.m + i) --i;
        if (i < 0) break;
        ++comb[i];
        for (int t = i + 1; t < c.m; ++t) comb[t] = comb[t - 1] + 1;
    }
    double mean = sum / static_cast<double>(count);
    return sum_sq / static_cast<double>(count) - mean * mean;
}

// Cov[A, sum_i U_i z_i] within one cluster by enumeration, A as above.
double cov_a_linear_by_enumeration(const ClusterLocal& c, const std::vector<double>& u) {
    const int nt = static_cast<int>(c.members.size());
    std::vector<int> comb(c.m);
    std::iota(comb.begin(), comb.end(), 0);
    double sum_a = 0.0, sum_x = 0.0, sum_ax = 0.0;
    std::size_t count = 0;
    std::vector<std::uint8_t> z(nt, 0);
    for (;;) {
        std::fill(z.begin(), z.end(), 0);
        for (int idx : comb) z[idx] = 1;
        double a = 0.0, x = 0.0;
        for (int i = 0; i < nt; ++i)
            if (z[i]) {
                a += c.L[i];
                x += u[i];
            }
        for (const auto& [i, j, hij] : c.H)
            if (z[i] && z[j]) a += hij;
        sum_a += a;
        sum_x += x;
        sum_ax += a * x;
        ++count;
        int i = c.m - 1;
        while (i >= 0 && comb[i] == nt - c.m + i) --i;
        if (i < 0) break;
        ++comb[i];
        for (int t = i + 1; t < c.m; ++t) comb[t] = comb[t - 1] + 1;
    }
    const double inv = 1.0 / static_cast<double>(count);
    return sum_ax * inv - (sum_a * inv) * (sum_x * inv);
}

}  // namespace

double var_general_stratified(const HaneModel& model, const WeightedLinearEstimator& e,
                              const Partition& partition, std::span<const int> treated_per_cluster,
                              std::vector<std::string>* notes) {
    if (partition.node_count() != model.n())
        throw std::invalid_argument("var_general_stratified: partition/model size mismatch");
    const int t_count = partition.cluster_count();
    if (static_cast<int>(treated_per_cluster.size()) != t_count)
        throw std::invalid_argument("var_general_stratified: one treated count per cluster");

    LHDecomposition lh = lh_decompose(model, e);

    std::vector<ClusterLocal> clusters(t_count);
    std::vector<int> local_index(model.n(), -1);
    for (int t = 0; t < t_count; ++t) {
        ClusterLocal& c = clusters[t];
        c.members = partition.members(t);
        c.m = treated_per_cluster[t];
        if (c.m < 0 || c.m > static_cast<int>(c.members.size()))
            throw std::invalid_argument("var_general_stratified: treated count out of range");
        c.p = static_cast<double>(c.m) / static_cast<double>(c.members.size());
        c.L.reserve(c.members.size());
        for (std::size_t k = 0; k < c.members.size(); ++k) {
            local_index[c.members[k]] = static_cast<int>(k);
            c.L.push_back(lh.L[c.members[k]]);
        }
    }

    // Bucket the pair support: within-cluster pairs in local indices,
    // cross-cluster pairs with per-side row sums U.
    struct CrossPair {
        double q = 0.0;                                // sum of H^2
        double s = 0.0;                                // sum of H
        std::unordered_map<int, double> row_lo, row_hi;  // node -> sum over other side
    };
    std::map<std::pair<int, int>, CrossPair> cross;
    for (const auto& [i, j, hij] : lh.H) {
        int ti = partition.cluster_of(i), tj = partition.cluster_of(j);
        if (ti == tj) {
            clusters[ti].H.emplace_back(local_index[i], local_index[j], hij);
        } else {
            auto key = std::minmax(ti, tj);
            CrossPair& cp = cross[key];
            cp.q += hij * hij;
            cp.s += hij;
            int lo_node = ti < tj ? i : j;
            int hi_node = ti < tj ? j : i;
            cp.row_lo[lo_node] += hij;
            cp.row_hi[hi_node] += hij;
        }
    }

    double total = 0.0;

    // Family 1: Var[A_tau], the within-cluster CRD variance.
    for (int t = 0; t < t_count; ++t) {
        ClusterLocal& c = clusters[t];
        if (c.degenerate()) continue;
        const int nt = static_cast<int>(c.members.size());
        bool has_h = false;
        for (const auto& [i, j, hij] : c.H)
            if (hij != 0.0) has_h = true;
        if (!has_h || nt >= 4) {
            total += crd_variance_core(c.L, c.H, nt, c.m);
        } else {
            if (notes)
                notes->push_back("cluster " + std::to_string(t) +
                                 ": Var[A] by within-cluster enumeration (size < 4)");
            total += var_a_by_enumeration(c);
        }
    }

    // Family 2: the A-B covariances, twice each per the variance expansion.
    for (auto& [key, cp] : cross) {
        for (int side = 0; side < 2; ++side) {
            const int t = side == 0 ? key.first : key.second;
            const int other = side == 0 ? key.second : key.first;
            ClusterLocal& c = clusters[t];
            if (c.degenerate()) continue;
            const double p_other = clusters[other].p;
            if (p_other == 0.0) continue;
            const auto& rows = side == 0 ? cp.row_lo : cp.row_hi;
            const int nt = static_cast<int>(c.members.size());
            std::vector<double> u(nt, 0.0);
            for (const auto& [node, sum] : rows) u[local_index[node]] = sum;

            double cov;
            bool has_within_h = !c.H.empty();
            if (has_within_h && nt < 3) {
                if (notes)
                    notes->push_back("cluster " + std::to_string(t) +
                                     ": Cov[A,B] by within-cluster enumeration (size < 3)");
                cov = p_other * cov_a_linear_by_enumeration(c, u);
            } else {
                const double nn = nt, m = c.m, p = c.p;
                double t1 = 0.0;
                for (int i = 0; i < nt; ++i) t1 += c.L[i] * u[i];
                double sl = std::accumulate(c.L.begin(), c.L.end(), 0.0);
                double su = std::accumulate(u.begin(), u.end(), 0.0);  // = this pair's cross sum
                double value = nn * t1 - sl * su;
                if (has_within_h) {
                    double t3 = 0.0, sh_within = 0.0;
                    for (const auto& [i, j, hij] : c.H) {
                        t3 += hij * (u[i] + u[j]);
                        sh_within += hij;
                    }
                    value += nn * (m - 1.0) / (nn - 2.0) * t3 -
                             2.0 * (m - 1.0) / (nn - 2.0) * sh_within * su;
                }
                cov = p * (1.0 - p) * p_other / (nn - 1.0) * value;
            }
            total += 2.0 * cov;
        }
    }

    // Family 3: Var[B_tau,sigma] from within-cluster second moments.
    for (auto& [key, cp] : cross) {
        const ClusterLocal& a = clusters[key.first];
        const ClusterLocal& b = clusters[key.second];
        const double na = static_cast<double>(a.members.size());
        const double nb = static_cast<double>(b.members.size());
        const double e1 = a.p;
        const double e2 = na >= 2.0 ? a.p * (a.m - 1.0) / (na - 1.0) : 0.0;
        const double f1 = b.p;
        const double f2 = nb >= 2.0 ? b.p * (b.m - 1.0) / (nb - 1.0) : 0.0;
        const double pp = a.p * a.p * b.p * b.p;
        double sum_u_sq = 0.0;
        for (const auto& [node, sum] : cp.row_lo) sum_u_sq += sum * sum;
        double sum_w_sq = 0.0;
        for (const auto& [node, sum] : cp.row_hi) sum_w_sq += sum * sum;
        total += cp.q * (e1 * f1 - pp);
        total += (sum_u_sq - cp.q) * (e1 * f2 - pp);
        total += (sum_w_sq - cp.q) * (e2 * f1 - pp);
        total += (cp.s * cp.s - sum_u_sq - sum_w_sq + cp.q) * (e2 * f2 - pp);
    }

    // Family 4: Cov[B_tau,sigma, B_tau,sigma'] for cross terms sharing tau,
    // twice each per the expansion.
    for (int t = 0; t < t_count; ++t) {
        const ClusterLocal& c = clusters[t];
        if (c.degenerate()) continue;
        const double nt = static_cast<double>(c.members.size());
        // Collect the row sums toward each adjacent cluster.
        std::vector<std::pair<int, const std::unordered_map<int, double>*>> adjacent;
        for (const auto& [key, cp] : cross) {
            if (key.first == t) adjacent.emplace_back(key.second, &cp.row_lo);
            else if (key.second == t) adjacent.emplace_back(key.first, &cp.row_hi);
        }
        for (std::size_t x = 0; x < adjacent.size(); ++x)
            for (std::size_t y = x + 1; y < adjacent.size(); ++y) {
                const auto& [sig1, rows1] = adjacent[x];
                const auto& [sig2, rows2] = adjacent[y];
                const double p1 = clusters[sig1].p, p2 = clusters[sig2].p;
                if (p1 == 0.0 || p2 == 0.0) continue;
                double dot = 0.0, s1 = 0.0, s2 = 0.0;
                for (const auto& [node, sum] : *rows1) {
                    s1 += sum;
                    auto it = rows2->find(node);
                    if (it != rows2->end()) dot += sum * it->second;
                }
                for (const auto& [node, sum] : *rows2) s2 += sum;
                double cov = c.p * (1.0 - c.p) * p1 * p2 / (nt - 1.0) * (nt * dot - s1 * s2);
                total += 2.0 * cov;
            }
    }

    return total;
}

double mean_by_moments(const HaneModel& model, const WeightedLinearEstimator& e, const Design& d,
                       const BaselineInfo& baseline) {
    const int n = model.n();
    if (e.n() != n || d.n() != n)
        throw std::invalid_argument("mean_by_moments: size mismatch");
    std::vector<double> adj = baseline_adjustment(e, n, baseline);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double alpha_adj = model.alpha()[i] - adj[i];
        double pi = d.marginal(i);
        total += e.w[i] * pi * (alpha_adj + model.beta()[i]) + e.v[i] * (1.0 - pi) * alpha_adj;
    }
    for (const Edge& ed : model.graph().edges()) {
        double joint = d.joint2(ed.src, ed.dst);
        double pk = d.marginal(ed.src);
        total += ed.gamma * (e.w[ed.dst] * joint + e.v[ed.dst] * (pk - joint));
    }
    return total;
}

}  // namespace netexp
