#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "netexp/network.hpp"

namespace netexp {

/// Binary treatment vector, entries in {0,1}.
using Assignment = std::vector<std::uint8_t>;

/// Potential-outcomes model with additive heterogeneous network effects:
///   Y_i(z) = alpha_i + beta_i z_i + sum over edges (k -> i) of gamma_ki z_k.
/// alpha is the baseline Y_i(0), beta the direct effect; the edge weights
/// live in the graph. Immutable; evaluation is pure.
class HaneModel {
public:
    HaneModel(InterferenceGraph graph, std::vector<double> alpha, std::vector<double> beta);

    int n() const { return graph_.node_count(); }
    const InterferenceGraph& graph() const { return graph_; }
    const std::vector<double>& alpha() const { return alpha_; }
    const std::vector<double>& beta() const { return beta_; }

    /// Same graph and direct effects, baselines replaced.
    HaneModel with_alpha(std::vector<double> alpha) const {
        return HaneModel(graph_, std::move(alpha), beta_);
    }

private:
    InterferenceGraph graph_;
    std::vector<double> alpha_, beta_;
};

/// Writes Y(z) into `y`; O(n + |edges|).
void evaluate_into(const HaneModel& model, std::span<const std::uint8_t> z, std::vector<double>& y);
std::vector<double> evaluate(const HaneModel& model, std::span<const std::uint8_t> z);

/// Total treatment effect: mean over nodes of Y_i(1) - Y_i(0)
/// = (sum of beta + sum of all edge weights) / n.
double true_tte(const HaneModel& model);

/// Average (direct) treatment effect: mean of beta.
double true_ate(const HaneModel& model);

/// Average interference effect: sum of all edge weights / n.
/// true_tte == true_ate + true_aie for every model.
double true_aie(const HaneModel& model);

/// Structural linear contagion model: Y_i = a_i + b_i z_i + sum_k c_ki Y_k,
/// where c(k,i) is the effect of k's outcome on i's outcome. The fixed point
/// exists when the spectral radius of C is below one.
struct ContagionModel {
    int n = 0;
    std::vector<double> a;  // intercepts
    std::vector<double> b;  // direct responses
    std::vector<double> c;  // row-major n*n, c[k*n + i], zero diagonal

    double c_at(int k, int i) const { return c[static_cast<std::size_t>(k) * n + i]; }
    double& c_at(int k, int i) { return c[static_cast<std::size_t>(k) * n + i]; }
    static ContagionModel zeros(int n);
};

/// Reduces a contagion model to its equivalent additive-effects model by
/// solving the structural fixed point: alpha solves y = a + C^T y, and the
/// effect matrix M = (I - C^T)^{-1} diag(b) supplies beta_i = M[i][i] and an
/// edge k -> i with weight M[i][k] for k != i. Solved by Neumann series to a
/// max-norm residual of `tol`; throws if the spectral radius is >= 1 or the
/// series fails to converge.
HaneModel from_contagion(const ContagionModel& cm, double tol = 1e-10);

}  // namespace netexp
