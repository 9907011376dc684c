#include "netexp/outcomes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace netexp {

HaneModel::HaneModel(InterferenceGraph graph, std::vector<double> alpha, std::vector<double> beta)
    : graph_(std::move(graph)), alpha_(std::move(alpha)), beta_(std::move(beta)) {
    const std::size_t n = static_cast<std::size_t>(graph_.node_count());
    if (alpha_.size() != n || beta_.size() != n)
        throw std::invalid_argument("HaneModel: alpha/beta length must match the graph");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(alpha_[i]) || !std::isfinite(beta_[i]))
            throw std::invalid_argument("HaneModel: alpha/beta entries must be finite");
}

void evaluate_into(const HaneModel& model, std::span<const std::uint8_t> z,
                   std::vector<double>& y) {
    const int n = model.n();
    if (static_cast<int>(z.size()) != n)
        throw std::invalid_argument("evaluate: treatment vector length mismatch");
    y.assign(model.alpha().begin(), model.alpha().end());
    const auto& beta = model.beta();
    for (int i = 0; i < n; ++i)
        if (z[i]) y[i] += beta[i];
    for (const Edge& e : model.graph().edges())
        if (z[e.src]) y[e.dst] += e.gamma;
}

std::vector<double> evaluate(const HaneModel& model, std::span<const std::uint8_t> z) {
    std::vector<double> y;
    evaluate_into(model, z, y);
    return y;
}

double true_ate(const HaneModel& model) {
    double sum = 0.0;
    for (double b : model.beta()) sum += b;
    return sum / model.n();
}

double true_aie(const HaneModel& model) {
    double sum = 0.0;
    for (const Edge& e : model.graph().edges()) sum += e.gamma;
    return sum / model.n();
}

double true_tte(const HaneModel& model) { return true_ate(model) + true_aie(model); }

ContagionModel ContagionModel::zeros(int n) {
    ContagionModel cm;
    cm.n = n;
    cm.a.assign(n, 0.0);
    cm.b.assign(n, 0.0);
    cm.c.assign(static_cast<std::size_t>(n) * n, 0.0);
    return cm;
}

namespace {

// y <- C^T x, i.e. y_i = sum_k c(k,i) x_k.
void apply_ct(const ContagionModel& cm, const std::vector<double>& x, std::vector<double>& y) {
    const int n = cm.n;
    y.assign(n, 0.0);
    for (int k = 0; k < n; ++k) {
        const double xk = x[k];
        if (xk == 0.0) continue;
        const double* row = cm.c.data() + static_cast<std::size_t>(k) * n;
        for (int i = 0; i < n; ++i) y[i] += row[i] * xk;
    }
}

double max_abs(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

// Power-iteration estimate of the spectral radius of C (via C^T, same value).
double spectral_radius_estimate(const ContagionModel& cm) {
    const int n = cm.n;
    std::vector<double> v(n), w;
    for (int i = 0; i < n; ++i) v[i] = 1.0 + 1e-3 * (i + 1);  // avoid an orthogonal start
    double norm = max_abs(v);
    for (double& x : v) x /= norm;
    double rho = 0.0;
    for (int it = 0; it < 200; ++it) {
        apply_ct(cm, v, w);
        norm = max_abs(w);
        if (norm == 0.0) return 0.0;
        rho = norm;
        for (int i = 0; i < n; ++i) v[i] = w[i] / norm;
    }
    return rho;
}

// Solves y = rhs + C^T y by Neumann series; throws on non-convergence.
std::vector<double> solve_neumann(const ContagionModel& cm, const std::vector<double>& rhs,
                                  double tol, int max_iter) {
    std::vector<double> total = rhs, term = rhs, next;
    for (int it = 0; it < max_iter; ++it) {
        apply_ct(cm, term, next);
        term.swap(next);
        for (int i = 0; i < cm.n; ++i) total[i] += term[i];
        if (max_abs(term) <= tol * 0.5) break;
    }
    // residual check: || total - (rhs + C^T total) ||_inf
    apply_ct(cm, total, next);
    double resid = 0.0;
    for (int i = 0; i < cm.n; ++i) resid = std::max(resid, std::abs(total[i] - rhs[i] - next[i]));
    if (!(resid <= tol))
        throw std::runtime_error("from_contagion: Neumann series did not reach tolerance");
    return total;
}

}  // namespace

HaneModel from_contagion(const ContagionModel& cm, double tol) {
    const int n = cm.n;
    if (n < 1 || cm.a.size() != static_cast<std::size_t>(n) ||
        cm.b.size() != static_cast<std::size_t>(n) ||
        cm.c.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("from_contagion: inconsistent dimensions");
    for (int i = 0; i < n; ++i)
        if (cm.c_at(i, i) != 0.0)
            throw std::invalid_argument("from_contagion: contagion matrix must have zero diagonal");

    const double rho = spectral_radius_estimate(cm);
    if (!(rho < 1.0 - 1e-12))
        throw std::runtime_error("from_contagion: spectral radius >= 1, no fixed point");
    // Iteration budget: terms shrink like rho^t; cap scaled accordingly.
    const double rho_floor = std::max(rho, 0.1);
    const int max_iter =
        std::max(64, static_cast<int>(10.0 * std::log(1.0 / tol) / std::log(1.0 / rho_floor)));

    std::vector<double> alpha = solve_neumann(cm, cm.a, tol, max_iter);

    // Column j of M = (I - C^T)^{-1} diag(b) solves y = b_j e_j + C^T y.
    std::vector<double> beta(n, 0.0);
    std::vector<Edge> edges;
    std::vector<double> rhs(n, 0.0);
    for (int j = 0; j < n; ++j) {
        if (cm.b[j] == 0.0) continue;  // column of M is b_j * (I - C^T)^{-1} e_j, hence zero
        std::fill(rhs.begin(), rhs.end(), 0.0);
        rhs[j] = cm.b[j];
        std::vector<double> col = solve_neumann(cm, rhs, tol, max_iter);
        beta[j] = col[j];
        for (int i = 0; i < n; ++i)
            if (i != j && col[i] != 0.0) edges.push_back({j, i, col[i]});
    }
    return HaneModel(InterferenceGraph(n, std::move(edges)), std::move(alpha), std::move(beta));
}

}  // namespace netexp
