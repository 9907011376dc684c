#include "netexp/scenario.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "netexp/model_io.hpp"

namespace netexp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string resolve_path(const std::string& path, const fs::path& base_dir) {
    fs::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (base_dir / p).string();
}

DistSpec law_or_default(const json& spec, const char* key, const char* fallback) {
    if (spec.contains(key)) return DistSpec::parse(spec.at(key).get<std::string>());
    return DistSpec::parse(fallback);
}

}  // namespace

HaneModel model_from_spec(const json& spec, const fs::path& base_dir,
                          std::optional<std::uint64_t>* seed_out) {
    if (spec.is_string()) return load_model_json(resolve_path(spec.get<std::string>(), base_dir));
    if (!spec.is_object()) throw std::runtime_error("model spec: expected a path or an object");
    if (spec.contains("node_csv"))
        return load_model_csv(resolve_path(spec.at("node_csv").get<std::string>(), base_dir),
                              resolve_path(spec.at("edge_csv").get<std::string>(), base_dir));

    const std::string type = spec.at("type").get<std::string>();
    const int n = spec.at("n").get<int>();
    const std::uint64_t seed = spec.value("seed", 0ull);
    if (seed_out) *seed_out = seed;
    DistSpec gamma = law_or_default(spec, "gamma", "constant:1");
    DistSpec alpha_law = law_or_default(spec, "alpha", "constant:0");
    DistSpec beta_law = law_or_default(spec, "beta", "constant:0");

    InterferenceGraph graph = [&]() -> InterferenceGraph {
        if (type == "er")
            return generate_erdos_renyi(n, spec.at("edge_prob").get<double>(), gamma, seed);
        if (type == "clustered") {
            Partition part = spec.contains("partition")
                                 ? partition_from_spec(spec.at("partition"), base_dir)
                                 : Partition::equal_blocks(n, spec.at("clusters").get<int>());
            return generate_clustered(part, spec.at("p_within").get<double>(),
                                      spec.at("p_between").get<double>(), gamma, seed);
        }
        throw std::runtime_error("model spec: unknown generator type '" + type + "'");
    }();

    // Baselines and direct effects draw from a stream disjoint from the
    // edge stream so graph topology is stable under alpha/beta changes.
    Rng rng = Rng::substream(seed, 0x616c7068ull);
    std::vector<double> alpha(n), beta(n);
    for (int i = 0; i < n; ++i) alpha[i] = alpha_law.sample(rng);
    for (int i = 0; i < n; ++i) beta[i] = beta_law.sample(rng);
    return HaneModel(std::move(graph), std::move(alpha), std::move(beta));
}

Partition partition_from_spec(const json& spec, const fs::path& base_dir) {
    if (spec.is_string()) return load_partition(resolve_path(spec.get<std::string>(), base_dir));
    if (spec.is_array()) {
        std::vector<int> assignment = spec.get<std::vector<int>>();
        int t_count = 0;
        for (int c : assignment) t_count = std::max(t_count, c + 1);
        return Partition(std::move(assignment), t_count);
    }
    throw std::runtime_error("partition spec: expected a path or an array of cluster ids");
}

Design design_from_spec(const json& spec, int n, const fs::path& base_dir) {
    const std::string type = spec.at("type").get<std::string>();
    if (type == "bernoulli") return Design::bernoulli(n, spec.at("p").get<double>());
    if (type == "crd") return Design::crd(n, spec.at("treated").get<int>());
    if (type == "cluster_rd") {
        Partition part = partition_from_spec(spec.at("partition"), base_dir);
        if (part.node_count() != n) throw std::runtime_error("design spec: partition size != n");
        return Design::cluster_rd(std::move(part), spec.at("treated_clusters").get<int>());
    }
    if (type == "saturation") {
        Partition part = partition_from_spec(spec.at("partition"), base_dir);
        if (part.node_count() != n) throw std::runtime_error("design spec: partition size != n");
        return Design::saturation_rd(std::move(part),
                                     spec.at("treated_per_cluster").get<std::vector<int>>());
    }
    throw std::runtime_error("design spec: unknown type '" + type + "'");
}

BaselineInfo baseline_from_spec(const json& spec, const HaneModel& model,
                                std::optional<std::uint64_t>* seed_out) {
    if (spec.is_null()) return BaselineInfo::exact_individual(model);
    const std::string mode = spec.at("mode").get<std::string>();
    if (mode == "exact_individual") return BaselineInfo::exact_individual(model);
    if (mode == "exact_population_mean") return BaselineInfo::exact_population_mean(model);
    if (mode == "survey") {
        std::uint64_t seed = spec.value("seed", 0ull);
        if (seed_out) *seed_out = seed;
        return BaselineInfo::survey(model, spec.at("sample_size").get<int>(), seed);
    }
    if (mode == "noisy") {
        std::uint64_t seed = spec.value("seed", 0ull);
        if (seed_out) *seed_out = seed;
        double sd = spec.at("sd").get<double>();
        Rng rng(seed);
        std::vector<double> alpha_hat = model.alpha();
        for (double& a : alpha_hat) a += sd * rng.next_normal();
        return BaselineInfo::noisy(std::move(alpha_hat));
    }
    throw std::runtime_error("baseline spec: unknown mode '" + mode + "'");
}

BuiltEstimator estimator_from_spec(const json& spec, const Design& d,
                                   const SymmetryReport& report) {
    BuiltEstimator out;
    out.requested = spec.at("name").get<std::string>();
    const std::string baseline_pref = spec.value("baseline", "");
    const std::string& name = out.requested;

    if (name == "ht_sutva") {
        out.est = ht_sutva(d);
        out.target = "";
    } else if (name == "difference_in_means") {
        out.est = difference_in_means(d);
        out.target = "tte";
    } else if (name == "tte_ht") {
        out.est = tte_ht(d);
        out.target = "tte";
    } else if (name == "tte_adjusted") {
        out.target = "tte";
        if (baseline_pref == "population_mean") {
            if (!report.equal_marginals_global)
                throw std::runtime_error(
                    "tte_adjusted: population-mean baseline requested but marginals are unequal; "
                    "individual baselines are required in that regime");
            out.est = tte_adjusted(d, report);
        } else if (baseline_pref == "individual" && !report.equal_marginals_global) {
            out.est = report.rho_tte.valid ? tte_adjusted(d, report) : tte_adjusted_marginal(d);
            if (!report.rho_tte.valid)
                out.notes.push_back("no valid per-node rho; using the marginal-scaled form, "
                                    "which is biased under unequal marginals");
        } else if (baseline_pref == "individual") {
            // Equal marginals: same weights either way; keep individual data.
            out.est = tte_adjusted_marginal(d);
            out.est.label = "tte_adjusted";
        } else if (report.equal_marginals_global || report.rho_tte.valid) {
            out.est = tte_adjusted(d, report);
        } else {
            out.est = tte_adjusted_marginal(d);
            out.notes.push_back("symmetry check failed (" + report.rho_tte.failure +
                                "); fell back to the marginal-scaled form");
        }
    } else if (name == "tte_adjusted_marginal") {
        out.est = tte_adjusted_marginal(d);
        out.target = "tte";
    } else if (name == "ate_ht") {
        out.est = ate_ht(d);
        out.target = "ate";
        if (out.est.bias_warning)
            out.notes.push_back(
                "design lacks pairwise independence across edges; bias expected");
    } else if (name == "ate_adjusted") {
        out.est = ate_adjusted(d, report);
        out.target = "ate";
    } else if (name == "ate_adjusted_approx_crd") {
        out.est = ate_adjusted_approx_crd(d);
        out.target = "ate";
        out.notes.push_back(
            "population-mean variant: the replaced treated-baseline average is "
            "mean-preserving, so the mean matches the exact form; the variance differs");
    } else if (name == "aie_adjusted") {
        out.est = aie_adjusted(d, report);
        out.target = "aie";
    } else if (name == "aie_adjusted_approx_crd") {
        out.est = aie_adjusted_approx_crd(d);
        out.target = "aie";
        out.notes.push_back(
            "population-mean variant: the replaced control-baseline average is "
            "mean-preserving, so the mean matches the exact form; the variance differs");
    } else {
        throw std::runtime_error("estimator spec: unknown name '" + name + "'");
    }
    return out;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_scenario: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_scenario: " + path + ": " + e.what());
    }
    const fs::path base_dir = fs::path(path).parent_path();

    std::optional<std::uint64_t> model_seed, baseline_seed;
    HaneModel model = model_from_spec(j.at("model"), base_dir, &model_seed);
    Design design = design_from_spec(j.at("design"), model.n(), base_dir);
    BaselineInfo baseline =
        baseline_from_spec(j.contains("baseline") ? j.at("baseline") : json(), model,
                           &baseline_seed);

    Scenario sc{std::move(j), std::move(model), std::move(design), {}, std::move(baseline),
                std::nullopt, false, Tolerances{}, "", model_seed, baseline_seed};

    if (!sc.raw.contains("estimators") || sc.raw.at("estimators").empty())
        throw std::runtime_error("load_scenario: at least one estimator is required");
    for (const auto& e : sc.raw.at("estimators")) sc.estimator_specs.push_back(e);

    if (sc.raw.contains("mc")) {
        const json& m = sc.raw.at("mc");
        McConfig cfg;
        cfg.replicates = m.at("replicates").get<std::size_t>();
        cfg.master_seed = m.value("master_seed", 0ull);
        cfg.keep_replicate_values = m.value("keep_replicate_values", false);
        if (cfg.replicates < 2)
            throw std::runtime_error("load_scenario: mc.replicates must be >= 2");
        sc.mc = cfg;
    }
    sc.verify = sc.raw.value("verify", false);
    if (!sc.verify && !sc.mc)
        throw std::runtime_error("load_scenario: at least one of verify/mc must be requested");
    if (sc.raw.contains("tolerances")) {
        const json& t = sc.raw.at("tolerances");
        sc.tol.mean_abs = t.value("mean_abs", sc.tol.mean_abs);
        sc.tol.variance_rel = t.value("variance_rel", sc.tol.variance_rel);
        sc.tol.mc_mean_sigmas = t.value("mc_mean_sigmas", sc.tol.mc_mean_sigmas);
    }
    sc.output_path = sc.raw.value("output", "");
    if (!sc.output_path.empty()) sc.output_path = resolve_path(sc.output_path, base_dir);
    return sc;
}

namespace {

bool weights_all_equal(const std::vector<double>& x, double value, double rel_tol = 1e-12) {
    for (double v : x)
        if (std::abs(v - value) > rel_tol * std::max(1.0, std::abs(value))) return false;
    return true;
}

bool same_weights(const std::vector<double>& a, const std::vector<double>& b,
                  double rel_tol = 1e-12) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > rel_tol * std::max({1.0, std::abs(a[i]), std::abs(b[i])}))
            return false;
    return true;
}

struct AnalyticalVariance {
    bool present = false;
    double value = 0.0;
    std::string formula;
    std::optional<double> alternate;  // second closed form, when one applies
    std::string alternate_formula;
    std::vector<std::string> notes;
};

/// Effective model for the variance channel: baseline adjustments subtract
/// constants from the outcomes, i.e. shift alpha.
std::optional<HaneModel> effective_model_for_variance(const HaneModel& model,
                                                      const WeightedLinearEstimator& e,
                                                      const Design& d,
                                                      const BaselineInfo& baseline,
                                                      std::vector<std::string>& notes) {
    if (e.baseline_mode == BaselineMode::None) return model;
    if (e.baseline_mode == BaselineMode::SubtractIndividual) {
        std::vector<double> alpha = model.alpha();
        const auto& hat = baseline.individual();
        for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] -= hat[i];
        return model.with_alpha(std::move(alpha));
    }
    // Population-mean subtraction is a deterministic shift only when the
    // design fixes the treated count and the treated/control weight gap is
    // uniform; otherwise the subtracted term is random and no closed form
    // from this module applies.
    if (!d.fixed_treated_count()) {
        notes.push_back("population-mean baseline under a random treated count: "
                        "no closed-form variance");
        return std::nullopt;
    }
    double gap = e.w[0] - e.v[0];
    for (int i = 0; i < e.n(); ++i)
        if (std::abs((e.w[i] - e.v[i]) - gap) > 1e-12 * std::max(1.0, std::abs(gap))) {
            notes.push_back("population-mean baseline with non-uniform weight gap: "
                            "no closed-form variance");
            return std::nullopt;
        }
    std::vector<double> alpha = model.alpha();
    double mean = baseline.population_mean();
    for (double& a : alpha) a -= mean;
    return model.with_alpha(std::move(alpha));
}

AnalyticalVariance analytical_variance_for(const HaneModel& model,
                                           const WeightedLinearEstimator& e, const Design& d,
                                           const BaselineInfo& baseline) {
    AnalyticalVariance out;
    auto effective = effective_model_for_variance(model, e, d, baseline, out.notes);
    if (!effective) return out;
    const int n = model.n();

    switch (d.kind()) {
        case DesignKind::Crd: {
            const int m = d.treated();
            if (m <= 0 || m >= n) return out;
            const double p = static_cast<double>(m) / n;
            const bool influence_form = e.baseline_mode != BaselineMode::None &&
                                        same_weights(e.w, e.v) &&
                                        weights_all_equal(e.w, 1.0 / (n * p));
            if (influence_form) {
                out.present = true;
                out.value = var_tte_adjusted_crd(*effective, n, m);
                out.formula = "sec8_crd";
                if (n >= 4) {
                    out.alternate = var_general_crd(*effective, e, n, m);
                    out.alternate_formula = "general_crd";
                }
            } else if (n >= 4) {
                out.present = true;
                out.value = var_general_crd(*effective, e, n, m);
                out.formula = "general_crd";
            }
            return out;
        }
        case DesignKind::ClusterRd: {
            const Partition& part = d.partition();
            const int t_count = part.cluster_count();
            const int mc = d.treated_clusters();
            if (mc <= 0 || mc >= t_count) return out;
            const double p = static_cast<double>(mc) / t_count;
            const bool influence_form = e.baseline_mode != BaselineMode::None &&
                                        same_weights(e.w, e.v) &&
                                        weights_all_equal(e.w, 1.0 / (n * p)) &&
                                        part.uniform_sizes();
            if (influence_form) {
                out.present = true;
                out.value = var_tte_adjusted_cluster(*effective, part, mc);
                out.formula = "sec8_cluster";
                if (t_count >= 4) {
                    out.alternate = var_general_cluster(*effective, e, part, mc);
                    out.alternate_formula = "general_cluster";
                }
            } else if (t_count >= 4) {
                out.present = true;
                out.value = var_general_cluster(*effective, e, part, mc);
                out.formula = "general_cluster";
            }
            return out;
        }
        case DesignKind::SaturationRd: {
            const Partition& part = d.partition();
            const auto& counts = d.treated_per_cluster();
            std::vector<double> p_tau(counts.size());
            bool all_positive = true;
            for (std::size_t t = 0; t < counts.size(); ++t) {
                p_tau[t] = static_cast<double>(counts[t]) / part.cluster_size(static_cast<int>(t));
                all_positive = all_positive && counts[t] > 0;
            }
            bool marginal_form = e.baseline_mode != BaselineMode::None && same_weights(e.w, e.v) &&
                                 all_positive;
            if (marginal_form)
                for (int i = 0; i < n && marginal_form; ++i)
                    marginal_form = std::abs(e.w[i] - 1.0 / (n * d.marginal(i))) <=
                                    1e-12 * std::max(1.0, std::abs(e.w[i]));
            out.present = true;
            if (marginal_form) {
                out.value = var_tte_adjusted_saturation(*effective, part, p_tau);
                out.formula = "sec8_saturation";
                out.alternate =
                    var_general_stratified(*effective, e, part, counts, &out.notes);
                out.alternate_formula = "general_stratified";
            } else {
                out.value = var_general_stratified(*effective, e, part, counts, &out.notes);
                out.formula = "general_stratified";
            }
            return out;
        }
        case DesignKind::Bernoulli:
            return out;  // no closed form in scope; oracle/MC cover it
    }
    return out;
}

std::string baseline_mode_name(BaselineMode mode) {
    switch (mode) {
        case BaselineMode::None: return "none";
        case BaselineMode::SubtractIndividual: return "subtract_individual";
        case BaselineMode::SubtractPopulationMean: return "subtract_population_mean";
    }
    return "?";
}

std::string iso_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&tt));
    return buf;
}

}  // namespace

RunOutcome run_scenario(const Scenario& sc) {
    RunOutcome outcome;
    json& report = outcome.report;
    const HaneModel& model = sc.model;

    report["truth"] = {{"tte", true_tte(model)}, {"ate", true_ate(model)}, {"aie", true_aie(model)}};
    const double truth_values[3] = {true_tte(model), true_ate(model), true_aie(model)};

    SymmetryReport sym = check_symmetry(sc.design, model.graph());
    report["symmetry"] = {{"equal_marginals", sym.equal_marginals},
                          {"equal_marginals_global", sym.equal_marginals_global},
                          {"rho_tte_valid", sym.rho_tte.valid},
                          {"rho_ate_valid", sym.rho_ate.valid},
                          {"rho_aie_valid", sym.rho_aie.valid}};

    json estimators = json::array();
    for (const json& spec : sc.estimator_specs) {
        BuiltEstimator built = estimator_from_spec(spec, sc.design, sym);
        json entry;
        entry["label"] = built.est.label;
        entry["requested_name"] = built.requested;
        entry["baseline_mode"] = baseline_mode_name(built.est.baseline_mode);
        if (built.est.bias_warning) entry["bias_warning"] = true;
        json checks = json::array();

        double truth = 0.0;
        bool has_target = !built.target.empty();
        if (has_target)
            truth = built.target == "tte"   ? truth_values[0]
                    : built.target == "ate" ? truth_values[1]
                                            : truth_values[2];

        // Analytical channel: exact mean from design moments, closed-form
        // variance where one applies.
        json analytical;
        double analytical_mean = mean_by_moments(model, built.est, sc.design, sc.baseline);
        analytical["mean"] = analytical_mean;
        if (has_target) {
            analytical["target"] = built.target;
            analytical["bias"] = analytical_mean - truth;
        }
        AnalyticalVariance av = analytical_variance_for(model, built.est, sc.design, sc.baseline);
        if (av.present) {
            analytical["variance"] = av.value;
            analytical["variance_formula"] = av.formula;
            if (av.alternate) {
                analytical["variance_alternate"] = *av.alternate;
                analytical["variance_alternate_formula"] = av.alternate_formula;
                double diff = std::abs(*av.alternate - av.value);
                double tol = std::max(sc.tol.variance_rel * std::abs(av.value), 1e-12);
                checks.push_back({{"name", "closed_forms_agree"},
                                  {"difference", diff},
                                  {"tolerance", tol},
                                  {"pass", diff <= tol}});
            }
        }
        for (const auto& note : av.notes) built.notes.push_back(note);
        entry["analytical"] = analytical;

        std::optional<ExactMoments> oracle;
        if (sc.verify) {
            oracle = exact_estimator_moments(model, built.est, sc.design, sc.baseline);
            entry["oracle"] = {{"mean", oracle->mean},
                               {"variance", oracle->variance},
                               {"support_size", oracle->support_size}};
            double mean_diff = std::abs(oracle->mean - analytical_mean);
            checks.push_back({{"name", "oracle_vs_analytical_mean"},
                              {"difference", mean_diff},
                              {"tolerance", sc.tol.mean_abs},
                              {"pass", mean_diff <= sc.tol.mean_abs}});
            if (av.present) {
                double var_diff = std::abs(oracle->variance - av.value);
                double tol = std::max(sc.tol.variance_rel * std::abs(oracle->variance), 1e-12);
                checks.push_back({{"name", "oracle_vs_analytical_variance"},
                                  {"difference", var_diff},
                                  {"tolerance", tol},
                                  {"pass", var_diff <= tol}});
            }
        }

        if (sc.mc) {
            McResult mc = run_mc(model, built.est, sc.design, sc.baseline, *sc.mc);
            entry["mc"] = {{"empirical_mean", mc.empirical_mean},
                           {"empirical_variance", mc.empirical_variance},
                           {"stderr_of_mean", mc.stderr_of_mean},
                           {"replicates", mc.replicates}};
            double reference = oracle ? oracle->mean : analytical_mean;
            double diff = std::abs(mc.empirical_mean - reference);
            double tol = sc.tol.mc_mean_sigmas * mc.stderr_of_mean;
            checks.push_back({{"name", "mc_mean_vs_reference"},
                              {"difference", diff},
                              {"tolerance", tol},
                              {"pass", diff <= tol}});
        }

        for (const auto& c : checks)
            if (!c.at("pass").get<bool>()) outcome.any_check_failed = true;
        entry["checks"] = std::move(checks);
        if (!built.notes.empty()) entry["notes"] = built.notes;
        estimators.push_back(std::move(entry));
    }
    report["estimators"] = std::move(estimators);

    DegreeStats deg = degree_stats(model.graph());
    json seeds;
    if (sc.model_seed) seeds["model"] = *sc.model_seed;
    if (sc.baseline_seed) seeds["baseline"] = *sc.baseline_seed;
    if (sc.mc) seeds["mc_master"] = sc.mc->master_seed;
    report["metadata"] = {{"n", model.n()},
                          {"edge_count", model.graph().edges().size()},
                          {"d_max", deg.d_max},
                          {"design", sc.design.describe()},
                          {"baseline", sc.baseline.describe()},
                          {"seeds", std::move(seeds)},
                          {"tolerances",
                           {{"mean_abs", sc.tol.mean_abs},
                            {"variance_rel", sc.tol.variance_rel},
                            {"mc_mean_sigmas", sc.tol.mc_mean_sigmas}}},
                          {"timestamp", iso_timestamp()},
                          {"scenario", sc.raw}};
    return outcome;
}

std::string report_to_csv(const json& report) {
    std::ostringstream os;
    os.precision(17);
    os << "label,target,truth,analytical_mean,analytical_bias,analytical_variance,"
          "variance_formula,oracle_mean,oracle_variance,support_size,mc_mean,mc_variance,"
          "mc_stderr,replicates,all_checks_pass\n";
    for (const auto& e : report.at("estimators")) {
        const json& a = e.at("analytical");
        std::string target = a.value("target", "");
        os << e.at("label").get<std::string>() << "," << target << ",";
        if (!target.empty()) os << report.at("truth").at(target).get<double>();
        os << "," << a.at("mean").get<double>() << ",";
        if (a.contains("bias")) os << a.at("bias").get<double>();
        os << ",";
        if (a.contains("variance")) os << a.at("variance").get<double>();
        os << ",";
        os << a.value("variance_formula", "") << ",";
        if (e.contains("oracle")) {
            const json& o = e.at("oracle");
            os << o.at("mean").get<double>() << "," << o.at("variance").get<double>() << ","
               << o.at("support_size").get<std::size_t>();
        } else {
            os << ",,";
        }
        os << ",";
        if (e.contains("mc")) {
            const json& m = e.at("mc");
            os << m.at("empirical_mean").get<double>() << ","
               << m.at("empirical_variance").get<double>() << ","
               << m.at("stderr_of_mean").get<double>() << ","
               << m.at("replicates").get<std::size_t>();
        } else {
            os << ",,,";
        }
        bool all_pass = true;
        for (const auto& c : e.at("checks")) all_pass = all_pass && c.at("pass").get<bool>();
        os << "," << (all_pass ? "true" : "false") << "\n";
    }
    return os.str();
}

}  // namespace netexp
