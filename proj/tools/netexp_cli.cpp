#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "netexp/model_io.hpp"
#include "netexp/scenario.hpp"

using nlohmann::json;

namespace {

int cmd_generate(const json& spec, const std::string& out_path, const std::string& graph_csv,
                 const std::string& partition_out, int clusters) {
    std::optional<std::uint64_t> seed;
    if (!out_path.empty() || !graph_csv.empty()) {
        netexp::HaneModel model = netexp::model_from_spec(spec, {}, &seed);
        if (!out_path.empty()) {
            netexp::save_model(model, out_path);
            std::cout << "wrote model: " << out_path << " (n=" << model.n()
                      << ", edges=" << model.graph().edges().size() << ")\n";
        }
        if (!graph_csv.empty()) {
            netexp::save_graph(model.graph(), graph_csv);
            std::cout << "wrote edge list: " << graph_csv << "\n";
        }
    }
    if (!partition_out.empty()) {
        int n = spec.at("n").get<int>();
        netexp::Partition part = netexp::Partition::equal_blocks(n, clusters);
        netexp::save_partition(part, partition_out);
        std::cout << "wrote partition: " << partition_out << " (T=" << clusters << ")\n";
    }
    return 0;
}

int cmd_truth(const std::string& model_path, const std::string& node_csv,
              const std::string& edge_csv) {
    netexp::HaneModel model = !model_path.empty()
                                  ? netexp::load_model_json(model_path)
                                  : netexp::load_model_csv(node_csv, edge_csv);
    netexp::DegreeStats deg = netexp::degree_stats(model.graph());
    double tte = netexp::true_tte(model);
    double ate = netexp::true_ate(model);
    double aie = netexp::true_aie(model);
    std::printf("n: %d  edges: %zu  d_max: %d\n", model.n(), model.graph().edges().size(),
                deg.d_max);
    std::printf("tte: %.17g\n", tte);
    std::printf("ate: %.17g\n", ate);
    std::printf("aie: %.17g\n", aie);
    double gap = std::abs(tte - (ate + aie));
    std::printf("identity tte = ate + aie: %s (|gap| = %.3g)\n",
                gap <= 1e-12 * std::max(1.0, std::abs(tte)) ? "ok" : "VIOLATED", gap);
    return gap <= 1e-12 * std::max(1.0, std::abs(tte)) ? 0 : 1;
}

int cmd_run(const std::string& scenario_path, bool force_verify, bool strict,
            const std::string& out_override, const std::string& csv_path) {
    netexp::Scenario sc = netexp::load_scenario(scenario_path);
    if (force_verify) sc.verify = true;
    netexp::RunOutcome outcome = netexp::run_scenario(sc);

    const std::string out_path = !out_override.empty() ? out_override : sc.output_path;
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot open report path '" + out_path + "'");
        out << outcome.report.dump(2) << "\n";
        std::cout << "wrote report: " << out_path << "\n";
    } else {
        std::cout << outcome.report.dump(2) << "\n";
    }
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw std::runtime_error("cannot open csv path '" + csv_path + "'");
        out << netexp::report_to_csv(outcome.report);
        std::cout << "wrote csv: " << csv_path << "\n";
    }

    const json& truth = outcome.report.at("truth");
    std::printf("truth: tte=%.10g ate=%.10g aie=%.10g\n", truth.at("tte").get<double>(),
                truth.at("ate").get<double>(), truth.at("aie").get<double>());
    for (const auto& e : outcome.report.at("estimators")) {
        std::string line = e.at("label").get<std::string>();
        const json& a = e.at("analytical");
        line += ": analytical_mean=" + std::to_string(a.at("mean").get<double>());
        if (e.contains("oracle"))
            line += " oracle_mean=" + std::to_string(e.at("oracle").at("mean").get<double>());
        if (e.contains("mc"))
            line += " mc_mean=" + std::to_string(e.at("mc").at("empirical_mean").get<double>());
        bool all_pass = true;
        for (const auto& c : e.at("checks")) all_pass = all_pass && c.at("pass").get<bool>();
        line += all_pass ? "  [checks ok]" : "  [CHECKS FAILED]";
        std::cout << line << "\n";
    }
    if (outcome.any_check_failed && strict) {
        std::cerr << "verification disagreement beyond tolerance (strict mode)\n";
        return 2;
    }
    return 0;
}

int cmd_moments(bool has_crd, const std::vector<int>& crd_args, double bernoulli_p,
                bool has_bernoulli, int n_opt, const std::string& design_json,
                const std::vector<int>& cov, const std::vector<int>& raw) {
    const std::vector<int>& indices = !cov.empty() ? cov : raw;
    if (indices.empty() || indices.size() > 4)
        throw std::runtime_error("moments: pass 1 to 4 indices via --cov or --raw");
    int max_index = *std::max_element(indices.begin(), indices.end());

    std::optional<netexp::Design> design;
    if (has_crd) {
        design = netexp::Design::crd(crd_args[0], crd_args[1]);
    } else if (has_bernoulli) {
        int n = n_opt > 0 ? n_opt : max_index + 1;
        design = netexp::Design::bernoulli(n, bernoulli_p);
    } else if (!design_json.empty()) {
        std::ifstream in(design_json);
        if (!in) throw std::runtime_error("cannot open design spec '" + design_json + "'");
        json spec;
        in >> spec;
        if (n_opt <= 0) throw std::runtime_error("--n is required with --design");
        design = netexp::design_from_spec(
            spec, n_opt, std::filesystem::path(design_json).parent_path());
    } else {
        throw std::runtime_error("moments: pick a design via --crd N M | --bernoulli P | --design");
    }
    if (max_index >= design->n()) throw std::runtime_error("moments: index out of range");

    const bool central = !cov.empty();
    const auto kind = central ? netexp::MomentKind::Central : netexp::MomentKind::Raw;
    double enumerated = netexp::exact_design_moment(*design, indices, kind);

    // Closed form: marginals/pairs for every design, higher moments for CRD.
    std::optional<double> closed;
    if (central) {
        if (indices.size() == 1) {
            double p = design->marginal(indices[0]);
            closed = p * (1.0 - p);
        } else if (indices.size() == 2) {
            closed = design->joint2(indices[0], indices[1]) -
                     design->marginal(indices[0]) * design->marginal(indices[1]);
        } else if (design->kind() == netexp::DesignKind::Crd) {
            closed = indices.size() == 3
                         ? netexp::crd_moment3(*design, indices[0], indices[1], indices[2])
                         : netexp::crd_moment4(*design, indices[0], indices[1], indices[2],
                                               indices[3]);
        }
    } else {
        if (indices.size() == 1) closed = design->marginal(indices[0]);
        else if (indices.size() == 2) closed = design->joint2(indices[0], indices[1]);
        else if (design->kind() == netexp::DesignKind::Crd) {
            // E[prod z] over the distinct index set
            std::vector<int> distinct = indices;
            std::sort(distinct.begin(), distinct.end());
            distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
            closed = netexp::crd_joint_moment(design->n(), design->treated(),
                                              static_cast<int>(distinct.size()));
        }
    }

    std::string desc = central
                           ? (indices.size() == 1   ? "Var[z_i]"
                              : indices.size() == 2 ? "Cov[z_i, z_j]"
                              : indices.size() == 3 ? "Cov[z_i, z_j z_k]"
                                                    : "Cov[z_i z_j, z_k z_l]")
                           : "E[prod z]";
    std::cout << "design: " << design->describe() << "\n";
    std::cout << desc << " at indices (";
    for (std::size_t i = 0; i < indices.size(); ++i) std::cout << (i ? "," : "") << indices[i];
    std::cout << ")\n";
    if (closed)
        std::printf("  closed-form:  %.17g\n", *closed);
    else
        std::printf("  closed-form:  n/a for this design\n");
    std::printf("  enumeration:  %.17g\n", enumerated);
    if (closed && std::abs(*closed - enumerated) > 1e-12) {
        std::cerr << "channels disagree beyond 1e-12\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized-experiment simulation and analysis under additive network effects"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Write model/graph/partition files");
    bool er = false, clustered = false;
    int n = 0, clusters = 0;
    double edge_prob = 0.0, p_within = 0.0, p_between = 0.0;
    std::string gamma_law = "constant:1", alpha_law = "constant:0", beta_law = "constant:0";
    std::uint64_t seed = 0;
    std::string out_path, graph_csv, partition_out;
    gen->add_flag("--er", er, "Erdos-Renyi generator");
    gen->add_flag("--clustered", clustered, "Two-probability clustered generator");
    gen->add_option("--n", n, "population size")->required();
    gen->add_option("--edge-prob", edge_prob, "edge probability (ER)");
    gen->add_option("--p-within", p_within, "within-cluster edge probability");
    gen->add_option("--p-between", p_between, "between-cluster edge probability");
    gen->add_option("--clusters", clusters, "cluster count (clustered/partition output)");
    gen->add_option("--gamma", gamma_law, "edge-weight law, e.g. normal:0,1");
    gen->add_option("--alpha", alpha_law, "baseline law");
    gen->add_option("--beta", beta_law, "direct-effect law");
    gen->add_option("--seed", seed, "generator seed");
    gen->add_option("--out", out_path, "model JSON output path");
    gen->add_option("--graph-csv", graph_csv, "edge-list CSV output path");
    gen->add_option("--partition-out", partition_out, "partition CSV output path");

    // truth
    auto* truth = app.add_subcommand("truth", "Print ground-truth estimands and degree stats");
    std::string model_path, node_csv, edge_csv;
    truth->add_option("model", model_path, "model JSON path");
    truth->add_option("--node-csv", node_csv, "node CSV (id,alpha,beta)");
    truth->add_option("--edge-csv", edge_csv, "edge CSV (src,dst,gamma)");

    // run / verify
    auto* run = app.add_subcommand("run", "Run a scenario file");
    auto* verify = app.add_subcommand("verify", "Run a scenario with enumeration verification");
    std::string scenario_path, out_override, csv_path;
    bool strict = false;
    for (auto* cmd : {run, verify}) {
        cmd->add_option("scenario", scenario_path, "scenario JSON path")->required();
        cmd->add_flag("--strict", strict, "exit 2 on verification disagreement");
        cmd->add_option("--out", out_override, "report output path override");
        cmd->add_option("--csv", csv_path, "also write a flat CSV projection");
    }

    // moments
    auto* moments = app.add_subcommand("moments", "Design moments: closed form vs enumeration");
    std::vector<int> crd_args, cov, raw;
    double bernoulli_p = 0.0;
    int n_opt = 0;
    std::string design_json;
    auto* crd_opt = moments->add_option("--crd", crd_args, "CRD design: N M")->expected(2);
    auto* bern_opt = moments->add_option("--bernoulli", bernoulli_p, "Bernoulli design: p");
    moments->add_option("--n", n_opt, "population size (bernoulli/design)");
    moments->add_option("--design", design_json, "design spec JSON path");
    moments->add_option("--cov", cov, "central moment at 1-4 indices")->expected(1, 4);
    moments->add_option("--raw", raw, "raw moment at 1-4 indices")->expected(1, 4);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            if (er == clustered && partition_out.empty())
                throw std::runtime_error("generate: pick exactly one of --er / --clustered");
            json spec;
            spec["n"] = n;
            spec["gamma"] = gamma_law;
            spec["alpha"] = alpha_law;
            spec["beta"] = beta_law;
            spec["seed"] = seed;
            if (er) {
                spec["type"] = "er";
                spec["edge_prob"] = edge_prob;
            } else if (clustered) {
                spec["type"] = "clustered";
                spec["clusters"] = clusters;
                spec["p_within"] = p_within;
                spec["p_between"] = p_between;
            }
            if (!partition_out.empty() && clusters <= 0)
                throw std::runtime_error("generate: --partition-out requires --clusters");
            return cmd_generate(spec, out_path, graph_csv, partition_out, clusters);
        }
        if (truth->parsed()) {
            if (model_path.empty() && (node_csv.empty() || edge_csv.empty()))
                throw std::runtime_error("truth: pass a model JSON or --node-csv/--edge-csv");
            return cmd_truth(model_path, node_csv, edge_csv);
        }
        if (run->parsed() || verify->parsed())
            return cmd_run(scenario_path, verify->parsed(), strict, out_override, csv_path);
        if (moments->parsed())
            return cmd_moments(crd_opt->count() > 0, crd_args, bernoulli_p, bern_opt->count() > 0,
                               n_opt, design_json, cov, raw);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
