#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "netexp/model_io.hpp"
#include "netexp/scenario.hpp"

using namespace netexp;
using nlohmann::json;
namespace fs = std::filesystem;
using netexp::testing::chain3;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("netexp_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

struct CmdResult {
    int exit_code;
    std::string output;
};

CmdResult run_cli(const std::string& args) {
    const char* bin = std::getenv("NETEXP_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "NETEXP_BIN must point at the command-line binary");
    std::string cmd = std::string(bin) + " " + args + " 2>&1";
    std::FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string output;
    std::array<char, 4096> buf;
    while (std::fgets(buf.data(), buf.size(), pipe)) output += buf.data();
    int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, output};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    out << body;
}

}  // namespace

TEST_CASE("model json round trip") {
    TempDir dir;
    HaneModel m = chain3();
    std::string path = dir.file("m.json");
    save_model(m, path);
    HaneModel loaded = load_model_json(path);
    CHECK(loaded.graph() == m.graph());
    CHECK(loaded.alpha() == m.alpha());
    CHECK(loaded.beta() == m.beta());
}

TEST_CASE("model csv loading") {
    TempDir dir;
    write_file(dir.file("nodes.csv"), "id,alpha,beta\n0,1,1\n2,3,1\n1,2,1\n");
    write_file(dir.file("edges.csv"), "src,dst,gamma\n0,1,2\n1,2,4\n2,0,6\n");
    HaneModel m = load_model_csv(dir.file("nodes.csv"), dir.file("edges.csv"));
    CHECK(m.alpha() == std::vector<double>{1, 2, 3});
    CHECK(true_tte(m) == doctest::Approx(5.0));
    write_file(dir.file("bad.csv"), "id,alpha,beta\n0,1,1\n0,2,1\n");
    CHECK_THROWS(load_model_csv(dir.file("bad.csv"), dir.file("edges.csv")));
}

TEST_CASE("cli generate is deterministic and validates") {
    TempDir dir;
    std::string flags = "generate --er --n 30 --edge-prob 0.2 --gamma normal:0,1 "
                        "--alpha uniform:-1,1 --seed 9 --out " +
                        dir.file("a.json");
    CHECK(run_cli(flags).exit_code == 0);
    std::string first = slurp(dir.file("a.json"));
    CHECK(run_cli(flags).exit_code == 0);
    CHECK(slurp(dir.file("a.json")) == first);  // byte-identical regeneration

    HaneModel m = load_model_json(dir.file("a.json"));  // reloadable
    CHECK(m.n() == 30);

    CmdResult bad = run_cli("generate --er --n 5 --edge-prob 1.5 --out " + dir.file("b.json"));
    CHECK(bad.exit_code == 1);

    // partition output
    CHECK(run_cli("generate --clustered --n 6 --clusters 2 --p-within 1 --p-between 0 "
                  "--gamma constant:1 --out " +
                  dir.file("c.json") + " --partition-out " + dir.file("p.csv"))
              .exit_code == 0);
    Partition part = load_partition(dir.file("p.csv"));
    CHECK(part.cluster_count() == 2);
}

TEST_CASE("cli truth prints the estimands and their identity") {
    TempDir dir;
    save_model(chain3(), dir.file("m.json"));
    CmdResult res = run_cli("truth " + dir.file("m.json"));
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("tte: 5") != std::string::npos);
    CHECK(res.output.find("ate: 1") != std::string::npos);
    CHECK(res.output.find("aie: 4") != std::string::npos);
    CHECK(res.output.find("identity tte = ate + aie: ok") != std::string::npos);
    CHECK(res.output.find("d_max: 1") != std::string::npos);
}

TEST_CASE("cli verify produces a full report for the reference scenario") {
    TempDir dir;
    save_model(chain3(), dir.file("m.json"));
    json scenario = {
        {"model", "m.json"},
        {"design", {{"type", "crd"}, {"treated", 1}}},
        {"estimators",
         {{{"name", "tte_adjusted"}, {"baseline", "population_mean"}}, {{"name", "tte_ht"}}}},
        {"baseline", {{"mode", "exact_population_mean"}}},
        {"verify", true},
        {"output", "report.json"},
    };
    write_file(dir.file("scenario.json"), scenario.dump(2));
    CmdResult res = run_cli("run " + dir.file("scenario.json") + " --strict --csv " +
                            dir.file("report.csv"));
    CHECK(res.exit_code == 0);

    json report = json::parse(slurp(dir.file("report.json")));
    CHECK(report.at("truth").at("tte").get<double>() == doctest::Approx(5.0));
    const json& adj = report.at("estimators").at(0);
    CHECK(adj.at("label") == "tte_adjusted");
    CHECK(adj.at("oracle").at("mean").get<double>() == doctest::Approx(5.0));
    CHECK(adj.at("oracle").at("variance").get<double>() == doctest::Approx(8.0 / 3));
    CHECK(adj.at("analytical").at("variance").get<double>() == doctest::Approx(8.0 / 3));
    CHECK(adj.at("analytical").at("variance_formula") == "sec8_crd");
    const json& ht = report.at("estimators").at(1);
    CHECK(ht.at("analytical").at("bias").get<double>() == doctest::Approx(-6.0));
    CHECK(ht.at("oracle").at("mean").get<double>() == doctest::Approx(-1.0));
    CHECK(report.at("metadata").at("d_max").get<int>() == 1);

    // CSV projection carries one row per estimator.
    std::string csv = slurp(dir.file("report.csv"));
    CHECK(csv.find("tte_adjusted") != std::string::npos);
    CHECK(csv.find("tte_ht") != std::string::npos);

    // The embedded scenario reproduces the run: strip outputs and rerun.
    json embedded = report.at("metadata").at("scenario");
    embedded.erase("output");
    write_file(dir.file("rerun.json"), embedded.dump());
    // model path is relative to the scenario file, already resolved fine here
    Scenario sc = load_scenario(dir.file("rerun.json"));
    RunOutcome second = run_scenario(sc);
    CHECK(second.report.at("estimators").at(0).at("oracle") ==
          report.at("estimators").at(0).at("oracle"));
    CHECK(second.report.at("estimators").at(1).at("analytical") ==
          report.at("estimators").at(1).at("analytical"));
}

TEST_CASE("cli verify surfaces saturation bias analytically") {
    TempDir dir;
    // Two 3-node clusters at saturations 1/3 and 2/3. Node 5 hears from both
    // clusters, so no per-node constant exists and the run falls back to the
    // marginal-scaled form, whose bias the closed form reports: only the
    // cross-cluster edge contributes, (1/2 - 1) * 3 / 6 = -0.25.
    HaneModel cross(InterferenceGraph(6, {{0, 5, 3.0}, {4, 5, 1.0}}), std::vector<double>(6, 0.0),
                    std::vector<double>(6, 0.0));
    save_model(cross, dir.file("m.json"));
    json scenario = {
        {"model", "m.json"},
        {"design",
         {{"type", "saturation"},
          {"partition", {0, 0, 0, 1, 1, 1}},
          {"treated_per_cluster", {1, 2}}}},
        {"estimators", {{{"name", "tte_adjusted"}}}},
        {"verify", true},
        {"output", "report.json"},
    };
    write_file(dir.file("s.json"), scenario.dump());
    CmdResult res = run_cli("verify " + dir.file("s.json") + " --strict");
    CHECK(res.exit_code == 0);
    json report = json::parse(slurp(dir.file("report.json")));
    const json& entry = report.at("estimators").at(0);
    CHECK(entry.at("label").get<std::string>() == "tte_adjusted_marginal");
    CHECK(entry.contains("notes"));
    double bias = entry.at("analytical").at("bias").get<double>();
    CHECK(bias == doctest::Approx(-0.25));
    double oracle_mean = entry.at("oracle").at("mean").get<double>();
    CHECK(oracle_mean - report.at("truth").at("tte").get<double>() == doctest::Approx(bias));

    // A single-in-edge graph keeps a valid per-node constant: the exact form
    // is chosen and stays unbiased even at unequal saturations.
    HaneModel single(InterferenceGraph(6, {{1, 4, 3.0}}), std::vector<double>(6, 0.0),
                     std::vector<double>(6, 0.0));
    save_model(single, dir.file("m2.json"));
    scenario["model"] = "m2.json";
    write_file(dir.file("s2.json"), scenario.dump());
    CHECK(run_cli("verify " + dir.file("s2.json") + " --strict").exit_code == 0);
    json report2 = json::parse(slurp(dir.file("report.json")));
    const json& exact = report2.at("estimators").at(0);
    CHECK(exact.at("label").get<std::string>() == "tte_adjusted");
    CHECK(exact.at("baseline_mode").get<std::string>() == "subtract_individual");
    CHECK(exact.at("analytical").at("bias").get<double>() == doctest::Approx(0.0));
    CHECK(exact.at("oracle").at("mean").get<double>() ==
          doctest::Approx(report2.at("truth").at("tte").get<double>()));
}

TEST_CASE("cli strict mode flags disagreements with exit code 2") {
    TempDir dir;
    save_model(chain3(), dir.file("m.json"));
    json scenario = {
        {"model", "m.json"},
        {"design", {{"type", "crd"}, {"treated", 1}}},
        {"estimators", {{{"name", "tte_adjusted"}}}},
        {"mc", {{"replicates", 50}, {"master_seed", 3}}},
        {"verify", true},
        {"output", "r.json"},
        // an absurdly tight Monte Carlo band forces a flagged check
        {"tolerances", {{"mc_mean_sigmas", 1e-9}}},
    };
    write_file(dir.file("s.json"), scenario.dump());
    CHECK(run_cli("run " + dir.file("s.json") + " --strict").exit_code == 2);
    CHECK(run_cli("run " + dir.file("s.json")).exit_code == 0);  // informative without --strict
    json report = json::parse(slurp(dir.file("r.json")));
    bool found_failed = false;
    for (const auto& c : report.at("estimators").at(0).at("checks"))
        if (!c.at("pass").get<bool>()) found_failed = true;
    CHECK(found_failed);
}

TEST_CASE("cli run without verification omits oracle fields") {
    TempDir dir;
    json scenario = {
        {"model",
         {{"type", "er"}, {"n", 40}, {"edge_prob", 0.1}, {"gamma", "uniform:0,1"}, {"seed", 4}}},
        {"design", {{"type", "crd"}, {"treated", 10}}},
        {"estimators", {{{"name", "tte_adjusted"}}, {{"name", "difference_in_means"}}}},
        {"mc", {{"replicates", 2000}, {"master_seed", 11}}},
        {"output", "r.json"},
    };
    write_file(dir.file("s.json"), scenario.dump());
    CHECK(run_cli("run " + dir.file("s.json")).exit_code == 0);
    json report = json::parse(slurp(dir.file("r.json")));
    for (const auto& e : report.at("estimators")) {
        CHECK_FALSE(e.contains("oracle"));
        CHECK(e.contains("mc"));
    }
}

TEST_CASE("cli moments compares the two channels") {
    CmdResult crd = run_cli("moments --crd 4 2 --cov 0 1");
    CHECK(crd.exit_code == 0);
    CHECK(crd.output.find("-0.0833333333333333") != std::string::npos);
    CHECK(crd.output.find("closed-form") != std::string::npos);
    CHECK(crd.output.find("enumeration") != std::string::npos);

    CmdResult triple = run_cli("moments --crd 4 2 --cov 0 1 2");
    CHECK(triple.exit_code == 0);
    CHECK(triple.output.find("-0.0833333333333333") != std::string::npos);

    CmdResult bern = run_cli("moments --bernoulli 0.5 --n 3 --cov 0 1");
    CHECK(bern.exit_code == 0);
    CHECK(bern.output.find("closed-form:  0") != std::string::npos);

    CHECK(run_cli("moments --crd 4 2").exit_code == 1);        // no indices
    CHECK(run_cli("moments --cov 0 1").exit_code == 1);        // no design
    CHECK(run_cli("moments --crd 4 2 --cov 0 9").exit_code == 1);
}

TEST_CASE("scenario loading validates") {
    TempDir dir;
    save_model(chain3(), dir.file("m.json"));
    json no_channel = {
        {"model", "m.json"},
        {"design", {{"type", "crd"}, {"treated", 1}}},
        {"estimators", {{{"name", "tte_adjusted"}}}},
    };
    write_file(dir.file("s.json"), no_channel.dump());
    CHECK_THROWS(load_scenario(dir.file("s.json")));

    json no_estimators = {
        {"model", "m.json"},
        {"design", {{"type", "crd"}, {"treated", 1}}},
        {"estimators", json::array()},
        {"verify", true},
    };
    write_file(dir.file("s2.json"), no_estimators.dump());
    CHECK_THROWS(load_scenario(dir.file("s2.json")));

    json unknown_est = {
        {"model", "m.json"},
        {"design", {{"type", "crd"}, {"treated", 1}}},
        {"estimators", {{{"name", "mystery"}}}},
        {"verify", true},
    };
    write_file(dir.file("s3.json"), unknown_est.dump());
    Scenario sc = load_scenario(dir.file("s3.json"));
    CHECK_THROWS(run_scenario(sc));
}

TEST_CASE("population-mean baseline request is refused under unequal marginals") {
    TempDir dir;
    HaneModel cross(InterferenceGraph(6, {{1, 4, 3.0}}), std::vector<double>(6, 0.0),
                    std::vector<double>(6, 0.0));
    save_model(cross, dir.file("m.json"));
    json scenario = {
        {"model", "m.json"},
        {"design",
         {{"type", "saturation"},
          {"partition", {0, 0, 0, 1, 1, 1}},
          {"treated_per_cluster", {1, 2}}}},
        {"estimators", {{{"name", "tte_adjusted"}, {"baseline", "population_mean"}}}},
        {"verify", true},
    };
    write_file(dir.file("s.json"), scenario.dump());
    Scenario sc = load_scenario(dir.file("s.json"));
    CHECK_THROWS(run_scenario(sc));
}

TEST_CASE("survey and noisy baselines propagate as given constants") {
    HaneModel m = chain3();
    Design d = Design::crd(3, 1);
    SymmetryReport rep = check_symmetry(d, m.graph());
    WeightedLinearEstimator adj = tte_adjusted(d, rep);

    // A survey fixes one pre-experiment estimate of the mean baseline; the
    // whole run then shifts by (true mean - estimate) / p.
    json spec = {{"mode", "survey"}, {"sample_size", 2}, {"seed", 9}};
    BaselineInfo survey = baseline_from_spec(spec, m);
    double alpha_bar = 2.0, p = 1.0 / 3.0;
    double shift = (alpha_bar - survey.population_mean()) / p;
    ExactMoments mom = exact_estimator_moments(m, adj, d, survey);
    CHECK(mom.mean == doctest::Approx(5.0 + shift));
    // Variance is unchanged: the estimate is only shifted by a constant.
    CHECK(mom.variance == doctest::Approx(8.0 / 3.0));

    // Noisy per-node estimates behave the same way through the individual path.
    json noisy_spec = {{"mode", "noisy"}, {"sd", 0.5}, {"seed", 4}};
    BaselineInfo noisy = baseline_from_spec(noisy_spec, m);
    CHECK(noisy.has_individual());
    WeightedLinearEstimator marginal_form = tte_adjusted_marginal(d);
    ExactMoments noisy_mom = exact_estimator_moments(m, marginal_form, d, noisy);
    // w_i = v_i = 1/(n p): each node's baseline error enters with weight 1/(n p).
    double expected_shift = 0.0;
    for (int i = 0; i < 3; ++i)
        expected_shift += (m.alpha()[i] - noisy.individual()[i]) * (1.0 / (3 * p));
    CHECK(noisy_mom.mean == doctest::Approx(5.0 + expected_shift));
}
