#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "netexp/analysis.hpp"
#include "netexp/montecarlo.hpp"
#include "netexp/oracle.hpp"

namespace netexp {

/// Tolerances applied when two channels report the same quantity.
struct Tolerances {
    double mean_abs = 1e-9;       // oracle vs analytical mean
    double variance_rel = 1e-8;   // oracle vs analytical variance, relative
    double mc_mean_sigmas = 5.0;  // Monte Carlo mean vs reference, in stderr units
};

/// A fully resolved batch scenario: model, design, estimator list, baseline
/// data, and the verification channels to run.
struct Scenario {
    nlohmann::json raw;  // as loaded; embedded in the report for reruns
    HaneModel model;
    Design design;
    std::vector<nlohmann::json> estimator_specs;
    BaselineInfo baseline;
    std::optional<McConfig> mc;
    bool verify = false;
    Tolerances tol;
    std::string output_path;
    std::optional<std::uint64_t> model_seed, baseline_seed;
};

HaneModel model_from_spec(const nlohmann::json& spec, const std::filesystem::path& base_dir,
                          std::optional<std::uint64_t>* seed_out = nullptr);
Partition partition_from_spec(const nlohmann::json& spec, const std::filesystem::path& base_dir);
Design design_from_spec(const nlohmann::json& spec, int n, const std::filesystem::path& base_dir);
BaselineInfo baseline_from_spec(const nlohmann::json& spec, const HaneModel& model,
                                std::optional<std::uint64_t>* seed_out = nullptr);

struct BuiltEstimator {
    WeightedLinearEstimator est;
    std::string requested;
    std::string target;  // "tte" | "ate" | "aie" | "" (none)
    std::vector<std::string> notes;
};
BuiltEstimator estimator_from_spec(const nlohmann::json& spec, const Design& d,
                                   const SymmetryReport& report);

Scenario load_scenario(const std::string& path);

struct RunOutcome {
    nlohmann::json report;
    bool any_check_failed = false;
};

/// Runs the analytical channel plus the requested oracle/Monte Carlo
/// channels for every estimator and assembles the report. Disagreements
/// beyond tolerance are recorded as failed checks, never dropped.
RunOutcome run_scenario(const Scenario& sc);

/// Flat one-row-per-estimator projection of a report, for spreadsheets.
std::string report_to_csv(const nlohmann::json& report);

}  // namespace netexp
