#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fitolab/functional.hpp"

namespace fitolab {

enum class ExperimentKind { Derive, Represent, Localize, Pairing, ItoCheck, StrictLocal, Hedge };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct FunctionalRef {
    std::string id;
    std::vector<double> params;
};

/// One experiment run, as loaded from a JSON config (versioned schema,
/// unknown keys rejected). `steps` may hold a ladder of grid sizes for the
/// convergence experiments (represent, ito-check, hedge).
struct ExperimentConfig {
    int version = 1;
    ExperimentKind kind = ExperimentKind::Represent;
    FunctionalRef functional;
    std::optional<FunctionalRef> functional2;  // pairing partner
    double horizon = 1.0;
    std::vector<std::size_t> steps;
    std::size_t scenarios = 0;
    std::uint64_t seed = 0;
    double bump = 0.0;       // 0 = adaptive default
    double time_bump = 1e-6;
    FdScheme scheme = FdScheme::Central;
    std::vector<double> levels;              // localize / strict-local ladder levels
    std::string theta = "unbounded";
    std::optional<std::string> theta_b;      // second rule: adds the independence check
    std::string output;                      // default artifact directory
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::filesystem::path& file);

/// Canonical serialization used for the config.json echo; a fixed key order
/// and number format keep reruns byte-identical.
std::string canonical_config_json(const ExperimentConfig& config);

struct RunOptions {
    std::string out_dir;   // overrides config.output when non-empty
    bool force = false;    // allow writing into a non-empty directory
    std::size_t threads = 0;
    std::optional<std::uint64_t> seed;  // overrides config.seed
};

struct RunResult {
    std::filesystem::path dir;
    std::string report_json;
};

/// Runs the experiment and writes config.json, report.json and the
/// kind-specific CSV tables into the output directory. Artifacts are
/// byte-identical for a fixed (config, seed) whatever the worker count.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Hedging demo: the functional is read as the price process of its
/// terminal claim, the vertical-derivative rows as the hedge ratios.
RunResult hedge_demo(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace fitolab
