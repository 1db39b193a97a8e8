#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fitolab/errors.hpp"
#include "fitolab/experiment.hpp"

using namespace fitolab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("fitolab-test-" + name);
    fs::remove_all(dir);
    return dir;
}

std::string base_config(const std::string& kind, const std::string& extra = "") {
    return R"({
        "version": 1,
        "kind": ")" + kind + R"(",
        "functional": {"id": "quadratic"},
        "horizon": 1.0,
        "steps": 128,
        "scenarios": 500,
        "seed": 7101)" + extra + "\n}";
}

}  // namespace

TEST_CASE("config parsing enforces the schema") {
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
    CHECK_THROWS_AS(parse_config("[1,2]"), ConfigError);
    CHECK_THROWS_AS(parse_config(base_config("represent", R"(, "typo_key": 1)")), ConfigError);
    CHECK_THROWS_AS(parse_config(base_config("nonsense-kind")), ConfigError);

    // missing required fields
    CHECK_THROWS_AS(parse_config(R"({"version": 1, "kind": "represent"})"), ConfigError);
    // version pinning
    CHECK_THROWS_AS(parse_config(R"({"version": 2, "kind": "represent",
        "functional": {"id": "linear"}, "horizon": 1.0, "steps": 16,
        "scenarios": 1, "seed": 1})"), ConfigError);

    // steps must be >= 2, scenarios >= 1
    CHECK_THROWS_AS(parse_config(base_config("represent").replace(
                        base_config("represent").find("128"), 3, "1")),
                    ConfigError);

    // kind-specific keys are rejected elsewhere
    CHECK_THROWS_AS(parse_config(base_config("represent", R"(, "levels": [1, 2])")), ConfigError);
    CHECK_THROWS_AS(parse_config(base_config("represent", R"(, "theta": "unbounded")")),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_config(base_config("derive", R"(, "functional2": {"id": "linear"})")), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({
        "version": 1, "kind": "localize", "functional": {"id": "quadratic"},
        "horizon": 1.0, "steps": [64, 128], "scenarios": 10, "seed": 1})"),
                    ConfigError);

    // pairing needs a partner
    CHECK_THROWS_AS(parse_config(base_config("pairing")), ConfigError);

    const auto cfg = parse_config(base_config("represent", R"(, "scheme": "one-sided")"));
    CHECK(cfg.kind == ExperimentKind::Represent);
    CHECK(cfg.scheme == FdScheme::OneSided);
    CHECK(cfg.steps == std::vector<std::size_t>{128});
    CHECK(cfg.seed == 7101);
}

TEST_CASE("canonical config serialization is stable") {
    const auto cfg = parse_config(base_config("represent"));
    const std::string once = canonical_config_json(cfg);
    const std::string twice = canonical_config_json(parse_config(once));
    CHECK(once == twice);
}

TEST_CASE("represent run writes deterministic artifacts") {
    auto cfg = parse_config(R"({
        "version": 1, "kind": "represent",
        "functional": {"id": "quadratic"},
        "horizon": 1.0, "steps": [64, 128], "scenarios": 400, "seed": 52
    })");
    const fs::path dir = fresh_dir("represent");

    RunOptions opts;
    opts.out_dir = dir.string();
    opts.threads = 1;
    const RunResult first = run_experiment(cfg, opts);
    CHECK(fs::exists(dir / "config.json"));
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "residual_rms_N64.csv"));
    CHECK(fs::exists(dir / "residual_rms_N128.csv"));

    const std::string report_1 = slurp(dir / "report.json");
    const std::string csv_1 = slurp(dir / "residual_rms_N128.csv");

    // rerunning into the same directory needs --force
    CHECK_THROWS_AS(run_experiment(cfg, opts), IoError);

    // byte-identical artifacts with a different worker count
    opts.force = true;
    opts.threads = 2;
    run_experiment(cfg, opts);
    CHECK(slurp(dir / "report.json") == report_1);
    CHECK(slurp(dir / "residual_rms_N128.csv") == csv_1);

    // a seed override changes the artifacts and is echoed
    opts.seed = 53;
    run_experiment(cfg, opts);
    CHECK(slurp(dir / "report.json") != report_1);
    CHECK(json::parse(slurp(dir / "config.json"))["seed"] == 53);

    const json report = json::parse(report_1);
    CHECK(report["kind"] == "represent");
    const auto& grids = report["results"]["grids"];
    REQUIRE(grids.size() == 2);
    CHECK(grids[0]["steps"] == 64);
    CHECK(grids[0]["terminal_rms"].contains("se"));
    const double slope = report["results"]["slope_terminal_rms_vs_dt"]["value"].get<double>();
    CHECK(slope > 0.2);
    CHECK(slope < 0.8);
    fs::remove_all(dir);
}

TEST_CASE("localize run reports fractions and theta independence") {
    const auto cfg = parse_config(R"({
        "version": 1, "kind": "localize",
        "functional": {"id": "quadratic"},
        "horizon": 1.0, "steps": 128, "scenarios": 400, "seed": 31,
        "levels": [2, 4, 8, 16], "theta": "unbounded", "theta_b": "wiener-hitting"
    })");
    const fs::path dir = fresh_dir("localize");
    RunOptions opts;
    opts.out_dir = dir.string();
    run_experiment(cfg, opts);

    const json report = json::parse(slurp(dir / "report.json"));
    CHECK(report["results"]["fractions_non_decreasing"] == true);
    CHECK(report["results"]["theta_independence"]["pass"] == true);
    const std::string csv = slurp(dir / "ladder.csv");
    CHECK(csv.rfind("level,tau_mean,stab_fraction\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 4 levels
    fs::remove_all(dir);
}

TEST_CASE("pairing run agrees within three standard errors") {
    const auto cfg = parse_config(R"({
        "version": 1, "kind": "pairing",
        "functional": {"id": "linear"},
        "functional2": {"id": "conditional-square"},
        "horizon": 1.0, "steps": 128, "scenarios": 4000, "seed": 61
    })");
    const fs::path dir = fresh_dir("pairing");
    RunOptions opts;
    opts.out_dir = dir.string();
    run_experiment(cfg, opts);
    const json report = json::parse(slurp(dir / "report.json"));
    CHECK(report["results"]["agree_within_3se"] == true);
    CHECK(report["results"]["lhs"].contains("se"));
    fs::remove_all(dir);
}

TEST_CASE("strict-local run carries the reference band check") {
    const auto cfg = parse_config(R"({
        "version": 1, "kind": "strict-local",
        "functional": {"id": "inverse-bessel"},
        "horizon": 1.0, "steps": 256, "scenarios": 4000, "seed": 71,
        "levels": [2, 4, 8]
    })");
    const fs::path dir = fresh_dir("strict-local");
    RunOptions opts;
    opts.out_dir = dir.string();
    run_experiment(cfg, opts);
    const json report = json::parse(slurp(dir / "report.json"));
    const auto& results = report["results"];
    CHECK(results["terminal_reference"]["value"].get<double>() ==
          doctest::Approx(0.6826894921370859));
    CHECK(results["terminal_within_3se_of_reference"] == true);
    CHECK(results["sigmas_below_initial"]["value"].get<double>() > 10.0);
    CHECK(results["levels"].size() == 3);
    CHECK(slurp(dir / "levels.csv").rfind("level,tau_mean,stopped_mean,se,excluded\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("hedge run: exact for the linear claim, first-order for the drift claim") {
    const fs::path dir = fresh_dir("hedge");
    RunOptions opts;
    opts.out_dir = dir.string();

    {
        const auto cfg = parse_config(R"({
            "version": 1, "kind": "hedge",
            "functional": {"id": "linear"},
            "horizon": 1.0, "steps": 64, "scenarios": 200, "seed": 81
        })");
        run_experiment(cfg, opts);
        const json report = json::parse(slurp(dir / "report.json"));
        CHECK(report["results"]["grids"][0]["replication_error_rms"]["value"].get<double>() ==
              0.0);
        const std::string csv = slurp(dir / "hedge_paths.csv");
        CHECK(csv.rfind("t,hedge_mean,hedge_s0", 0) == 0);
    }

    {
        // claim integral_0^T W ds through its conditional-expectation price,
        // hedge T - t: replication error shrinks at first order in dt
        const auto cfg = parse_config(R"({
            "version": 1, "kind": "hedge",
            "functional": {"id": "anticipated-average"},
            "horizon": 1.0, "steps": [64, 128, 256], "scenarios": 400, "seed": 82
        })");
        opts.force = true;
        run_experiment(cfg, opts);
        const json report = json::parse(slurp(dir / "report.json"));
        CHECK(report["results"]["slope_replication_rms_vs_dt"]["value"].get<double>() >= 0.9);
    }
    fs::remove_all(dir);

    const auto bad = parse_config(base_config("represent"));
    CHECK_THROWS_AS(hedge_demo(bad, opts), ConfigError);
}

TEST_CASE("derive run emits the sample table") {
    const auto cfg = parse_config(R"({
        "version": 1, "kind": "derive",
        "functional": {"id": "exponential"},
        "horizon": 1.0, "steps": 64, "scenarios": 8, "seed": 91
    })");
    const fs::path dir = fresh_dir("derive");
    RunOptions opts;
    opts.out_dir = dir.string();
    run_experiment(cfg, opts);
    const json report = json::parse(slurp(dir / "report.json"));
    CHECK(report["results"]["max_abs_error_vertical"]["value"].get<double>() <= 1e-6);
    CHECK(report["results"]["max_abs_error_horizontal"]["value"].get<double>() <= 1e-6);
    const std::string csv = slurp(dir / "derivatives.csv");
    CHECK(csv.rfind("scenario,k,t,horizontal_fd,horizontal_oracle,v1_fd,v1_oracle\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("an experiment with no usable scenarios fails numerically") {
    // an anchor inside the singular guard makes every scenario fail at k = 0
    const auto cfg = parse_config(R"({
        "version": 1, "kind": "strict-local",
        "functional": {"id": "inverse-bessel", "params": [1e-7, 0.0, 0.0]},
        "horizon": 1.0, "steps": 16, "scenarios": 10, "seed": 3
    })");
    const fs::path dir = fresh_dir("numeric-fail");
    RunOptions opts;
    opts.out_dir = dir.string();
    CHECK_THROWS_AS(run_experiment(cfg, opts), NumericError);
    fs::remove_all(dir);
}

TEST_CASE("missing output directory is a config error") {
    const auto cfg = parse_config(base_config("represent"));
    CHECK_THROWS_AS(run_experiment(cfg, RunOptions{}), ConfigError);
}

TEST_CASE("an unknown catalog id surfaces as a config error at run time") {
    const auto cfg = parse_config(R"({
        "version": 1, "kind": "represent", "functional": {"id": "mystery"},
        "horizon": 1.0, "steps": 32, "scenarios": 10, "seed": 1})");
    RunOptions opts;
    opts.out_dir = (fs::temp_directory_path() / "fitolab-test-unknown-id").string();
    CHECK_THROWS_AS(run_experiment(cfg, opts), ConfigError);
    fs::remove_all(opts.out_dir);
}

TEST_CASE("represent run on the identity functional reports zero residuals") {
    const auto cfg = parse_config(R"({
        "version": 1, "kind": "represent", "functional": {"id": "linear"},
        "horizon": 1.0, "steps": 64, "scenarios": 100, "seed": 5})");
    const fs::path dir = fresh_dir("represent-linear");
    RunOptions opts;
    opts.out_dir = dir.string();
    run_experiment(cfg, opts);
    const json report = json::parse(slurp(dir / "report.json"));
    CHECK(report["results"]["grids"][0]["terminal_rms"]["value"].get<double>() == 0.0);
    CHECK(report["results"]["grids"][0]["sup_p99"]["value"].get<double>() == 0.0);
    // every per-t rms row is exactly zero
    std::stringstream csv(slurp(dir / "residual_rms_N64.csv"));
    std::string line;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
        const auto first = line.find(',');
        const auto second = line.find(',', first + 1);
        CHECK(line.substr(first + 1, second - first - 1) == "0");
    }
    fs::remove_all(dir);
}

TEST_CASE("hedging the squared-terminal claim reproduces the discretization error law") {
    // conditional-square is the price of the W(T)^2 claim, hedge 2 W(t);
    // the replication error is the quadratic reconstruction residual
    const auto cfg = parse_config(R"({
        "version": 1, "kind": "hedge", "functional": {"id": "conditional-square"},
        "horizon": 1.0, "steps": 1024, "scenarios": 2000, "seed": 84})");
    const fs::path dir = fresh_dir("hedge-square");
    RunOptions opts;
    opts.out_dir = dir.string();
    run_experiment(cfg, opts);
    const json report = json::parse(slurp(dir / "report.json"));
    const double rms =
        report["results"]["grids"][0]["replication_error_rms"]["value"].get<double>();
    const double expected = std::sqrt(2.0 / 1024.0);
    CHECK(rms == doctest::Approx(expected).epsilon(0.20));
    fs::remove_all(dir);
}
