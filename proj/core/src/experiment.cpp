#include "fitolab/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fitolab/catalog.hpp"
#include "fitolab/derivatives.hpp"
#include "fitolab/errors.hpp"
#include "fitolab/localization.hpp"
#include "fitolab/parallel.hpp"
#include "fitolab/process.hpp"
#include "fitolab/representation.hpp"
#include "fitolab/statistics.hpp"
#include "fitolab/wiener.hpp"

namespace fitolab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kLabVersion = "0.1.0";

// ---------------------------------------------------------------------------
// config schema
// ---------------------------------------------------------------------------

const std::set<std::string>& top_level_keys() {
    static const std::set<std::string> keys = {
        "version", "kind",   "functional", "functional2", "horizon", "steps",
        "scenarios", "seed", "bump",       "time_bump",   "scheme",  "levels",
        "theta",     "theta_b", "output"};
    return keys;
}

[[noreturn]] void config_fail(const std::string& message) { throw ConfigError(message); }

void reject_unknown_keys(const json& object, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = object.begin(); it != object.end(); ++it) {
        if (!allowed.count(it.key())) {
            config_fail("unknown config key '" + it.key() + "' in " + where);
        }
    }
}

FunctionalRef parse_functional_ref(const json& node, const std::string& where) {
    if (!node.is_object()) config_fail(where + " must be an object {id, params}");
    reject_unknown_keys(node, {"id", "params"}, where);
    FunctionalRef ref;
    if (!node.contains("id") || !node["id"].is_string()) {
        config_fail(where + " needs a string 'id'");
    }
    ref.id = node["id"].get<std::string>();
    if (node.contains("params")) {
        if (!node["params"].is_array()) config_fail(where + ".params must be an array");
        for (const auto& v : node["params"]) {
            if (!v.is_number()) config_fail(where + ".params must hold numbers");
            ref.params.push_back(v.get<double>());
        }
    }
    return ref;
}

std::vector<std::size_t> parse_steps(const json& node) {
    std::vector<std::size_t> steps;
    auto read_one = [](const json& v) -> std::size_t {
        if (!v.is_number_unsigned() && !v.is_number_integer()) {
            config_fail("'steps' must hold positive integers");
        }
        const auto n = v.get<long long>();
        if (n < 2) config_fail("'steps' entries must be >= 2");
        return static_cast<std::size_t>(n);
    };
    if (node.is_array()) {
        if (node.empty()) config_fail("'steps' array must not be empty");
        for (const auto& v : node) steps.push_back(read_one(v));
        for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
            if (steps[i + 1] <= steps[i]) {
                config_fail("'steps' ladder must be strictly increasing");
            }
        }
    } else {
        steps.push_back(read_one(node));
    }
    return steps;
}

void validate_kind_keys(const ExperimentKind kind, const json& object) {
    auto forbid = [&](const char* key, const std::string& why) {
        if (object.contains(key)) {
            config_fail(std::string("config key '") + key + "' is not used by kind '" +
                        to_string(kind) + "' (" + why + ")");
        }
    };
    const bool ladder_ok = kind == ExperimentKind::Represent ||
                           kind == ExperimentKind::ItoCheck || kind == ExperimentKind::Hedge;
    if (!ladder_ok && object.contains("steps") && object["steps"].is_array() &&
        object["steps"].size() > 1) {
        config_fail("kind '" + to_string(kind) + "' takes a single 'steps' value");
    }
    if (kind != ExperimentKind::Pairing) forbid("functional2", "only pairing takes a partner");
    if (kind != ExperimentKind::Localize && kind != ExperimentKind::StrictLocal) {
        forbid("levels", "only localize and strict-local use a level ladder");
    }
    if (kind != ExperimentKind::Localize) {
        forbid("theta", "only localize plugs theta rules");
        forbid("theta_b", "only localize plugs theta rules");
    }
}

}  // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Derive: return "derive";
        case ExperimentKind::Represent: return "represent";
        case ExperimentKind::Localize: return "localize";
        case ExperimentKind::Pairing: return "pairing";
        case ExperimentKind::ItoCheck: return "ito-check";
        case ExperimentKind::StrictLocal: return "strict-local";
        case ExperimentKind::Hedge: return "hedge";
    }
    return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
    if (name == "derive") return ExperimentKind::Derive;
    if (name == "represent") return ExperimentKind::Represent;
    if (name == "localize") return ExperimentKind::Localize;
    if (name == "pairing") return ExperimentKind::Pairing;
    if (name == "ito-check") return ExperimentKind::ItoCheck;
    if (name == "strict-local") return ExperimentKind::StrictLocal;
    if (name == "hedge") return ExperimentKind::Hedge;
    config_fail("unknown experiment kind '" + name + "'");
}

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        config_fail(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) config_fail("config root must be a JSON object");
    reject_unknown_keys(root, top_level_keys(), "config");

    ExperimentConfig cfg;
    if (!root.contains("version") || !root["version"].is_number_integer()) {
        config_fail("config needs an integer 'version'");
    }
    cfg.version = root["version"].get<int>();
    if (cfg.version != 1) config_fail("unsupported config version (expected 1)");

    if (!root.contains("kind") || !root["kind"].is_string()) {
        config_fail("config needs a string 'kind'");
    }
    cfg.kind = experiment_kind_from_string(root["kind"].get<std::string>());
    validate_kind_keys(cfg.kind, root);

    if (!root.contains("functional")) config_fail("config needs 'functional'");
    cfg.functional = parse_functional_ref(root["functional"], "functional");
    if (root.contains("functional2")) {
        cfg.functional2 = parse_functional_ref(root["functional2"], "functional2");
    }
    if (cfg.kind == ExperimentKind::Pairing && !cfg.functional2) {
        config_fail("pairing needs 'functional2'");
    }

    if (!root.contains("horizon") || !root["horizon"].is_number()) {
        config_fail("config needs a numeric 'horizon'");
    }
    cfg.horizon = root["horizon"].get<double>();
    if (!(cfg.horizon > 0.0)) config_fail("'horizon' must be positive");

    if (!root.contains("steps")) config_fail("config needs 'steps'");
    cfg.steps = parse_steps(root["steps"]);

    if (!root.contains("scenarios") || !root["scenarios"].is_number_integer()) {
        config_fail("config needs an integer 'scenarios'");
    }
    const auto scenarios = root["scenarios"].get<long long>();
    if (scenarios < 1) config_fail("'scenarios' must be >= 1");
    cfg.scenarios = static_cast<std::size_t>(scenarios);

    if (!root.contains("seed") || !root["seed"].is_number_integer()) {
        config_fail("config needs an integer 'seed'");
    }
    cfg.seed = root["seed"].get<std::uint64_t>();

    if (root.contains("bump")) {
        if (!root["bump"].is_number()) config_fail("'bump' must be numeric");
        cfg.bump = root["bump"].get<double>();
        if (cfg.bump < 0.0) config_fail("'bump' must be >= 0 (0 selects the adaptive default)");
    }
    if (root.contains("time_bump")) {
        if (!root["time_bump"].is_number()) config_fail("'time_bump' must be numeric");
        cfg.time_bump = root["time_bump"].get<double>();
        if (!(cfg.time_bump > 0.0)) config_fail("'time_bump' must be positive");
    }
    if (root.contains("scheme")) {
        const std::string scheme = root["scheme"].get<std::string>();
        if (scheme == "central") cfg.scheme = FdScheme::Central;
        else if (scheme == "one-sided") cfg.scheme = FdScheme::OneSided;
        else config_fail("'scheme' must be 'central' or 'one-sided'");
    }
    if (root.contains("levels")) {
        if (!root["levels"].is_array() || root["levels"].empty()) {
            config_fail("'levels' must be a non-empty array");
        }
        for (const auto& v : root["levels"]) {
            if (!v.is_number()) config_fail("'levels' must hold numbers");
            cfg.levels.push_back(v.get<double>());
        }
        for (std::size_t i = 0; i + 1 < cfg.levels.size(); ++i) {
            if (!(cfg.levels[i] < cfg.levels[i + 1])) {
                config_fail("'levels' must be strictly increasing");
            }
        }
        if (!(cfg.levels.front() > 0.0)) config_fail("'levels' must be positive");
    }
    if (root.contains("theta")) cfg.theta = root["theta"].get<std::string>();
    if (root.contains("theta_b")) cfg.theta_b = root["theta_b"].get<std::string>();
    if (root.contains("output")) cfg.output = root["output"].get<std::string>();
    return cfg;
}

ExperimentConfig load_config_file(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read config file '" + file.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string canonical_config_json(const ExperimentConfig& config) {
    json root;  // nlohmann objects keep keys sorted: canonical by construction
    root["version"] = config.version;
    root["kind"] = to_string(config.kind);
    root["functional"] = {{"id", config.functional.id}, {"params", config.functional.params}};
    if (config.functional2) {
        root["functional2"] = {{"id", config.functional2->id},
                               {"params", config.functional2->params}};
    }
    root["horizon"] = config.horizon;
    root["steps"] = config.steps;
    root["scenarios"] = config.scenarios;
    root["seed"] = config.seed;
    root["bump"] = config.bump;
    root["time_bump"] = config.time_bump;
    root["scheme"] = config.scheme == FdScheme::Central ? "central" : "one-sided";
    if (!config.levels.empty()) root["levels"] = config.levels;
    if (config.kind == ExperimentKind::Localize) {
        root["theta"] = config.theta;
        if (config.theta_b) root["theta_b"] = *config.theta_b;
    }
    if (!config.output.empty()) root["output"] = config.output;
    return root.dump(2) + "\n";
}

namespace {

// ---------------------------------------------------------------------------
// artifact plumbing
// ---------------------------------------------------------------------------

void format_double(std::string& out, double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    out.append(buf, res.ptr);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        if (!out) throw IoError("failed while writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move artifact into place: " + path.string());
}

fs::path prepare_out_dir(const ExperimentConfig& config, const RunOptions& options) {
    const std::string dir_name = !options.out_dir.empty() ? options.out_dir : config.output;
    if (dir_name.empty()) {
        config_fail("no output directory: set 'output' in the config or pass --out");
    }
    const fs::path dir(dir_name);
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!fs::is_directory(dir, ec)) {
            throw IoError("output path '" + dir.string() + "' exists and is not a directory");
        }
        if (!fs::is_empty(dir, ec) && !options.force) {
            throw IoError("output directory '" + dir.string() +
                          "' is not empty; pass --force to overwrite");
        }
    } else {
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");
    }
    return dir;
}

json stat(double value, double se) { return json{{"value", value}, {"se", se}}; }
json exact_stat(double value) { return json{{"value", value}, {"exact", true}}; }

void require_usable(std::size_t scenarios_used, const char* what) {
    if (scenarios_used == 0) {
        throw NumericError(std::string("no usable scenarios for ") + what +
                           ": every path hit a singular failure");
    }
}

struct Context {
    ExperimentConfig config;  // effective (seed already resolved)
    FdOptions fd;
    std::size_t threads = 0;
};

FunctionalSpec functional_from_ref(const FunctionalRef& ref) {
    try {
        return make_functional(ref.id, ref.params);
    } catch (const std::invalid_argument& e) {
        config_fail(e.what());
    }
}

WienerBatch batch_for(const Context& ctx, std::size_t steps, std::size_t dim) {
    return WienerBatch(make_uniform_grid(ctx.config.horizon, steps), dim,
                       ctx.config.scenarios, ctx.config.seed);
}

// ---------------------------------------------------------------------------
// per-kind runners: each returns the report 'results' object and writes its
// CSV companions into dir
// ---------------------------------------------------------------------------

json run_derive(const Context& ctx, const fs::path& dir) {
    const FunctionalSpec f = functional_from_ref(ctx.config.functional);
    const std::size_t n = ctx.config.steps.front();
    const WienerBatch batch = batch_for(ctx, n, f.dim);
    const std::size_t d = f.dim;
    const std::size_t sample_scenarios = std::min<std::size_t>(4, batch.scenarios());
    const std::size_t stride = std::max<std::size_t>(1, n / 32);

    std::string csv = "scenario,k,t,horizontal_fd";
    if (f.oracle_horizontal) csv += ",horizontal_oracle";
    for (std::size_t i = 1; i <= d; ++i) {
        csv += ",v" + std::to_string(i) + "_fd";
        if (f.oracle_vertical) csv += ",v" + std::to_string(i) + "_oracle";
    }
    csv += "\n";

    double max_err_vertical = 0.0;
    double max_err_horizontal = 0.0;
    std::vector<double> oracle(d);
    for (std::size_t p = 0; p < sample_scenarios; ++p) {
        const Path path = batch.path(p);
        for (std::size_t k = 0; k < n; k += stride) {
            const DerivativeSample s =
                sample_derivatives(f, path.view(), k, ctx.fd, /*with_second=*/false);
            csv += std::to_string(p) + "," + std::to_string(k) + ",";
            format_double(csv, batch.grid()[k]);
            csv += ",";
            format_double(csv, s.horizontal);
            if (f.oracle_horizontal) {
                const double oh = f.oracle_horizontal(path.view(), k);
                csv += ",";
                format_double(csv, oh);
                max_err_horizontal = std::max(max_err_horizontal, std::abs(s.horizontal - oh));
            }
            if (f.oracle_vertical) f.oracle_vertical(path.view(), k, oracle);
            for (std::size_t i = 0; i < d; ++i) {
                csv += ",";
                format_double(csv, s.vertical[i]);
                if (f.oracle_vertical) {
                    csv += ",";
                    format_double(csv, oracle[i]);
                    max_err_vertical =
                        std::max(max_err_vertical, std::abs(s.vertical[i] - oracle[i]));
                }
            }
            csv += "\n";
        }
    }
    write_file_atomic(dir / "derivatives.csv", csv);

    json results;
    results["sampled_scenarios"] = sample_scenarios;
    results["grid_stride"] = stride;
    if (f.has_oracles()) {
        results["max_abs_error_vertical"] = exact_stat(max_err_vertical);
        results["max_abs_error_horizontal"] = exact_stat(max_err_horizontal);
    }
    return results;
}

json grid_report(const ResidualReport& r) {
    json g;
    g["terminal_rms"] = stat(r.terminal_rms, r.terminal_rms_se);
    g["terminal_mean"] = stat(r.terminal_mean, r.terminal_mean_se);
    g["sup_p50"] = stat(r.sup_p50, r.sup_p50_se);
    g["sup_p90"] = stat(r.sup_p90, r.sup_p90_se);
    g["sup_p99"] = stat(r.sup_p99, r.sup_p99_se);
    g["scenarios_used"] = r.scenarios_used;
    g["singular"] = r.singular_count;
    return g;
}

json run_represent(const Context& ctx, const fs::path& dir) {
    const FunctionalSpec f = functional_from_ref(ctx.config.functional);
    json grids = json::array();
    std::vector<double> dts, rmss;
    for (const std::size_t n : ctx.config.steps) {
        const WienerBatch batch = batch_for(ctx, n, f.dim);
        const ResidualReport r = representation_residual(f, batch, ctx.fd, ctx.threads);
        require_usable(r.scenarios_used, "represent");

        std::string csv = "t,rms,se\n";
        for (std::size_t k = 0; k < r.per_t_rms.size(); ++k) {
            format_double(csv, batch.grid()[k]);
            csv += ",";
            format_double(csv, r.per_t_rms[k]);
            csv += ",";
            format_double(csv, r.per_t_rms_se[k]);
            csv += "\n";
        }
        write_file_atomic(dir / ("residual_rms_N" + std::to_string(n) + ".csv"), csv);

        json g = grid_report(r);
        g["steps"] = n;
        g["dt"] = ctx.config.horizon / static_cast<double>(n);
        grids.push_back(std::move(g));
        if (r.terminal_rms > 0.0) {
            dts.push_back(ctx.config.horizon / static_cast<double>(n));
            rmss.push_back(r.terminal_rms);
        }
    }
    json results;
    results["grids"] = std::move(grids);
    if (dts.size() >= 2) {
        results["slope_terminal_rms_vs_dt"] = exact_stat(loglog_slope(dts, rmss));
    }
    return results;
}

json run_ito_check(const Context& ctx, const fs::path& dir) {
    const FunctionalSpec f = functional_from_ref(ctx.config.functional);
    ItoResidualOptions opt;
    opt.fd = ctx.fd;
    json grids = json::array();
    std::vector<double> dts, rmss;
    std::string csv = "steps,dt,rms,se,drift_abs_mean\n";
    for (const std::size_t n : ctx.config.steps) {
        const WienerBatch batch = batch_for(ctx, n, f.dim);
        const ItoEnsembleReport r = ito_formula_check(f, batch, opt, ctx.threads);
        require_usable(r.scenarios_used, "ito-check");
        json g;
        g["steps"] = n;
        g["dt"] = ctx.config.horizon / static_cast<double>(n);
        g["terminal_rms"] = stat(r.terminal_rms, r.terminal_rms_se);
        g["terminal_max_abs"] = exact_stat(r.terminal_max_abs);
        g["drift_abs_mean"] = exact_stat(r.drift_abs_mean);
        g["scenarios_used"] = r.scenarios_used;
        g["singular"] = r.singular_count;
        grids.push_back(std::move(g));

        csv += std::to_string(n) + ",";
        format_double(csv, ctx.config.horizon / static_cast<double>(n));
        csv += ",";
        format_double(csv, r.terminal_rms);
        csv += ",";
        format_double(csv, r.terminal_rms_se);
        csv += ",";
        format_double(csv, r.drift_abs_mean);
        csv += "\n";
        if (r.terminal_rms > 0.0) {
            dts.push_back(ctx.config.horizon / static_cast<double>(n));
            rmss.push_back(r.terminal_rms);
        }
    }
    write_file_atomic(dir / "ito_rms.csv", csv);
    json results;
    results["grids"] = std::move(grids);
    if (dts.size() >= 2) {
        results["slope_terminal_rms_vs_dt"] = exact_stat(loglog_slope(dts, rmss));
    }
    return results;
}

json run_localize(const Context& ctx, const fs::path& dir) {
    const FunctionalSpec f = functional_from_ref(ctx.config.functional);
    const std::size_t n = ctx.config.steps.front();
    const WienerBatch batch = batch_for(ctx, n, f.dim);
    std::vector<double> levels = ctx.config.levels;
    if (levels.empty()) levels = {2.0, 4.0, 8.0, 16.0};

    const ProcessOnGrid m = eval_process(f, batch, ctx.threads);
    const IntegrandOnGrid phi = integrand_from_functional(f, batch, ctx.fd, ctx.threads);
    ThetaRule theta;
    try {
        theta = theta_rule_by_id(ctx.config.theta);
    } catch (const std::invalid_argument& e) {
        config_fail(e.what());
    }
    const StoppingLadder ladder = build_ladder(m, levels, theta, ctx.threads);
    const std::vector<double> fractions = stabilization_check(phi, ladder);

    std::string csv = "level,tau_mean,stab_fraction\n";
    json level_rows = json::array();
    bool monotone = true;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        MomentAccumulator tau_time;
        for (std::size_t p = 0; p < m.scenarios(); ++p) {
            tau_time.add(batch.grid()[ladder.tau(p, l)]);
        }
        format_double(csv, levels[l]);
        csv += ",";
        format_double(csv, tau_time.mean());
        csv += ",";
        format_double(csv, fractions[l]);
        csv += "\n";

        json row;
        row["level"] = levels[l];
        row["tau_mean"] = stat(tau_time.mean(), tau_time.standard_error());
        row["stab_fraction"] = exact_stat(fractions[l]);
        level_rows.push_back(std::move(row));
        if (l > 0 && fractions[l] < fractions[l - 1]) monotone = false;
    }
    write_file_atomic(dir / "ladder.csv", csv);

    json results;
    results["levels"] = std::move(level_rows);
    results["fractions_non_decreasing"] = monotone;
    results["singular"] = phi.singular_count();
    if (ctx.config.theta_b) {
        ThetaRule theta_b;
        try {
            theta_b = theta_rule_by_id(*ctx.config.theta_b);
        } catch (const std::invalid_argument& e) {
            config_fail(e.what());
        }
        const ThetaIndependenceResult ind =
            theta_independence_check(phi, m, levels, theta, theta_b, ctx.threads);
        json indep;
        indep["pass"] = ind.pass;
        indep["compared"] = ind.compared;
        indep["mismatches"] = ind.mismatches;
        indep["uncovered"] = ind.uncovered;
        results["theta_independence"] = std::move(indep);
    }
    return results;
}

json run_pairing(const Context& ctx, const fs::path&) {
    const FunctionalSpec y = functional_from_ref(ctx.config.functional);
    const FunctionalSpec z = functional_from_ref(*ctx.config.functional2);
    if (y.dim != z.dim) config_fail("pairing partners must share one dimension");
    const std::size_t n = ctx.config.steps.front();
    const WienerBatch batch = batch_for(ctx, n, y.dim);
    PairingStats s;
    try {
        s = pairing_check(y, z, batch, ctx.fd, ctx.threads);
    } catch (const std::invalid_argument& e) {
        config_fail(e.what());
    }
    require_usable(s.scenarios_used, "pairing");
    json results;
    results["lhs"] = stat(s.lhs_mean, s.lhs_se);
    results["rhs"] = stat(s.rhs_mean, s.rhs_se);
    results["diff"] = stat(s.diff_mean, s.diff_se);
    results["agree_within_3se"] = std::abs(s.diff_mean) <= 3.0 * s.diff_se;
    results["scenarios_used"] = s.scenarios_used;
    results["singular"] = s.singular_count;
    return results;
}

json run_strict_local(const Context& ctx, const fs::path& dir) {
    const FunctionalSpec f = functional_from_ref(ctx.config.functional);
    if (!f.claims.strict_local_martingale) {
        config_fail("strict-local expects a strict local martingale functional");
    }
    const std::size_t n = ctx.config.steps.front();
    const WienerBatch batch = batch_for(ctx, n, f.dim);
    std::vector<double> levels = ctx.config.levels;
    if (levels.empty()) levels = {2.0, 4.0, 8.0};

    const StrictLocalityStats s = strict_locality_diagnostic(f, batch, levels, ctx.threads);
    require_usable(s.scenarios_used, "strict-local");

    // initial value and the closed-form terminal mean; Wiener paths start at 0
    const Path origin_path = batch.path(0);
    const double initial = f.eval(origin_path.view(), 0, 0.0);
    double anchor_norm = 0.0;
    for (const double c : f.params) anchor_norm += c * c;
    anchor_norm = std::sqrt(anchor_norm);
    const double reference =
        anchor_norm > 0.0 ? inverse_bessel_expected_terminal(anchor_norm, ctx.config.horizon)
                          : 0.0;

    std::string csv = "level,tau_mean,stopped_mean,se,excluded\n";
    json level_rows = json::array();
    for (const auto& lv : s.levels) {
        format_double(csv, lv.level);
        csv += ",";
        format_double(csv, lv.tau_mean);
        csv += ",";
        format_double(csv, lv.stopped_mean);
        csv += ",";
        format_double(csv, lv.stopped_se);
        csv += ",";
        csv += std::to_string(lv.stopped_excluded);
        csv += "\n";
        json row;
        row["level"] = lv.level;
        row["stopped_mean"] = stat(lv.stopped_mean, lv.stopped_se);
        row["tau_mean_fraction"] = exact_stat(lv.tau_mean);
        row["stopped_excluded"] = lv.stopped_excluded;
        level_rows.push_back(std::move(row));
    }
    write_file_atomic(dir / "levels.csv", csv);

    json results;
    results["terminal_mean"] = stat(s.terminal_mean, s.terminal_se);
    results["initial_value"] = exact_stat(initial);
    if (anchor_norm > 0.0) {
        results["terminal_reference"] = exact_stat(reference);
        results["terminal_within_3se_of_reference"] =
            std::abs(s.terminal_mean - reference) <= 3.0 * s.terminal_se;
        results["sigmas_below_initial"] =
            exact_stat(s.terminal_se > 0.0 ? (initial - s.terminal_mean) / s.terminal_se : 0.0);
    }
    results["levels"] = std::move(level_rows);
    results["scenarios_used"] = s.scenarios_used;
    results["singular"] = s.singular_count;
    return results;
}

json run_hedge(const Context& ctx, const fs::path& dir) {
    const FunctionalSpec f = functional_from_ref(ctx.config.functional);
    if (!f.claims.martingale) {
        config_fail("hedge expects a martingale functional as the price process");
    }
    const std::size_t d = f.dim;
    json grids = json::array();
    std::vector<double> dts, rmss;
    const std::size_t table_n = ctx.config.steps.back();

    for (const std::size_t n : ctx.config.steps) {
        const WienerBatch batch = batch_for(ctx, n, d);
        const bool emit_table = (n == table_n);
        const std::size_t samples = emit_table ? std::min<std::size_t>(8, batch.scenarios()) : 0;

        struct ChunkState {
            MomentAccumulator error;
            std::vector<MomentAccumulator> hedge_mean;
            std::size_t singular = 0;
        };
        std::vector<double> sample_rows(samples * n * d, 0.0);

        auto states = run_chunked<ChunkState>(
            batch.scenarios(), ctx.threads,
            [&](ChunkState& state, std::size_t begin, std::size_t end) {
                if (emit_table && state.hedge_mean.empty()) state.hedge_mean.resize(n);
                std::vector<double> grad(d);
                std::vector<double> rows(n * d);
                for (std::size_t p = begin; p < end; ++p) {
                    const Path path = batch.path(p);
                    BumpEvaluator ev(f, path.view());
                    try {
                        for (std::size_t k = 0; k < n; ++k) {
                            ev.vertical(k, ctx.fd, grad);
                            for (std::size_t i = 0; i < d; ++i) rows[k * d + i] = grad[i];
                        }
                        const double payoff = ev.plain(n, batch.grid()[n]);
                        const double initial = ev.plain(0, batch.grid()[0]);
                        double acc = initial;
                        for (std::size_t k = 0; k < n; ++k) {
                            const double* dw = path.increments().data() + k * d;
                            double step = 0.0;
                            for (std::size_t i = 0; i < d; ++i) step += rows[k * d + i] * dw[i];
                            acc += step;
                        }
                        state.error.add(payoff - acc);
                        if (emit_table) {
                            for (std::size_t k = 0; k < n; ++k) {
                                state.hedge_mean[k].add(rows[k * d]);
                            }
                            if (p < samples) {
                                std::copy(rows.begin(), rows.end(),
                                          sample_rows.begin() + p * n * d);
                            }
                        }
                    } catch (const NumericError&) {
                        ++state.singular;
                    }
                }
            });

        ChunkState total;
        if (emit_table) total.hedge_mean.resize(n);
        for (const auto& s : states) {
            total.error.merge(s.error);
            total.singular += s.singular;
            if (emit_table && !s.hedge_mean.empty()) {
                for (std::size_t k = 0; k < n; ++k) total.hedge_mean[k].merge(s.hedge_mean[k]);
            }
        }

        if (emit_table) {
            std::string csv = "t,hedge_mean";
            for (std::size_t p = 0; p < samples; ++p) csv += ",hedge_s" + std::to_string(p);
            csv += "\n";
            for (std::size_t k = 0; k < n; ++k) {
                format_double(csv, batch.grid()[k]);
                csv += ",";
                format_double(csv, total.hedge_mean[k].mean());
                for (std::size_t p = 0; p < samples; ++p) {
                    csv += ",";
                    format_double(csv, sample_rows[p * n * d + k * d]);
                }
                csv += "\n";
            }
            write_file_atomic(dir / "hedge_paths.csv", csv);
        }

        require_usable(total.error.n, "hedge");
        json g;
        g["steps"] = n;
        g["dt"] = ctx.config.horizon / static_cast<double>(n);
        g["replication_error_rms"] = stat(total.error.rms(), total.error.rms_standard_error());
        g["replication_error_mean"] =
            stat(total.error.mean(), total.error.standard_error());
        g["scenarios_used"] = total.error.n;
        g["singular"] = total.singular;
        grids.push_back(std::move(g));
        if (total.error.rms() > 0.0) {
            dts.push_back(ctx.config.horizon / static_cast<double>(n));
            rmss.push_back(total.error.rms());
        }
    }
    json results;
    results["grids"] = std::move(grids);
    if (dts.size() >= 2) {
        results["slope_replication_rms_vs_dt"] = exact_stat(loglog_slope(dts, rmss));
    }
    return results;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    Context ctx;
    ctx.config = config;
    if (options.seed) ctx.config.seed = *options.seed;
    ctx.fd = FdOptions{config.bump, config.time_bump, config.scheme};
    ctx.threads = options.threads;

    const fs::path dir = prepare_out_dir(ctx.config, options);
    write_file_atomic(dir / "config.json", canonical_config_json(ctx.config));

    json results;
    switch (ctx.config.kind) {
        case ExperimentKind::Derive: results = run_derive(ctx, dir); break;
        case ExperimentKind::Represent: results = run_represent(ctx, dir); break;
        case ExperimentKind::Localize: results = run_localize(ctx, dir); break;
        case ExperimentKind::Pairing: results = run_pairing(ctx, dir); break;
        case ExperimentKind::ItoCheck: results = run_ito_check(ctx, dir); break;
        case ExperimentKind::StrictLocal: results = run_strict_local(ctx, dir); break;
        case ExperimentKind::Hedge: results = run_hedge(ctx, dir); break;
    }

    json report;
    report["fitolab_version"] = kLabVersion;
    report["kind"] = to_string(ctx.config.kind);
    report["seed"] = ctx.config.seed;
    report["scenarios"] = ctx.config.scenarios;
    report["results"] = std::move(results);

    RunResult result;
    result.dir = dir;
    result.report_json = report.dump(2) + "\n";
    write_file_atomic(dir / "report.json", result.report_json);
    return result;
}

RunResult hedge_demo(const ExperimentConfig& config, const RunOptions& options) {
    if (config.kind != ExperimentKind::Hedge) {
        config_fail("hedge_demo requires kind 'hedge'");
    }
    return run_experiment(config, options);
}

}  // namespace fitolab
