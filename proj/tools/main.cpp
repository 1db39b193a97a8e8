// fitolab command line: runs experiments from JSON configs and inspects the
// functional catalog.
//
// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
// Environment overrides (lower precedence than flags): FITOLAB_SEED,
// FITOLAB_THREADS.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fitolab/catalog.hpp"
#include "fitolab/errors.hpp"
#include "fitolab/experiment.hpp"
#include "fitolab/localization.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

std::optional<std::uint64_t> env_u64(const char* name) {
    const char* raw = std::getenv(name);
    if (!raw || !*raw) return std::nullopt;
    try {
        return std::stoull(raw);
    } catch (...) {
        throw fitolab::ConfigError(std::string(name) + " must be an unsigned integer, got '" +
                                   raw + "'");
    }
}

void print_claims(const fitolab::FunctionalClaims& claims) {
    std::cout << "  claims: ";
    bool any = false;
    if (claims.martingale) {
        std::cout << "martingale";
        any = true;
    }
    if (claims.strict_local_martingale) {
        std::cout << (any ? ", " : "") << "strict local martingale";
        any = true;
    }
    if (claims.c12b) {
        std::cout << (any ? ", " : "") << "smooth (pathwise calculus)";
        any = true;
    }
    if (!any) std::cout << "none";
    std::cout << "\n";
}

int run_command(const std::string& config_path, const fitolab::RunOptions& options) {
    const fitolab::ExperimentConfig config = fitolab::load_config_file(config_path);
    const fitolab::RunResult result = fitolab::run_experiment(config, options);
    std::cout << "wrote " << result.dir.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fitolab: functional Ito calculus laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    fitolab::RunOptions options;
    std::uint64_t seed_flag = 0;
    std::size_t threads_flag = 0;

    CLI::App* run = app.add_subcommand("run", "Run an experiment from a JSON config");
    run->add_option("config", config_path, "Path to the experiment config")->required();
    auto* seed_opt = run->add_option("--seed", seed_flag, "Override the config seed");
    auto* threads_opt =
        run->add_option("--threads", threads_flag, "Worker threads (0 = hardware)");
    run->add_option("--out", options.out_dir, "Output directory (overrides config)");
    run->add_flag("--force", options.force, "Allow writing into a non-empty directory");

    CLI::App* catalog = app.add_subcommand("catalog", "Inspect the functional catalog");
    catalog->require_subcommand(1);
    CLI::App* list = catalog->add_subcommand("list", "List catalog ids");
    std::string show_id;
    CLI::App* show = catalog->add_subcommand("show", "Describe one catalog entry");
    show->add_option("id", show_id, "Catalog id")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*list) {
            for (const auto& id : fitolab::catalog_ids()) std::cout << id << "\n";
            return kExitOk;
        }
        if (*show) {
            const fitolab::CatalogEntryInfo info = fitolab::catalog_info(show_id);
            std::cout << info.id << "\n";
            std::cout << "  formula: " << info.formula << "\n";
            std::cout << "  dimension: " << info.dim << "\n";
            std::cout << "  params: " << info.params_doc << "\n";
            print_claims(info.claims);
            std::cout << "  oracles: " << (info.has_oracles ? "closed-form derivatives" : "none")
                      << "\n";
            return kExitOk;
        }
        // run
        if (const auto env_threads = env_u64("FITOLAB_THREADS")) {
            options.threads = static_cast<std::size_t>(*env_threads);
        }
        if (const auto env_seed = env_u64("FITOLAB_SEED")) {
            options.seed = *env_seed;
        }
        if (*threads_opt) options.threads = threads_flag;
        if (*seed_opt) options.seed = seed_flag;
        return run_command(config_path, options);
    } catch (const fitolab::ConfigError& e) {
        std::cerr << "{\"error\":\"config\",\"message\":\"" << e.what() << "\"}\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "{\"error\":\"config\",\"message\":\"" << e.what() << "\"}\n";
        return kExitConfig;
    } catch (const fitolab::IoError& e) {
        std::cerr << "{\"error\":\"io\",\"message\":\"" << e.what() << "\"}\n";
        return kExitIo;
    } catch (const fitolab::NumericError& e) {
        std::cerr << "{\"error\":\"numeric\",\"message\":\"" << e.what() << "\"}\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":\"numeric\",\"message\":\"" << e.what() << "\"}\n";
        return kExitNumeric;
    }
}
