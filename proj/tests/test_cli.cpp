// End-to-end checks of the fitolab binary: subcommands, exit codes and
// artifact determinism through the process boundary.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string cli = FITOLAB_CLI_PATH;

int run(const std::string& args) {
    const std::string command = cli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(command.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path write_config(const std::string& name, const std::string& body) {
    const fs::path file = fs::temp_directory_path() / name;
    std::ofstream out(file);
    out << body;
    return file;
}

}  // namespace

TEST_CASE("catalog subcommands succeed") {
    CHECK(run("catalog list") == 0);
    CHECK(run("catalog show linear") == 0);
    CHECK(run("catalog show no-such-id") == 2);
}

TEST_CASE("run maps failures to the documented exit codes") {
    CHECK(run("run /nonexistent/config.json") == 4);

    const fs::path bad_json = write_config("fitolab-bad.json", "{ not json");
    CHECK(run("run " + bad_json.string()) == 2);

    const fs::path bad_key = write_config("fitolab-badkey.json", R"({
        "version": 1, "kind": "represent", "functional": {"id": "quadratic"},
        "horizon": 1.0, "steps": 32, "scenarios": 10, "seed": 1, "oops": true})");
    CHECK(run("run " + bad_key.string()) == 2);

    const fs::path no_out = write_config("fitolab-noout.json", R"({
        "version": 1, "kind": "represent", "functional": {"id": "quadratic"},
        "horizon": 1.0, "steps": 32, "scenarios": 10, "seed": 1})");
    CHECK(run("run " + no_out.string()) == 2);  // no output directory anywhere

    const fs::path numeric = write_config("fitolab-numeric.json", R"({
        "version": 1, "kind": "strict-local",
        "functional": {"id": "inverse-bessel", "params": [1e-7, 0, 0]},
        "horizon": 1.0, "steps": 16, "scenarios": 10, "seed": 1})");
    const fs::path numeric_dir = fs::temp_directory_path() / "fitolab-cli-numeric";
    fs::remove_all(numeric_dir);
    CHECK(run("run " + numeric.string() + " --out " + numeric_dir.string()) == 3);
    fs::remove_all(numeric_dir);
}

TEST_CASE("reruns are byte-identical and overwrite needs force") {
    const fs::path config = write_config("fitolab-repro.json", R"({
        "version": 1, "kind": "represent", "functional": {"id": "quadratic"},
        "horizon": 1.0, "steps": 64, "scenarios": 300, "seed": 2211})");
    const fs::path dir = fs::temp_directory_path() / "fitolab-cli-repro";
    fs::remove_all(dir);

    CHECK(run("run " + config.string() + " --out " + dir.string() + " --threads 1") == 0);
    const std::string report = slurp(dir / "report.json");
    const std::string csv = slurp(dir / "residual_rms_N64.csv");

    CHECK(run("run " + config.string() + " --out " + dir.string()) == 4);  // no --force

    CHECK(run("run " + config.string() + " --out " + dir.string() +
              " --threads 2 --force") == 0);
    CHECK(slurp(dir / "report.json") == report);
    CHECK(slurp(dir / "residual_rms_N64.csv") == csv);
    fs::remove_all(dir);
}

TEST_CASE("environment variables steer seed and threads, flags win") {
    const fs::path config = write_config("fitolab-env.json", R"({
        "version": 1, "kind": "represent", "functional": {"id": "linear"},
        "horizon": 1.0, "steps": 32, "scenarios": 50, "seed": 1})");
    const fs::path dir = fs::temp_directory_path() / "fitolab-cli-env";
    fs::remove_all(dir);

    const std::string env_run = "FITOLAB_SEED=777 " + cli + " run " + config.string() +
                                " --out " + dir.string() + " >/dev/null 2>&1";
    REQUIRE(std::system(env_run.c_str()) == 0);
    CHECK(slurp(dir / "config.json").find("\"seed\": 777") != std::string::npos);

    const std::string flag_run = "FITOLAB_SEED=777 " + cli + " run " + config.string() +
                                 " --seed 888 --out " + dir.string() +
                                 " --force >/dev/null 2>&1";
    REQUIRE(std::system(flag_run.c_str()) == 0);
    CHECK(slurp(dir / "config.json").find("\"seed\": 888") != std::string::npos);
    fs::remove_all(dir);
}
