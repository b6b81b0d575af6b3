// Command-line front end: load a run config, execute the selected
// verification suites, print one verdict line per check and write the
// JSON/CSV report bundle.
//
// Exit codes: 0 all non-diagnostic checks pass, 1 at least one check failed,
// 2 configuration or condition-gate error, 3 simulation error, 4 statistics
// error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "switchdiff/engine.hpp"
#include "switchdiff/experiments.hpp"
#include "switchdiff/io.hpp"

namespace fs = std::filesystem;
using namespace switchdiff;

namespace {

int run(const std::string& config_path, std::optional<std::uint64_t> seed,
        std::optional<int> workers, const std::string& format,
        const std::vector<std::string>& suite_filter,
        const std::string& dump_path) {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (workers) {
        if (*workers < 1) throw ConfigError("workers: must be >= 1");
        cfg.workers = *workers;
    }

    std::vector<std::string> suites =
        suite_filter.empty() ? cfg.suites : suite_filter;
    if (suites.empty())
        throw ConfigError(
            "no suites selected: set \"suites\" in the config or pass --suite");
    {
        const auto known = suite_names();
        for (const auto& s : suites)
            if (std::find(known.begin(), known.end(), s) == known.end())
                throw ConfigError("unknown suite '" + s + "'");
    }
    // Suite selection is part of the reported configuration.
    cfg.suites = suites;

    if (const char* env = std::getenv("SWITCHDIFF_OUTPUT_DIR"))
        cfg.output_dir = env;

    SuiteResults results;
    bool any_fail = false;
    for (const auto& suite_id : suites) {
        const SuiteOutput out = run_suite(suite_id, cfg);
        for (const auto& r : out.reports) {
            std::cout << "[" << r.verdict << "] " << r.check_id
                      << "  estimate=" << r.estimate
                      << " threshold=" << r.threshold
                      << " margin=" << r.margin << "\n";
            if (r.verdict == "fail") any_fail = true;
        }
        results.emplace_back(suite_id, out);
    }

    fs::create_directories(cfg.output_dir);
    const fs::path dir(cfg.output_dir);
    if (format == "json" || format == "both") {
        std::ofstream os(dir / "report.json", std::ios::binary);
        os << reports_to_json(cfg, results);
    }
    if (format == "csv" || format == "both") {
        std::ofstream os(dir / "report.csv", std::ios::binary);
        write_reports_csv(os, results);
        std::ofstream od(dir / "drift_table.csv", std::ios::binary);
        write_drift_csv(od, results);
    }

    if (!dump_path.empty()) {
        Rng rng(cfg.seed, stream_of(0x9A7Dull, 0));
        const Path path = simulate_path(
            std::vector<double>(static_cast<std::size_t>(cfg.params.d),
                                2.0 * cfg.params.M1 /
                                    std::sqrt(static_cast<double>(cfg.params.d))),
            0, 10.0, cfg.params, cfg.make_drift(), cfg.engine, rng);
        std::ofstream os(dump_path, std::ios::binary);
        write_path(os, path);
    }

    return any_fail ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"switchdiff: statistical verification suites for two-regime "
                 "switching diffusions"};
    std::string config_path, format = "both", dump_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::vector<std::string> suite_filter;

    app.add_option("--config", config_path, "run configuration (JSON)")
        ->required();
    app.add_option("--seed", seed, "override the master seed");
    app.add_option("--workers", workers, "override the worker count");
    app.add_option("--format", format, "report format")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    app.add_option("--suite", suite_filter,
                   "run only the named suites (repeatable)");
    app.add_option("--dump-path", dump_path,
                   "write one sample trajectory to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return run(config_path, seed, workers, format, suite_filter, dump_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ConditionGateError& e) {
        std::cerr << "condition gate: " << e.what() << "\n";
        return 2;
    } catch (const PathAbort& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "statistics error: " << e.what() << "\n";
        return 4;
    }
}
