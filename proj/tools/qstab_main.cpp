#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qstab/config.hpp"
#include "qstab/scenario.hpp"

namespace {

// QSTAB_DIM_CAP raises (or lowers) the Hilbert-space dimension cap.
bool apply_dim_cap_env() {
    const char* cap = std::getenv("QSTAB_DIM_CAP");
    if (!cap) return true;
    char* end = nullptr;
    const unsigned long long value = std::strtoull(cap, &end, 10);
    if (end == cap || *end != '\0' || value == 0) {
        std::cerr << "error: QSTAB_DIM_CAP must be a positive integer, got '" << cap << "'\n";
        return false;
    }
    qstab::config().dim_cap = static_cast<std::size_t>(value);
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthesizes idempotent correction channels for a target state and runs "
                 "cyclic or randomized alternating-projection schedules"};
    app.fallthrough(true);

    std::string scenario_path;
    std::string out_dir = ".";
    std::size_t jobs = 1;
    std::uint64_t seed = 0;

    app.add_option("--out", out_dir, "Directory for report artifacts")
        ->capture_default_str();
    app.add_option("--jobs", jobs, "Worker threads for randomized trials")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "Override the scenario seed");

    auto* run_cmd = app.add_subcommand("run", "Execute a scenario and write its artifacts");
    run_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    auto* explain_cmd =
        app.add_subcommand("explain", "Print the derived plan without running dynamics");
    explain_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    app.require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    if (!apply_dim_cap_env()) return 2;

    try {
        qstab::Scenario sc = qstab::load_scenario(scenario_path);
        if (seed_opt->count() > 0) sc.seed = seed;
        if (run_cmd->parsed()) {
            const auto result = qstab::run_scenario(sc, out_dir, jobs);
            std::cout << "wrote " << (std::filesystem::path(out_dir) / sc.summary_json).string()
                      << "\n";
            return result.exit_code;
        }
        std::cout << qstab::explain_scenario(sc);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
