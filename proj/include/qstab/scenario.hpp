#pragma once

#include <optional>
#include <string>

#include "qstab/json_io.hpp"

// Declarative front end: a scenario file names a system, a target state, a
// neighborhood structure, and one task; running it produces a summary JSON
// (and optionally a trajectory CSV and the synthesized channels). Sites,
// neighborhood sets, cyclic orders, and graph edges are 1-based in the JSON
// and 0-based in memory.

namespace qstab {

enum class Task { QlsCheck, StabilizeCyclic, StabilizeRandom, RateAnalysis };

const char* task_name(Task t);

struct Scenario {
    std::string name;  // file stem, echoed into report metadata

    std::vector<std::size_t> factor_dims;
    std::string target_kind;
    std::optional<DensityMatrix> target;

    // Base structure as written; `enlarge` applies enlarged() at use time.
    NeighborhoodStructure neighborhoods;
    bool enlarge = false;

    Task task = Task::QlsCheck;
    // Lets STABILIZE/RATE tasks proceed on targets that fail the QLS check.
    bool override_check = false;

    std::vector<std::size_t> order;  // cyclic map order; empty = 0..m-1
    std::vector<double> probs;       // random map distribution; empty = uniform
    std::optional<double> floor_eps; // random floor; default half the uniform weight
    std::uint64_t seed = kDefaultSeed;

    std::size_t max_steps = 1000;
    // Presence makes convergence mandatory for STABILIZE_CYCLIC (exit 3).
    std::optional<double> dist_tol;

    std::size_t trials = 100;  // STABILIZE_RANDOM
    double gamma = 1e-6;
    std::vector<std::size_t> checkpoints;

    std::optional<Matrix> initial;  // explicit start; default Haar from seed

    std::string trajectory_csv;  // empty = not written
    std::string summary_json = "summary.json";
    std::string channels_json;  // empty = not written

    NeighborhoodStructure effective_neighborhoods() const {
        return enlarge ? neighborhoods.enlarged() : neighborhoods;
    }
};

// Both throw std::invalid_argument on validation problems; load_scenario
// additionally propagates nlohmann parse errors (which carry the byte
// position) and resolves referenced files relative to the scenario's
// directory.
Scenario parse_scenario(const nlohmann::json& j, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

struct ScenarioResult {
    int exit_code = 0;  // 0 done; 3 mandatory tolerance missed
    nlohmann::json summary;
};

// Executes the task and writes the requested artifacts under out_dir.
// Infeasible requests (e.g. stabilization of a target that fails the check
// without override_check) throw; non-convergence is reported, not thrown.
ScenarioResult run_scenario(const Scenario& sc, const std::string& out_dir,
                            std::size_t jobs = 1);

// The derived objects (decision, dimensions, synthesized map plan,
// contraction estimate) as text, without running any dynamics.
std::string explain_scenario(const Scenario& sc);

}  // namespace qstab
