#pragma once

#include <functional>
#include <optional>

#include "qstab/projector.hpp"
#include "qstab/rng.hpp"

namespace qstab {

// How the next map of the alternating sequence is chosen. Cyclic schedules
// walk a fixed index list (which must mention every map); random schedules
// draw independently each step from a distribution bounded below by `floor`.
struct Schedule {
    enum class Kind { Cyclic, Random };

    Kind kind = Kind::Cyclic;
    std::vector<std::size_t> order;  // Cyclic
    std::vector<double> probs;       // Random
    double floor = 0.0;              // Random: min probability per map
    std::uint64_t seed = kDefaultSeed;

    static Schedule cyclic(std::vector<std::size_t> order);
    static Schedule random(std::vector<double> probs, double floor,
                           std::uint64_t seed = kDefaultSeed);

    // Throws std::invalid_argument unless the schedule addresses exactly the
    // maps 0..map_count-1 as described above.
    void validate(std::size_t map_count) const;
};

struct StepRecord {
    std::size_t step = 0;       // 1-based; records the state after the step
    std::size_t map_index = 0;
    double trace_dist = -1.0;   // to the target set; negative when no target
    double lyapunov = -1.0;     // 1 - Tr(P rho); negative when no projector
    bool violation = false;     // a monitored quantity increased
};

struct Trajectory {
    std::vector<StepRecord> metrics;  // one record per applied map
    // Thinned states: step 0, every thin_every-th step, and the last step.
    std::vector<std::pair<std::size_t, DensityMatrix>> states;
    bool converged = false;
    std::size_t steps = 0;
    double final_dist = -1.0;
    std::size_t violations = 0;
};

struct RunOptions {
    std::size_t max_steps = 1000;
    double dist_tol = 1e-9;       // stop once trace_dist falls below this
    std::size_t thin_every = 10;  // state storage stride
    // Idempotent channel whose image is the target set; enables trace_dist
    // and convergence detection. Without it the run always goes max_steps.
    std::optional<Channel> target;
    // Hilbert-space projector for the Lyapunov value; empty disables it.
    Matrix lyapunov_projector;
};

// Applies maps[j(t)] for t = 1..max_steps (or until the distance to the
// target set drops below dist_tol). Non-convergence is reported through
// Trajectory::converged, never thrown.
Trajectory run(const std::vector<ProjectionChannel>& maps, const Schedule& schedule,
               const DensityMatrix& rho0, const RunOptions& options = {});

// V(rho) = 1 - Tr(P rho) for a Hilbert-space projector P. Zero exactly when
// rho is supported inside range(P); one when supported on the complement.
double lyapunov(const DensityMatrix& rho, const Matrix& subspace_projector);

struct ContractionReport {
    double c = 0.0;              // 1 - prod_i sin^2(theta_i)
    std::vector<double> angles;  // theta_i between M_i and the tail meet
};

// Worst-case squared-norm contraction of one sweep of metric-orthogonal
// subspace projections, from the Friedrichs angles between each subspace and
// the intersection of those after it.
ContractionReport contraction_coefficient(const std::vector<OperatorSubspace>& subspaces);

struct RateComparison {
    double lhs = 0.0;  // ||(P_M2 P_M1)^n - P_meet|| in weighted coordinates
    double rhs = 0.0;  // c^(2n-1) from the principal angle
};

// Both sides of the exact two-subspace alternating projection rate identity;
// asserting their agreement is left to the caller.
RateComparison two_subspace_rate(const OperatorSubspace& M1, const OperatorSubspace& M2,
                                 std::size_t n);

struct ContractionEstimate {
    double value = 0.0;  // max over sampled states of one-cycle delta V
    std::size_t samples = 0;
    std::uint64_t seed = 0;
};

// Sampled estimate (never a certificate) of the worst one-cycle Lyapunov
// change over states orthogonal to a pure invariant target: Haar samples on
// the orthocomplement plus projected-gradient refinement of the best one.
ContractionEstimate pure_contraction(const std::vector<ProjectionChannel>& maps,
                                     const DensityMatrix& target,
                                     std::size_t samples = 10000,
                                     std::uint64_t seed = kDefaultSeed);

struct TrialCheckpoint {
    std::size_t step;
    double fraction_below;  // share of trials with V < gamma at this step
    double mean_lyapunov;
    DensityMatrix mean_state;
};

struct TrialsReport {
    std::vector<TrialCheckpoint> checkpoints;
    std::size_t trials = 0;
    std::size_t steps = 0;
    std::size_t violations = 0;  // path-wise Lyapunov increases seen
    std::uint64_t seed = 0;
};

// Runs independently seeded random-schedule trajectories (trial t uses
// Rng::hash(schedule.seed, t)) from initial states drawn by rho0_family and
// reports, at each checkpoint step, the fraction of trials with V < gamma
// together with the trial-averaged Lyapunov value and state. Checkpoint
// steps must be increasing; an empty list defaults to powers of two capped
// at `steps` plus the endpoint. Trials fan out to `jobs` worker threads and
// are merged by trial index, so the report does not depend on the pool size;
// rho0_family must be callable concurrently when jobs > 1.
TrialsReport randomized_trials(const std::vector<ProjectionChannel>& maps,
                               const Schedule& schedule,
                               const std::function<DensityMatrix(Rng&)>& rho0_family,
                               const Matrix& lyapunov_projector, double gamma,
                               std::size_t trials, std::size_t steps,
                               std::vector<std::size_t> checkpoints = {},
                               std::size_t jobs = 1);

}  // namespace qstab
