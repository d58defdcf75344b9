#include "qstab/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace qstab {
namespace {

constexpr double kJitter = 1e-10;  // tolerated numeric wobble in monitors

void validate_maps(const std::vector<ProjectionChannel>& maps) {
    if (maps.empty()) throw std::invalid_argument("engine: empty map list");
    const HilbertSpace& H = maps.front().channel.space();
    for (const auto& m : maps)
        if (m.channel.space() != H) throw std::invalid_argument("engine: maps on different spaces");
}

void validate_projector(const Matrix& P, std::size_t d, const char* who) {
    if (P.rows() != static_cast<Eigen::Index>(d) || P.cols() != P.rows())
        throw std::invalid_argument(std::string(who) + ": projector shape mismatch");
    Matrix Ph = hermitize(P);
    if (spectral_norm(Matrix(P - Ph)) > 1e-9 || spectral_norm(Matrix(Ph * Ph - Ph)) > config().tol.idem)
        throw std::invalid_argument(std::string(who) + ": not a projector");
}

double lyapunov_value(const DensityMatrix& rho, const Matrix& P) {
    const double v = 1.0 - (P * rho.mat()).trace().real();
    return std::clamp(v, 0.0, 1.0);
}

std::size_t pick_index(const Schedule& s, std::size_t step, Rng& rng) {
    if (s.kind == Schedule::Kind::Cyclic) return s.order[(step - 1) % s.order.size()];
    const double u = rng.next_double();
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < s.probs.size(); ++j) {
        acc += s.probs[j];
        if (u < acc) return j;
    }
    return s.probs.size() - 1;
}

}  // namespace

Schedule Schedule::cyclic(std::vector<std::size_t> order) {
    Schedule s;
    s.kind = Kind::Cyclic;
    s.order = std::move(order);
    return s;
}

Schedule Schedule::random(std::vector<double> probs, double floor, std::uint64_t seed) {
    Schedule s;
    s.kind = Kind::Random;
    s.probs = std::move(probs);
    s.floor = floor;
    s.seed = seed;
    return s;
}

void Schedule::validate(std::size_t map_count) const {
    if (map_count == 0) throw std::invalid_argument("Schedule: no maps");
    if (kind == Kind::Cyclic) {
        if (order.empty()) throw std::invalid_argument("Schedule: empty cyclic order");
        std::vector<bool> seen(map_count, false);
        for (std::size_t j : order) {
            if (j >= map_count) throw std::invalid_argument("Schedule: map index out of range");
            seen[j] = true;
        }
        if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
            throw std::invalid_argument("Schedule: cyclic order must visit every map");
        return;
    }
    if (probs.size() != map_count) throw std::invalid_argument("Schedule: probs size mismatch");
    if (!(floor > 0.0)) throw std::invalid_argument("Schedule: probability floor must be positive");
    double sum = 0.0;
    for (double q : probs) {
        if (q < floor) throw std::invalid_argument("Schedule: probability below floor");
        sum += q;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("Schedule: probs must sum to 1");
}

Trajectory run(const std::vector<ProjectionChannel>& maps, const Schedule& schedule,
               const DensityMatrix& rho0, const RunOptions& options) {
    validate_maps(maps);
    schedule.validate(maps.size());
    const HilbertSpace& H = maps.front().channel.space();
    if (rho0.space() != H) throw std::invalid_argument("run: initial state space mismatch");
    if (options.target && options.target->space() != H)
        throw std::invalid_argument("run: target channel space mismatch");
    const bool track_v = options.lyapunov_projector.size() > 0;
    if (track_v) validate_projector(options.lyapunov_projector, rho0.dim(), "run");
    if (options.max_steps == 0) throw std::invalid_argument("run: max_steps must be positive");
    const std::size_t thin = options.thin_every == 0 ? 10 : options.thin_every;

    const auto dist_to_target = [&](const DensityMatrix& rho) {
        Operator image = options.target->apply(rho.op());
        return trace_norm(Matrix(rho.mat() - image.mat));
    };

    Trajectory traj;
    traj.metrics.reserve(std::min<std::size_t>(options.max_steps, 1 << 20));
    traj.states.emplace_back(0, rho0);

    Rng rng(schedule.seed);
    DensityMatrix rho = rho0;
    double prev_dist = options.target ? dist_to_target(rho) : -1.0;
    double prev_v = track_v ? lyapunov_value(rho, options.lyapunov_projector) : -1.0;

    for (std::size_t t = 1; t <= options.max_steps; ++t) {
        const std::size_t j = pick_index(schedule, t, rng);
        rho = maps[j].channel.apply(rho);

        StepRecord rec;
        rec.step = t;
        rec.map_index = j;
        if (options.target) {
            rec.trace_dist = dist_to_target(rho);
            if (rec.trace_dist > prev_dist + kJitter) rec.violation = true;
            prev_dist = rec.trace_dist;
        }
        if (track_v) {
            rec.lyapunov = lyapunov_value(rho, options.lyapunov_projector);
            if (rec.lyapunov > prev_v + kJitter) rec.violation = true;
            prev_v = rec.lyapunov;
        }
        if (rec.violation) ++traj.violations;
        traj.metrics.push_back(rec);

        if (t % thin == 0) traj.states.emplace_back(t, rho);
        if (options.target && rec.trace_dist <= options.dist_tol) {
            traj.converged = true;
            break;
        }
    }

    traj.steps = traj.metrics.size();
    traj.final_dist = options.target ? traj.metrics.back().trace_dist : -1.0;
    if (traj.states.back().first != traj.steps) traj.states.emplace_back(traj.steps, rho);
    return traj;
}

double lyapunov(const DensityMatrix& rho, const Matrix& subspace_projector) {
    validate_projector(subspace_projector, rho.dim(), "lyapunov");
    return lyapunov_value(rho, subspace_projector);
}

ContractionReport contraction_coefficient(const std::vector<OperatorSubspace>& subspaces) {
    if (subspaces.empty()) throw std::invalid_argument("contraction_coefficient: empty list");
    for (const auto& s : subspaces)
        if (!s.metric().compatible(subspaces.front().metric()))
            throw std::invalid_argument("contraction_coefficient: metric mismatch");

    ContractionReport report;
    if (subspaces.size() == 1) {
        report.c = 0.0;
        return report;
    }
    OperatorSubspace meet = subspaces.back();
    std::vector<double> angles;
    for (std::size_t i = subspaces.size() - 1; i-- > 0;) {
        angles.push_back(subspace_angle(subspaces[i], meet).radians);
        if (i > 0) meet = subspace_intersect(subspaces[i], meet);
    }
    std::reverse(angles.begin(), angles.end());
    double prod = 1.0;
    for (double th : angles) {
        const double s = std::sin(th);
        prod *= s * s;
    }
    report.c = std::clamp(1.0 - prod, 0.0, 1.0);
    report.angles = std::move(angles);
    return report;
}

RateComparison two_subspace_rate(const OperatorSubspace& M1, const OperatorSubspace& M2,
                                 std::size_t n) {
    if (!M1.metric().compatible(M2.metric()))
        throw std::invalid_argument("two_subspace_rate: metric mismatch");
    if (n == 0) throw std::invalid_argument("two_subspace_rate: n must be positive");
    const Matrix P1 = M1.projector();
    const Matrix P2 = M2.projector();
    const Matrix Pmeet = subspace_intersect(M1, M2).projector();
    const Matrix T = P2 * P1;
    Matrix Tn = T;
    for (std::size_t k = 1; k < n; ++k) Tn = Matrix(Tn * T);

    RateComparison out;
    out.lhs = spectral_norm(Matrix(Tn - Pmeet));
    const double c = subspace_angle(M1, M2).cosine;
    out.rhs = std::pow(c, 2.0 * static_cast<double>(n) - 1.0);
    return out;
}

ContractionEstimate pure_contraction(const std::vector<ProjectionChannel>& maps,
                                     const DensityMatrix& target, std::size_t samples,
                                     std::uint64_t seed) {
    validate_maps(maps);
    const HilbertSpace& H = maps.front().channel.space();
    if (target.space() != H) throw std::invalid_argument("pure_contraction: space mismatch");
    const Matrix& P = target.mat();
    if (spectral_norm(Matrix(P * P - P)) > 1e-9)
        throw std::invalid_argument("pure_contraction: target state is not pure");
    for (const auto& m : maps)
        if (trace_norm(Matrix(m.channel.apply(P) - P)) > 1e-9)
            throw std::invalid_argument("pure_contraction: target not invariant under maps");

    const std::size_t d = target.dim();
    if (d == 1) return ContractionEstimate{0.0, 0, seed};

    Channel cycle = maps.front().channel;
    for (std::size_t i = 1; i < maps.size(); ++i) cycle = compose(maps[i].channel, cycle);
    // <psi| E(tau) |psi> = Tr(tau E^dag(psi psi^dag)); compress the dual image
    // onto the orthocomplement of the target vector.
    const Matrix A = dual(cycle).apply(P);
    const Matrix B = support_basis(Matrix(Matrix::Identity(d, d) - P), 0.5);
    const Matrix M = hermitize(Matrix(B.adjoint() * A * B));
    const std::size_t m = static_cast<std::size_t>(M.rows());

    Rng rng(seed);
    double best = std::numeric_limits<double>::infinity();
    Vector best_x;
    for (std::size_t k = 0; k < samples; ++k) {
        Vector x = rng.haar_vector(m);
        const double val = (x.adjoint() * M * x)(0).real();
        if (val < best) {
            best = val;
            best_x = x;
        }
    }
    const double scale = std::max(spectral_norm(M), 1e-12);
    Vector x = best_x;
    for (int k = 0; k < 50; ++k) {
        const double val = (x.adjoint() * M * x)(0).real();
        if (val < best) {
            best = val;
            best_x = x;
        }
        Vector g = M * x - val * x;
        x = (x - (1.0 / scale) * g).normalized();
    }
    const double final_val = (x.adjoint() * M * x)(0).real();
    if (final_val < best) best = final_val;

    ContractionEstimate est;
    est.value = 0.0 - best;
    est.samples = samples;
    est.seed = seed;
    return est;
}

TrialsReport randomized_trials(const std::vector<ProjectionChannel>& maps,
                               const Schedule& schedule,
                               const std::function<DensityMatrix(Rng&)>& rho0_family,
                               const Matrix& lyapunov_projector, double gamma,
                               std::size_t trials, std::size_t steps,
                               std::vector<std::size_t> checkpoints, std::size_t jobs) {
    validate_maps(maps);
    if (schedule.kind != Schedule::Kind::Random)
        throw std::invalid_argument("randomized_trials: schedule must be random");
    schedule.validate(maps.size());
    if (!rho0_family) throw std::invalid_argument("randomized_trials: missing state family");
    if (!(gamma > 0.0)) throw std::invalid_argument("randomized_trials: gamma must be positive");
    if (trials == 0 || steps == 0)
        throw std::invalid_argument("randomized_trials: trials and steps must be positive");
    const HilbertSpace& H = maps.front().channel.space();
    validate_projector(lyapunov_projector, H.dim(), "randomized_trials");

    if (checkpoints.empty()) {
        for (std::size_t t = 1; t < steps; t *= 2) checkpoints.push_back(t);
        checkpoints.push_back(steps);
    }
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
        checkpoints.front() == 0 || checkpoints.back() > steps ||
        std::adjacent_find(checkpoints.begin(), checkpoints.end()) != checkpoints.end())
        throw std::invalid_argument("randomized_trials: checkpoints must be increasing in [1, steps]");

    if (jobs == 0) throw std::invalid_argument("randomized_trials: jobs must be positive");

    const std::size_t ncp = checkpoints.size();
    const std::size_t d = H.dim();
    std::vector<double> below(ncp, 0.0), vsum(ncp, 0.0);
    std::vector<Matrix> ssum(ncp, Matrix::Zero(d, d));
    std::size_t violations = 0;

    // Each trial is a pure function of (schedule.seed, trial index), so trials
    // fan out to a pool and the partial results are folded back in index
    // order; the totals are identical for every pool size. Waves bound the
    // number of per-trial checkpoint states held at once.
    struct TrialOut {
        std::vector<double> v;
        std::vector<std::uint8_t> hit;
        std::vector<Matrix> state;
        std::size_t violations = 0;
    };
    auto run_trial = [&](std::size_t trial) {
        TrialOut out;
        out.v.assign(ncp, 0.0);
        out.hit.assign(ncp, 0);
        out.state.assign(ncp, Matrix());
        Rng rng(Rng::hash(schedule.seed, trial));
        DensityMatrix rho = rho0_family(rng);
        if (rho.space() != H)
            throw std::invalid_argument("randomized_trials: family state space mismatch");
        double prev_v = lyapunov_value(rho, lyapunov_projector);
        std::size_t cp = 0;
        for (std::size_t t = 1; t <= steps && cp < ncp; ++t) {
            rho = maps[pick_index(schedule, t, rng)].channel.apply(rho);
            const double v = lyapunov_value(rho, lyapunov_projector);
            if (v > prev_v + kJitter) ++out.violations;
            prev_v = v;
            if (t == checkpoints[cp]) {
                out.v[cp] = v;
                out.hit[cp] = v < gamma ? 1 : 0;
                out.state[cp] = rho.mat();
                ++cp;
            }
        }
        return out;
    };

    const std::size_t wave = std::max<std::size_t>(jobs, 32);
    for (std::size_t w0 = 0; w0 < trials; w0 += wave) {
        const std::size_t w1 = std::min(trials, w0 + wave);
        std::vector<TrialOut> outs(w1 - w0);
        if (jobs == 1) {
            for (std::size_t i = w0; i < w1; ++i) outs[i - w0] = run_trial(i);
        } else {
            std::atomic<std::size_t> next(w0);
            std::mutex err_mutex;
            std::exception_ptr err;
            auto worker = [&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= w1) return;
                    try {
                        outs[i - w0] = run_trial(i);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(err_mutex);
                        if (!err) err = std::current_exception();
                        return;
                    }
                }
            };
            std::vector<std::thread> pool;
            const std::size_t width = std::min(jobs, w1 - w0);
            pool.reserve(width);
            for (std::size_t k = 0; k < width; ++k) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
            if (err) std::rethrow_exception(err);
        }
        for (const auto& out : outs) {
            violations += out.violations;
            for (std::size_t k = 0; k < ncp; ++k) {
                if (out.state[k].size() == 0) continue;
                below[k] += out.hit[k];
                vsum[k] += out.v[k];
                ssum[k] += out.state[k];
            }
        }
    }

    TrialsReport report;
    report.trials = trials;
    report.steps = steps;
    report.violations = violations;
    report.seed = schedule.seed;
    report.checkpoints.reserve(ncp);
    const double scale = 1.0 / static_cast<double>(trials);
    for (std::size_t k = 0; k < ncp; ++k) {
        report.checkpoints.push_back(TrialCheckpoint{
            checkpoints[k], below[k] * scale, vsum[k] * scale,
            DensityMatrix::trusted(Operator(H, Matrix(ssum[k] * scale)))});
    }
    return report;
}

}  // namespace qstab
