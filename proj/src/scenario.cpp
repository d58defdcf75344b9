#include "qstab/scenario.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qstab/states.hpp"

namespace qstab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("scenario: " + msg); }

const json& field(const json& j, const char* key) {
    if (!j.contains(key)) fail(std::string("missing required field '") + key + "'");
    return j.at(key);
}

// Sites, edges, and order lists are 1-based on the wire.
std::vector<std::size_t> to_indices(const json& arr, const char* what) {
    if (!arr.is_array()) fail(std::string(what) + " must be an array");
    std::vector<std::size_t> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number_unsigned() || v.get<std::size_t>() == 0)
            fail(std::string(what) + " entries are 1-based positive integers");
        out.push_back(v.get<std::size_t>() - 1);
    }
    return out;
}

Matrix load_matrix_file(const std::string& path, const std::vector<std::size_t>& dims) {
    std::ifstream in(path);
    if (!in) fail("cannot open referenced file " + path);
    const json j = json::parse(in);
    if (field(j, "dims").get<std::vector<std::size_t>>() != dims)
        fail("matrix file " + path + " dims do not match system.factor_dims");
    return matrix_from_json(field(j, "matrix"));
}

DensityMatrix build_target(const json& spec, const HilbertSpace& H, const std::string& base_dir) {
    const std::string kind = field(spec, "kind").get<std::string>();
    const std::size_t n = H.factor_dims().size();
    const bool qubit_register =
        std::all_of(H.factor_dims().begin(), H.factor_dims().end(),
                    [](std::size_t d) { return d == 2; });
    auto need_qubits = [&] {
        if (!qubit_register) fail("target kind '" + kind + "' needs an all-qubit system");
    };

    if (kind == "ghz") { need_qubits(); return ghz_state(n); }
    if (kind == "w") { need_qubits(); return w_state(n); }
    if (kind == "dicke") {
        need_qubits();
        return dicke_state(n, field(spec, "k").get<std::size_t>());
    }
    if (kind == "graph") {
        need_qubits();
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        for (const auto& e : field(spec, "edges")) {
            const auto pair = to_indices(e, "graph edge");
            if (pair.size() != 2) fail("graph edges are pairs of sites");
            edges.emplace_back(pair[0], pair[1]);
        }
        return graph_state(n, edges);
    }
    if (kind == "gibbs_zz") {
        need_qubits();
        return gibbs_commuting(H, zz_chain_terms(n), field(spec, "beta").get<double>());
    }
    if (kind == "dicke_ghz_mixture") {
        if (H.factor_dims() != std::vector<std::size_t>{2, 2, 2, 2})
            fail("dicke_ghz_mixture targets a four-qubit system");
        return dicke_ghz_mixture(field(spec, "epsilon").get<double>());
    }
    if (kind == "zero") {
        Vector v = Vector::Zero(H.dim());
        v(0) = 1.0;
        return pure_state(H, v);
    }
    if (kind == "maximally_mixed") return maximally_mixed(H);
    if (kind == "matrix") {
        const std::string file = field(spec, "file").get<std::string>();
        const Matrix M = load_matrix_file((fs::path(base_dir) / file).string(), H.factor_dims());
        return DensityMatrix::validated(Operator(H, M));
    }
    fail("unknown target kind '" + kind + "'");
}

const char* method_string(ProjectionMethod m) {
    switch (m) {
        case ProjectionMethod::Reset: return "reset";
        case ProjectionMethod::Damped: return "damped";
        case ProjectionMethod::Direct: return "direct";
        case ProjectionMethod::Composed: return "composed";
    }
    return "unknown";
}

std::string iso_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Matrix support_projector(const DensityMatrix& rho) {
    const Matrix V = support_basis(rho.mat(), 1e-10);
    return V * V.adjoint();
}

std::vector<ProjectionChannel> synthesize(const Scenario& sc, bool override_check) {
    return stabilizing_maps(*sc.target, sc.effective_neighborhoods(), override_check);
}

json maps_to_json(const std::vector<ProjectionChannel>& maps, const DensityMatrix& target) {
    json methods = json::array();
    double residual = 0.0;
    for (const auto& m : maps) {
        methods.push_back(method_string(m.method));
        residual = std::max(residual, trace_norm(m.channel.apply(target.mat()) - target.mat()));
    }
    return json{{"count", maps.size()}, {"methods", std::move(methods)},
                {"invariance_residual", residual}};
}

double contraction_of(const std::vector<ProjectionChannel>& maps) {
    std::vector<OperatorSubspace> images;
    images.reserve(maps.size());
    for (const auto& m : maps) images.push_back(m.image);
    return contraction_coefficient(images).c;
}

void write_text_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace

const char* task_name(Task t) {
    switch (t) {
        case Task::QlsCheck: return "QLS_CHECK";
        case Task::StabilizeCyclic: return "STABILIZE_CYCLIC";
        case Task::StabilizeRandom: return "STABILIZE_RANDOM";
        case Task::RateAnalysis: return "RATE_ANALYSIS";
    }
    return "unknown";
}

Scenario parse_scenario(const json& j, const std::string& base_dir) {
    if (!j.is_object()) fail("document root must be an object");
    Scenario sc;

    const json& system = field(j, "system");
    sc.factor_dims = field(system, "factor_dims").get<std::vector<std::size_t>>();
    if (sc.factor_dims.empty()) fail("system.factor_dims must be nonempty");
    for (std::size_t d : sc.factor_dims)
        if (d == 0) fail("system.factor_dims entries must be positive");
    // The HilbertSpace constructor enforces config().dim_cap (the CLI wires
    // QSTAB_DIM_CAP into it before any scenario is loaded).
    const HilbertSpace H(sc.factor_dims);

    const json& tspec = field(j, "target");
    sc.target_kind = field(tspec, "kind").get<std::string>();
    sc.target = build_target(tspec, H, base_dir);

    const json& nspec = field(j, "neighborhoods");
    const json& sets = field(nspec, "sets");
    if (!sets.is_array() || sets.empty()) fail("neighborhoods.sets must be a nonempty array");
    std::vector<std::vector<std::size_t>> converted;
    for (const auto& s : sets) converted.push_back(to_indices(s, "neighborhood set"));
    sc.neighborhoods = NeighborhoodStructure::make(sc.factor_dims.size(), std::move(converted),
                                                   nspec.value("allow_full", false));
    sc.enlarge = nspec.value("enlarge", false);

    const std::string task = field(j, "task").get<std::string>();
    if (task == "QLS_CHECK") sc.task = Task::QlsCheck;
    else if (task == "STABILIZE_CYCLIC") sc.task = Task::StabilizeCyclic;
    else if (task == "STABILIZE_RANDOM") sc.task = Task::StabilizeRandom;
    else if (task == "RATE_ANALYSIS") sc.task = Task::RateAnalysis;
    else fail("unknown task '" + task + "'");

    sc.override_check = j.value("override_check", false);

    if (j.contains("schedule")) {
        const json& sched = j.at("schedule");
        if (sched.contains("order")) sc.order = to_indices(sched.at("order"), "schedule.order");
        if (sched.contains("probs")) sc.probs = sched.at("probs").get<std::vector<double>>();
        if (sched.contains("epsilon")) sc.floor_eps = sched.at("epsilon").get<double>();
        if (sched.contains("seed")) sc.seed = sched.at("seed").get<std::uint64_t>();
    }

    if (j.contains("stop")) {
        const json& stop = j.at("stop");
        if (stop.contains("max_steps")) {
            sc.max_steps = stop.at("max_steps").get<std::size_t>();
            if (sc.max_steps == 0) fail("stop.max_steps must be positive");
        }
        if (stop.contains("dist_tol")) {
            sc.dist_tol = stop.at("dist_tol").get<double>();
            if (!(*sc.dist_tol > 0.0)) fail("stop.dist_tol must be positive");
        }
    }

    if (j.contains("trials")) {
        const json& tr = j.at("trials");
        if (tr.contains("count")) sc.trials = tr.at("count").get<std::size_t>();
        if (sc.trials == 0) fail("trials.count must be positive");
        if (tr.contains("gamma")) sc.gamma = tr.at("gamma").get<double>();
        if (!(sc.gamma > 0.0)) fail("trials.gamma must be positive");
        if (tr.contains("checkpoints"))
            sc.checkpoints = tr.at("checkpoints").get<std::vector<std::size_t>>();
    }

    if (j.contains("initial")) {
        const json& init = j.at("initial");
        const std::string kind = field(init, "kind").get<std::string>();
        if (kind == "matrix") {
            const std::string file = field(init, "file").get<std::string>();
            sc.initial = load_matrix_file((fs::path(base_dir) / file).string(), sc.factor_dims);
        } else if (kind != "haar") {
            fail("initial.kind must be 'haar' or 'matrix'");
        }
    }

    if (j.contains("outputs")) {
        const json& out = j.at("outputs");
        sc.trajectory_csv = out.value("trajectory_csv", std::string());
        sc.summary_json = out.value("summary_json", sc.summary_json);
        sc.channels_json = out.value("channels_json", std::string());
    }
    if (sc.summary_json.empty()) fail("outputs.summary_json must not be empty");

    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("scenario: cannot open " + path);
    const json j = json::parse(in);  // parse_error reports the byte position
    Scenario sc = parse_scenario(j, fs::path(path).parent_path().string());
    sc.name = fs::path(path).stem().string();
    return sc;
}

ScenarioResult run_scenario(const Scenario& sc, const std::string& out_dir, std::size_t jobs) {
    if (!sc.target) throw std::invalid_argument("scenario: target not resolved");
    const DensityMatrix& target = *sc.target;
    const NeighborhoodStructure N = sc.effective_neighborhoods();

    json summary;
    summary["metadata"] = {{"tool", "qstab"},
                           {"format_version", 1},
                           {"scenario", sc.name},
                           {"seed", sc.seed},
                           {"generated_at", iso_utc_now()}};
    summary["task"] = task_name(sc.task);
    summary["system"] = {{"factor_dims", sc.factor_dims}};

    const QlsReport rep = is_qls(target, N);
    summary["qls"] = qls_report_to_json(rep);

    ScenarioResult result;
    std::vector<ProjectionChannel> maps;
    if (sc.task != Task::QlsCheck) {
        maps = synthesize(sc, sc.override_check);
        summary["maps"] = maps_to_json(maps, target);
    }

    if (sc.task == Task::StabilizeCyclic) {
        std::vector<std::size_t> order = sc.order;
        if (order.empty())
            for (std::size_t i = 0; i < maps.size(); ++i) order.push_back(i);

        DensityMatrix rho0 = sc.initial
                                 ? DensityMatrix::validated(Operator(target.space(), *sc.initial))
                                 : pure_state(target.space(),
                                              Rng(Rng::hash(sc.seed, 0x1213)).haar_vector(
                                                  target.space().dim()));
        RunOptions opt;
        opt.max_steps = sc.max_steps;
        opt.dist_tol = sc.dist_tol.value_or(1e-9);
        opt.thin_every = std::max<std::size_t>(1, sc.max_steps);
        opt.target = algebra_projection(target, {}).channel;
        opt.lyapunov_projector = support_projector(target);
        const Trajectory tr = run(maps, Schedule::cyclic(order), rho0, opt);

        summary["run"] = {{"converged", tr.converged},
                          {"steps", tr.steps},
                          {"final_dist", tr.final_dist},
                          {"c_estimate", contraction_of(maps)}};
        if (!sc.trajectory_csv.empty()) {
            std::ostringstream csv;
            write_trajectory_csv(csv, tr);
            write_text_file(fs::path(out_dir) / sc.trajectory_csv, csv.str());
        }
        if (sc.dist_tol && !tr.converged) result.exit_code = 3;
    } else if (sc.task == Task::StabilizeRandom) {
        std::vector<double> probs = sc.probs;
        if (probs.empty()) probs.assign(maps.size(), 1.0 / static_cast<double>(maps.size()));
        const double floor = sc.floor_eps.value_or(0.5 / static_cast<double>(maps.size()));
        const HilbertSpace& H = target.space();
        const std::size_t d = H.dim();
        auto family = [&H, d](Rng& r) { return pure_state(H, r.haar_vector(d)); };
        const TrialsReport tr =
            randomized_trials(maps, Schedule::random(probs, floor, sc.seed), family,
                              support_projector(target), sc.gamma, sc.trials, sc.max_steps,
                              sc.checkpoints, jobs);
        json cps = json::array();
        for (const auto& cp : tr.checkpoints)
            cps.push_back({{"step", cp.step},
                           {"fraction_below", cp.fraction_below},
                           {"mean_lyapunov", cp.mean_lyapunov}});
        summary["trials"] = {{"count", tr.trials},
                             {"steps", tr.steps},
                             {"violations", tr.violations},
                             {"checkpoints", std::move(cps)}};
    } else if (sc.task == Task::RateAnalysis) {
        std::vector<OperatorSubspace> images;
        for (const auto& m : maps) images.push_back(m.image);
        const ContractionReport cr = contraction_coefficient(images);
        json rate = {{"c", cr.c}, {"angles", cr.angles}};
        const bool full_rank =
            support_basis(target.mat(), 1e-10).cols() == static_cast<Eigen::Index>(target.dim());
        if (full_rank) {
            json blocks = json::array();
            for (const auto& alg : minimal_neighborhood_sets(target, N))
                blocks.push_back(block_decomposition_to_json(block_decompose(alg.local)));
            rate["blocks"] = std::move(blocks);
        }
        summary["rate"] = std::move(rate);
    }

    if (!sc.channels_json.empty() && !maps.empty()) {
        json channels = json::array();
        for (const auto& m : maps) {
            json c = channel_to_json(m.channel);
            c["method"] = method_string(m.method);
            channels.push_back(std::move(c));
        }
        write_text_file(fs::path(out_dir) / sc.channels_json, channels.dump(2) + "\n");
    }

    write_text_file(fs::path(out_dir) / sc.summary_json, summary.dump(2) + "\n");
    result.summary = std::move(summary);
    return result;
}

std::string explain_scenario(const Scenario& sc) {
    if (!sc.target) throw std::invalid_argument("scenario: target not resolved");
    const DensityMatrix& target = *sc.target;
    const NeighborhoodStructure N = sc.effective_neighborhoods();
    std::ostringstream out;

    out << "scenario: " << (sc.name.empty() ? "(inline)" : sc.name) << "\n";
    out << "task: " << task_name(sc.task) << "\n";
    out << "system: dims [";
    for (std::size_t i = 0; i < sc.factor_dims.size(); ++i)
        out << (i ? "," : "") << sc.factor_dims[i];
    out << "], total " << target.space().dim() << "\n";
    const Eigen::Index rank = support_basis(target.mat(), 1e-10).cols();
    out << "target: " << sc.target_kind << " (rank " << rank << ")\n";

    auto print_sets = [&out](const NeighborhoodStructure& ns) {
        for (const auto& set : ns.neighborhoods) {
            out << " {";
            for (std::size_t i = 0; i < set.size(); ++i) out << (i ? "," : "") << set[i] + 1;
            out << "}";
        }
        out << "\n";
    };
    out << "neighborhoods (1-based):";
    print_sets(sc.neighborhoods);
    out << "enlarged (1-based):";
    print_sets(sc.neighborhoods.enlarged());
    if (sc.enlarge) out << "enlargement: applied before the check\n";

    const QlsReport rep = is_qls(target, N);
    out << "decision: " << (rep.decision ? "stabilizable" : "not stabilizable")
        << " with these neighborhoods\n";
    out << "intersection dim: " << rep.intersection_dim << "\n";
    out << "fixed-set dims per neighborhood: [";
    for (std::size_t i = 0; i < rep.support_dims.size(); ++i)
        out << (i ? "," : "") << rep.support_dims[i];
    out << "]\n";
    out << "support condition: " << (rep.support_condition ? "holds" : "fails") << "\n";
    if (rep.witness) out << "witness: available\n";

    const auto maps = synthesize(sc, true);
    out << "maps: " << maps.size() << " (";
    for (std::size_t i = 0; i < maps.size(); ++i)
        out << (i ? "," : "") << method_string(maps[i].method);
    out << ")\n";
    out << "contraction c: " << format_double(contraction_of(maps)) << "\n";
    if (!rep.decision && !sc.override_check && sc.task != Task::QlsCheck)
        out << "note: run requires override_check\n";

    switch (sc.task) {
        case Task::QlsCheck:
            out << "plan: decision only, no dynamics\n";
            break;
        case Task::StabilizeCyclic: {
            out << "plan: cyclic sweep of " << maps.size() << " maps, order [";
            std::vector<std::size_t> order = sc.order;
            if (order.empty())
                for (std::size_t i = 0; i < maps.size(); ++i) order.push_back(i);
            for (std::size_t i = 0; i < order.size(); ++i)
                out << (i ? "," : "") << order[i] + 1;
            out << "], up to " << sc.max_steps << " steps";
            if (sc.dist_tol) out << ", stop below trace distance " << format_double(*sc.dist_tol);
            out << "\n";
            break;
        }
        case Task::StabilizeRandom:
            out << "plan: random schedule over " << maps.size() << " maps, floor "
                << format_double(sc.floor_eps.value_or(0.5 / static_cast<double>(maps.size())))
                << ", " << sc.trials << " trials x " << sc.max_steps << " steps\n";
            break;
        case Task::RateAnalysis:
            out << "plan: subspace angle analysis, no dynamics\n";
            break;
    }
    return out.str();
}

}  // namespace qstab
