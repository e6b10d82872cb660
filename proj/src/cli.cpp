#include "skyfed/cli.hpp"

#include "skyfed/error.hpp"
#include "skyfed/experiments.hpp"
#include "skyfed/placement.hpp"
#include "skyfed/report.hpp"
#include "skyfed/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace skyfed {
namespace {

namespace fs = std::filesystem;

struct CommonArgs {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string out = "skyfed-out";
};

/// Results are staged in `<out>.tmp` and renamed into place once complete, so a
/// reader never sees a half-written directory.
class OutputDir {
public:
    explicit OutputDir(fs::path final_path) : final_(std::move(final_path)) {
        staging_ = final_;
        staging_ += ".tmp";
        std::error_code ec;
        fs::remove_all(staging_, ec);
        if (!fs::create_directories(staging_, ec) || ec)
            throw IoError("cannot create output directory '" + staging_.string() + "': " + ec.message());
    }
    ~OutputDir() {
        if (!committed_) {
            std::error_code ec;
            fs::remove_all(staging_, ec);
        }
    }
    OutputDir(const OutputDir&) = delete;
    OutputDir& operator=(const OutputDir&) = delete;

    void write(const std::string& name, const std::string& content) const {
        std::ofstream f(staging_ / name, std::ios::binary);
        f << content;
        if (!f) throw IoError("cannot write '" + (staging_ / name).string() + "'");
    }

    void commit() {
        std::error_code ec;
        if (fs::exists(final_)) {
            // Only replace a directory this tool wrote earlier.
            if (!fs::is_directory(final_) || !fs::exists(final_ / "manifest.json"))
                throw IoError("'" + final_.string() + "' exists and is not a previous skyfed output directory");
            fs::remove_all(final_, ec);
            if (ec) throw IoError("cannot replace '" + final_.string() + "': " + ec.message());
        }
        fs::rename(staging_, final_, ec);
        if (ec) throw IoError("cannot move results into '" + final_.string() + "': " + ec.message());
        committed_ = true;
    }

    const fs::path& path() const { return final_; }

private:
    fs::path final_;
    fs::path staging_;
    bool committed_ = false;
};

Scenario load(const CommonArgs& a) {
    auto s = load_scenario(a.scenario, a.seed);
    // IDX paths are relative to the scenario file.
    const auto base = fs::path(a.scenario).parent_path();
    for (auto* p : {&s.dataset.idx_images, &s.dataset.idx_labels})
        if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).string();
    return s;
}

void write_manifest(const OutputDir& dir, const CommonArgs& a, const Scenario& s, const std::string& command,
                    const nlohmann::ordered_json& extra) {
    nlohmann::ordered_json m;
    m["command"] = command;
    m["scenario"] = a.scenario;
    m["output"] = dir.path().string();
    m["seed"] = s.seed;
    m["version"] = std::string("v") + SKYFED_VERSION;
    for (const auto& [k, v] : extra.items()) m[k] = v;
    dir.write("manifest.json", m.dump(2) + "\n");
}

int cmd_place(const CommonArgs& a, std::ostream& out) {
    const auto s = load(a);
    const auto r = optimize_placement(s);
    if (!std::isfinite(r.objective)) throw InfeasibleError("no placement makes the bound contract");
    OutputDir dir(a.out);
    write_manifest(dir, a, s, "place", {});
    dir.write("placement.csv", placement_csv(r));
    dir.commit();
    out << "position " << format_number(r.position.x()) << ' ' << format_number(r.position.y()) << "\nobjective "
        << format_number(r.objective) << "\niterations " << r.iterations << '\n';
    return kExitOk;
}

int cmd_trajectory(const CommonArgs& a, const std::string& solver_name_arg, bool closed_loop, std::ostream& out) {
    auto s = load(a);
    const auto solver = parse_solver(solver_name_arg);
    if (closed_loop) {
        if (solver != TrajectorySolver::kHorizon) throw ValidationError("closed_loop", "only the horizon solver plans closed loops");
        s.solver.closed_loop = true;
    }
    const auto plan = plan_trajectory(s, solver);
    if (!plan.contraction_ok) throw InfeasibleError("trajectory does not keep the bound contracting");
    OutputDir dir(a.out);
    write_manifest(dir, a, s, "trajectory", {{"solver", solver_name_arg}, {"closed_loop", s.solver.closed_loop}});
    dir.write("trajectory.csv", trajectory_csv(plan.trajectory, {{"solver", solver_name_arg}}));
    dir.write("atl.txt", format_number(plan.atl) + "\n");
    Series path{"drone", {}, {}};
    for (const auto& p : plan.trajectory.waypoints) {
        path.x.push_back(p.x());
        path.y.push_back(p.y());
    }
    dir.write("trajectory.svg", svg_line_chart("Drone trajectory (" + solver_name_arg + ")", "x [m]", {path}));
    dir.commit();
    out << "atl " << format_number(plan.atl) << "\nwaypoints " << plan.trajectory.waypoints.size() << '\n';
    return kExitOk;
}

int cmd_train(const CommonArgs& a, const std::string& solver_name_arg, const std::string& trajectory_path,
              std::ostream& out) {
    const auto s = load(a);
    Trajectory traj;
    std::string source;
    if (!trajectory_path.empty()) {
        std::ifstream f(trajectory_path);
        if (!f) throw IoError("cannot open trajectory file '" + trajectory_path + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        traj = parse_trajectory_csv(ss.str());
        source = trajectory_path;
    } else {
        traj = plan_trajectory(s, parse_solver(solver_name_arg)).trajectory;
        source = solver_name_arg;
    }
    const auto r = train(s, traj);
    OutputDir dir(a.out);
    write_manifest(dir, a, s, "train", {{"trajectory", source}});
    dir.write("rounds.csv", round_log_csv(r.sim));
    Series loss{"loss", {}, {}}, acc{"accuracy", {}, {}};
    for (const auto& rec : r.sim.rounds) {
        loss.x.push_back(rec.round);
        loss.y.push_back(rec.loss);
        acc.x.push_back(rec.round);
        acc.y.push_back(rec.accuracy);
    }
    dir.write("learning_curve.svg", svg_line_chart("Training", "round", {loss, acc}, {1}));
    dir.commit();
    const double final_loss = r.sim.rounds.empty() ? r.sim.initial_loss : r.sim.rounds.back().loss;
    out << "final_loss " << format_number(final_loss) << "\ntarget_loss " << format_number(r.target)
        << "\nrounds_to_target " << r.rounds_to_target << '\n';
    return kExitOk;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size() && item.find_first_not_of(' ', used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError("values", "'" + item + "' is not a number");
        }
    }
    if (v.empty()) throw ValidationError("values", "need at least one value");
    return v;
}

int cmd_sweep(const CommonArgs& a, const std::string& axis_arg, const std::string& values_arg,
              const std::string& solver_name_arg, bool no_train, std::ostream& out) {
    const auto s = load(a);
    const auto axis = parse_axis(axis_arg);
    const auto values = parse_values(values_arg);
    SweepOptions opts;
    opts.solver = parse_solver(solver_name_arg);
    opts.train = !no_train;
    const auto rows = run_sweep(s, axis, values, opts);
    OutputDir dir(a.out);
    write_manifest(dir, a, s, "sweep",
                   {{"axis", axis_arg}, {"values", values}, {"solver", solver_name_arg}, {"train", opts.train}});
    dir.write("sweep.csv", sweep_csv(axis, rows));
    Series atl_series{"ATL", {}, {}};
    for (const auto& r : rows) {
        atl_series.x.push_back(r.value);
        atl_series.y.push_back(r.atl);
    }
    dir.write("sweep.svg", svg_line_chart("ATL sweep", std::string(axis_name(axis)), {atl_series}));
    dir.commit();
    out << sweep_csv(axis, rows);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Drone-assisted federated learning planner and simulator", "skyfed"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("skyfed v") + SKYFED_VERSION);

    CommonArgs common;
    std::string solver = "horizon", trajectory_path, axis, values;
    bool closed_loop = false, no_train = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scenario", common.scenario, "Scenario file")->required();
        sub->add_option("--seed", common.seed, "Override the scenario seed");
        sub->add_option("--out", common.out, "Output directory")->capture_default_str();
    };
    auto* place = app.add_subcommand("place", "Optimal stationary drone position");
    add_common(place);
    auto* traj = app.add_subcommand("trajectory", "Plan a drone trajectory and report its ATL");
    add_common(traj);
    traj->add_option("--solver", solver, "greedy, horizon, centroid or maxrate")->capture_default_str();
    traj->add_flag("--closed-loop", closed_loop, "Return to the start (horizon solver)");
    auto* trn = app.add_subcommand("train", "Simulate federated training along a trajectory");
    add_common(trn);
    trn->add_option("--solver", solver, "Planner used when no trajectory file is given")->capture_default_str();
    trn->add_option("--trajectory", trajectory_path, "Trajectory CSV written by the trajectory command");
    auto* sweep = app.add_subcommand("sweep", "Sweep one parameter");
    add_common(sweep);
    sweep->add_option("--axis", axis, "psnr, per, altitude, vmax or kappa")->required();
    sweep->add_option("--values", values, "Comma-separated values")->required();
    sweep->add_option("--solver", solver, "Trajectory planner")->capture_default_str();
    sweep->add_flag("--no-train", no_train, "Only report the ATL");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << app.version() << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kExitUsage;
    }

    try {
        if (*place) return cmd_place(common, out);
        if (*traj) return cmd_trajectory(common, solver, closed_loop, out);
        if (*trn) return cmd_train(common, solver, trajectory_path, out);
        if (*sweep) return cmd_sweep(common, axis, values, solver, no_train, out);
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const UnboundedError& e) {
        err << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace skyfed
