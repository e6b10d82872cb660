#include "skyfed/experiments.hpp"

#include "skyfed/bound.hpp"
#include "skyfed/error.hpp"
#include "skyfed/trajectory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

namespace skyfed {

TrajectorySolver parse_solver(std::string_view name) {
    if (name == "greedy") return TrajectorySolver::kGreedy;
    if (name == "horizon") return TrajectorySolver::kHorizon;
    if (name == "centroid") return TrajectorySolver::kCentroid;
    if (name == "maxrate") return TrajectorySolver::kMaxRate;
    throw ValidationError("solver", "unknown solver '" + std::string(name) + "' (greedy, horizon, centroid, maxrate)");
}

std::string_view solver_name(TrajectorySolver solver) {
    switch (solver) {
        case TrajectorySolver::kGreedy: return "greedy";
        case TrajectorySolver::kHorizon: return "horizon";
        case TrajectorySolver::kCentroid: return "centroid";
        case TrajectorySolver::kMaxRate: return "maxrate";
    }
    return "?";
}

PlannedTrajectory plan_trajectory(const Scenario& s, TrajectorySolver solver, const std::optional<Trajectory>& warm_start) {
    PlannedTrajectory out;
    switch (solver) {
        case TrajectorySolver::kGreedy: out.trajectory = greedy_trajectory(s, s.solver.projection).trajectory; break;
        case TrajectorySolver::kHorizon:
            out.trajectory = horizon_optimize(s, HorizonOptions::from(s.solver), warm_start).trajectory;
            break;
        case TrajectorySolver::kCentroid: out.trajectory = baseline_weighted_centroid(s); break;
        case TrajectorySolver::kMaxRate: out.trajectory = baseline_max_rate(s); break;
    }
    const auto r = atl(out.trajectory, s);
    out.atl = r.value;
    out.contraction_ok = r.contraction_ok;
    return out;
}

double target_loss(const Scenario& s, const Federation& fed) {
    if (s.target_loss) return *s.target_loss;
    const double f0 = fed.model->loss(fed.initial, fed.pooled);
    if (fed.optimum) return fed.optimum_loss + 0.05 * (f0 - fed.optimum_loss);
    return 0.5 * f0;
}

TrainResult train(const Scenario& s, const Trajectory& trajectory, std::uint64_t replicate) {
    const auto fed = build_federation(s, replicate);
    TrainResult out;
    SimOptions opts;
    opts.replicate = replicate;
    out.sim = simulate(s, trajectory, fed, s.horizon, opts);
    out.target = target_loss(s, fed);
    out.rounds_to_target = rounds_to_target(out.sim, out.target);
    return out;
}

SweepAxis parse_axis(std::string_view name) {
    if (name == "psnr") return SweepAxis::kPsnr;
    if (name == "per") return SweepAxis::kPer;
    if (name == "altitude") return SweepAxis::kAltitude;
    if (name == "vmax") return SweepAxis::kVmax;
    if (name == "kappa") return SweepAxis::kKappa;
    throw ValidationError("axis", "unknown sweep axis '" + std::string(name) + "' (psnr, per, altitude, vmax, kappa)");
}

std::string_view axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::kPsnr: return "psnr";
        case SweepAxis::kPer: return "per";
        case SweepAxis::kAltitude: return "altitude";
        case SweepAxis::kVmax: return "vmax";
        case SweepAxis::kKappa: return "kappa";
    }
    return "?";
}

Scenario apply_axis(const Scenario& s, SweepAxis axis, double value) {
    Scenario out = s;
    auto& last = out.devices.back();
    switch (axis) {
        case SweepAxis::kPsnr: last.noise_var = psnr_to_variance(value, s.dataset.peak); break;
        case SweepAxis::kPer:
            if (!(value >= 0.0 && value < 1.0)) throw ValidationError("per_override", "must lie in [0, 1)");
            last.per_override = value;
            break;
        case SweepAxis::kAltitude: out.radio.altitude = value; break;
        case SweepAxis::kVmax: out.v_max = value; break;
        case SweepAxis::kKappa: {
            if (value != std::floor(value) || value < 1.0) throw ValidationError("dwell", "kappa must be a positive integer");
            out.dwell = static_cast<int>(value);
            break;
        }
    }
    validate(out);
    return out;
}

Trajectory refine_dwell(const Trajectory& t, int fine) {
    if (fine < 1 || t.dwell % fine != 0) throw ValidationError("dwell", "coarse dwell is not a multiple of the fine one");
    const auto r = static_cast<std::size_t>(t.dwell / fine);
    Trajectory out;
    out.dwell = fine;
    out.closed = t.closed;
    // Waypoint k covered rounds k*coarse+1 .. (k+1)*coarse; the final waypoint is kept once.
    for (std::size_t k = 0; k + 1 < t.waypoints.size(); ++k) out.waypoints.insert(out.waypoints.end(), r, t.waypoints[k]);
    if (!t.waypoints.empty()) out.waypoints.push_back(t.waypoints.back());
    return out;
}

std::size_t worker_count() {
    if (const char* env = std::getenv("SKYFED_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(worker_count(), n);
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<SweepRow> run_sweep(const Scenario& s, SweepAxis axis, const std::vector<double>& values,
                                const SweepOptions& opts) {
    const std::size_t n = values.size();
    std::vector<Scenario> scenarios;
    for (double v : values) scenarios.push_back(apply_axis(s, axis, v));

    std::vector<PlannedTrajectory> plans(n);
    parallel_for(n, [&](std::size_t i) { plans[i] = plan_trajectory(scenarios[i], opts.solver); });

    // Continuation: a looser constraint can start from the tighter neighbour's solution,
    // which is feasible there. Ascending v_max; descending kappa when it divides.
    const bool continuation = opts.solver == TrajectorySolver::kHorizon &&
                              (axis == SweepAxis::kVmax || axis == SweepAxis::kKappa);
    if (continuation && n > 1) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return axis == SweepAxis::kVmax ? values[a] < values[b] : values[a] > values[b];
        });
        for (std::size_t k = 1; k < n; ++k) {
            const auto& prev = plans[order[k - 1]];
            const auto cur = order[k];
            std::optional<Trajectory> warm;
            if (axis == SweepAxis::kVmax) {
                warm = prev.trajectory;
            } else if (prev.trajectory.dwell % scenarios[cur].dwell == 0) {
                warm = refine_dwell(prev.trajectory, scenarios[cur].dwell);
            }
            if (!warm || !prev.contraction_ok) continue;
            auto cand = plan_trajectory(scenarios[cur], opts.solver, warm);
            if (cand.atl < plans[cur].atl) plans[cur] = std::move(cand);
        }
    }

    std::vector<SweepRow> rows(n);
    parallel_for(n, [&](std::size_t i) {
        rows[i].value = values[i];
        rows[i].atl = plans[i].contraction_ok ? plans[i].atl : std::numeric_limits<double>::infinity();
        if (opts.train) {
            const auto r = train(scenarios[i], plans[i].trajectory);
            rows[i].final_loss = r.sim.rounds.empty() ? r.sim.initial_loss : r.sim.rounds.back().loss;
            rows[i].rounds_to_target = r.rounds_to_target;
        } else {
            rows[i].final_loss = std::numeric_limits<double>::quiet_NaN();
        }
    });
    return rows;
}

}  // namespace skyfed
