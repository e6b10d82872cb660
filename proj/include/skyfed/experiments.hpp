#pragma once

#include "skyfed/fedsim.hpp"
#include "skyfed/scenario.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace skyfed {

enum class TrajectorySolver { kGreedy, kHorizon, kCentroid, kMaxRate };

TrajectorySolver parse_solver(std::string_view name);
std::string_view solver_name(TrajectorySolver solver);

struct PlannedTrajectory {
    Trajectory trajectory;
    double atl = 0.0;
    bool contraction_ok = true;
};

/// Trajectory from the named solver with its ATL. Honors the scenario's closed-loop flag
/// for the horizon solver.
PlannedTrajectory plan_trajectory(const Scenario& s, TrajectorySolver solver,
                                  const std::optional<Trajectory>& warm_start = std::nullopt);

/// Scenario target if set, else F* + 5% of the initial gap (convex models) or half the
/// initial loss (the MLP).
double target_loss(const Scenario& s, const Federation& fed);

struct TrainResult {
    SimulationResult sim;
    double target = 0.0;
    int rounds_to_target = 0;
};

TrainResult train(const Scenario& s, const Trajectory& trajectory, std::uint64_t replicate = 0);

enum class SweepAxis { kPsnr, kPer, kAltitude, kVmax, kKappa };

SweepAxis parse_axis(std::string_view name);
std::string_view axis_name(SweepAxis axis);

/// Copy of `s` with one parameter changed. psnr and per act on the last device.
Scenario apply_axis(const Scenario& s, SweepAxis axis, double value);

struct SweepRow {
    double value = 0.0;
    double atl = 0.0;
    double final_loss = 0.0;
    int rounds_to_target = 0;
};

struct SweepOptions {
    TrajectorySolver solver = TrajectorySolver::kHorizon;
    bool train = true;  // false skips the simulation columns (NaN / 0)
};

/// One row per value, in input order. Horizon sweeps over v_max and kappa are warm-started
/// from the neighbouring solution (looser constraint) and keep the better of warm and fresh.
std::vector<SweepRow> run_sweep(const Scenario& s, SweepAxis axis, const std::vector<double>& values,
                                const SweepOptions& opts = {});

/// Worker cap from SKYFED_THREADS (default: hardware concurrency, at least 1).
std::size_t worker_count();

/// Runs fn(0..n-1) on up to worker_count() threads. Results land at their own index,
/// so the output does not depend on the worker count. Rethrows the first failure by index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Repeats each waypoint so a dwell of `coarse` becomes a dwell of `fine` (coarse % fine == 0).
Trajectory refine_dwell(const Trajectory& t, int fine);

}  // namespace skyfed
