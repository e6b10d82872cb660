#pragma once

#include "skyfed/scenario.hpp"

#include <optional>
#include <vector>

namespace skyfed {

/// One greedy drone move.
struct VelocityStep {
    Vec2 v_closed = Vec2::Zero();  // closed-form weighted average with weights at the pre-move geometry
    Vec2 v_hat = Vec2::Zero();     // stationary point of J + K after the move
    Vec2 v_star = Vec2::Zero();    // after the speed projection
    std::vector<double> weights;   // closed-form weights w_i
    bool degenerate = false;       // |sum w_i| ~ 0: drone holds position
    bool stationary = true;        // v_hat satisfied the stationarity tolerance
};

/// Geometry of one greedy step: the drone at `drone`, devices at `device_pos`
/// moving by `device_step` before the next round.
struct VelocityProblem {
    Vec2 drone = Vec2::Zero();
    std::vector<Vec2> device_pos;
    std::vector<Vec2> device_step;
    std::vector<DeviceState> devices;
    RadioEnvironment radio;
    LearningConstants constants;
};

/// J + K (up to a constant) of the round after the drone moves by v.
double step_residual(const Vec2& v, const VelocityProblem& pb);
/// Gradient of step_residual with respect to v.
Vec2 step_residual_gradient(const Vec2& v, const VelocityProblem& pb);

/// Drone velocity minimizing the next round's J + K. The closed-form weighted average
/// is refined with the weights re-evaluated at the post-move geometry until the
/// gradient of J + K vanishes.
VelocityStep optimal_velocity(const VelocityProblem& pb);

Vec2 project_velocity(const Vec2& v_hat, double v_max, ProjectionMode mode);

/// Largest ||p_{k+1} - p_k|| - v_max over consecutive waypoints (and the closing pair).
double max_speed_violation(const Trajectory& traj, double v_max);

struct GreedyResult {
    Trajectory trajectory;
    std::vector<VelocityStep> steps;
};

/// Start at the optimal stationary placement, then move by the projected
/// optimal velocity once per dwell. Open trajectory of T/kappa + 1 waypoints.
GreedyResult greedy_trajectory(const Scenario& s, ProjectionMode mode);
GreedyResult greedy_trajectory(const Scenario& s);

struct HorizonOptions {
    int max_iters = 400;
    double step = 1.0;  // m, initial largest waypoint displacement
    bool closed_loop = false;

    static HorizonOptions from(const SolverOptions& o) { return {o.horizon_iters, o.horizon_step, o.closed_loop}; }
};

struct HorizonResult {
    Trajectory trajectory;
    double atl = 0.0;
    double initial_atl = 0.0;
    int iterations = 0;
};

/// Projected-gradient minimization of the ATL over all waypoints subject to the
/// speed limit (and closure). Never returns a trajectory worse than its start.
/// Without `initial`: greedy output when open, stationary optimal placement when closed.
HorizonResult horizon_optimize(const Scenario& s, const HorizonOptions& opts,
                               const std::optional<Trajectory>& initial = std::nullopt);
HorizonResult horizon_optimize(const Scenario& s);

/// Drone follows the dataset-weighted centroid of the devices, speed-limited.
Trajectory baseline_weighted_centroid(const Scenario& s);
/// Drone follows the sum-rate maximizer, one gradient-ascent solve per waypoint from the previous one.
Trajectory baseline_max_rate(const Scenario& s);

}  // namespace skyfed
