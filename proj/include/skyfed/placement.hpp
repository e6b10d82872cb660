#pragma once

#include "skyfed/scenario.hpp"

#include <vector>

namespace skyfed {

/// Device snapshot the stationary objective is evaluated on.
struct PlacementProblem {
    std::vector<Vec2> positions;
    std::vector<DeviceState> devices;
    RadioEnvironment radio;
    LearningConstants constants;

    /// Devices at their positions during 1-based `round`.
    static PlacementProblem from(const Scenario& s, int round = 1);
};

/// f = J + K for a drone hovering at p.
double numerator_f(const Vec2& p, const PlacementProblem& pb);
/// g = 1 - Phi.
double denominator_g(const Vec2& p, const PlacementProblem& pb);
Vec2 grad_f(const Vec2& p, const PlacementProblem& pb);
Vec2 grad_g(const Vec2& p, const PlacementProblem& pb);
/// Asymptotic loss f / g, or +inf where the bound does not contract (g <= 0).
double placement_objective(const Vec2& p, const PlacementProblem& pb);

Vec2 weighted_centroid(const std::vector<Vec2>& positions, const std::vector<DeviceState>& devices);
Vec2 weighted_centroid(const std::vector<DeviceState>& devices);

/// Sum-rate maximizer by gradient ascent from `start`.
Vec2 max_rate_point(const PlacementProblem& pb, const Vec2& start, int max_iters = 500);

struct PlacementResult {
    Vec2 position = Vec2::Zero();
    double objective = 0.0;
    int iterations = 0;  // linearizations performed
    int lp_solves = 0;
    bool converged = false;
    std::vector<Vec2> trace;  // accepted iterates, starting point first
    std::vector<double> trace_objective;
};

struct PlacementOptions {
    double delta = 0.01;
    double trust_radius = 5.0;
    int max_iters = 50;
    double min_radius = 1e-3;
    /// Also start from the sum-rate maximizer when it beats the centroid run.
    bool rate_restart = true;

    static PlacementOptions from(const SolverOptions& s) {
        return {s.delta, s.trust_radius, s.max_iters, 1e-3, true};
    }
};

/// Iterated linearization of f and g with a Charnes-Cooper LP step inside an
/// infinity-norm trust box, starting from the dataset-weighted centroid.
/// Steps that do not reduce the exact ratio shrink the box.
PlacementResult optimize_placement(const PlacementProblem& pb, const PlacementOptions& opts = {});
PlacementResult optimize_placement(const Scenario& s);

/// Bounding box of the device positions.
struct Area {
    Vec2 lo = Vec2::Zero();
    Vec2 hi = Vec2::Zero();
};
Area device_area(const std::vector<Vec2>& positions);

/// Exhaustive argmin of f / g on a resolution x resolution grid over `area`,
/// skipping cells where the bound does not contract.
Vec2 grid_search_placement(const PlacementProblem& pb, int resolution, const Area& area);
Vec2 grid_search_placement(const PlacementProblem& pb, int resolution);

}  // namespace skyfed
