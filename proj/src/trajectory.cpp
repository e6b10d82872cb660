#include "skyfed/trajectory.hpp"

#include "skyfed/bound.hpp"
#include "skyfed/channel.hpp"
#include "skyfed/error.hpp"
#include "skyfed/placement.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>

namespace skyfed {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Vec2> moved_devices(const VelocityProblem& pb) {
    std::vector<Vec2> out(pb.device_pos.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pb.device_pos[i] + pb.device_step[i];
    return out;
}

// Closed-form weight: d(J+K)/de_i times the scalar s with de_i/dp = s (p - x_i),
// evaluated with the always-LoS gain at the given geometry.
double closed_form_weight(const Vec2& drone, const Vec2& device_pos, const DeviceState& device,
                          const RadioEnvironment& radio, double residual) {
    if (device.per_override) return 0.0;
    const double d = link_distance(drone, device_pos, radio);
    const double alpha = radio.pathloss_exp;
    const double k = radio.waterfall * radio.bandwidth * radio.noise_psd / (gain_constant(device, radio) * device.tx_power);
    return residual * k * alpha * std::pow(d, alpha - 2.0) * std::exp(-k * std::pow(d, alpha));
}

Eigen::Matrix2d residual_hessian(const Vec2& v, const VelocityProblem& pb) {
    const double h = 1e-5;
    Eigen::Matrix2d H;
    for (int k = 0; k < 2; ++k) {
        Vec2 e = Vec2::Zero();
        e[k] = h;
        H.col(k) = (step_residual_gradient(v + e, pb) - step_residual_gradient(v - e, pb)) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
}

// Fixed-point map of the stationarity condition with weights at the post-move geometry.
std::optional<Vec2> fixed_point_map(const Vec2& v, const VelocityProblem& pb, const PerSensitivity& sens) {
    Vec2 num = Vec2::Zero();
    double den = 0.0;
    const Vec2 drone = pb.drone + v;
    for (std::size_t i = 0; i < pb.devices.size(); ++i) {
        const Vec2 target = pb.device_pos[i] + pb.device_step[i];
        const double w = closed_form_weight(drone, target, pb.devices[i], pb.radio, sens.residual[i]);
        num += w * (target - pb.drone);
        den += w;
    }
    if (std::abs(den) < 1e-300) return std::nullopt;
    return Vec2(num / den);
}

// Drives the gradient of J + K to zero from `v`: damped Newton on the gradient norm with the
// fixed-point map as fallback.
Vec2 polish(Vec2 v, const VelocityProblem& pb, const PerSensitivity& sens, double tol, bool& ok) {
    Vec2 g = step_residual_gradient(v, pb);
    const bool los_only = pb.radio.los_model == LosModel::kAlwaysLos;
    for (int it = 0; it < 200 && g.norm() > tol; ++it) {
        bool moved = false;
        const Eigen::Matrix2d H = residual_hessian(v, pb);
        if (std::abs(H.determinant()) > 0.0) {
            const Vec2 step = -H.fullPivLu().solve(g);
            double a = 1.0;
            for (int k = 0; k < 40 && step.allFinite(); ++k, a *= 0.5) {
                const Vec2 cand = v + a * step;
                const Vec2 gc = step_residual_gradient(cand, pb);
                if (gc.norm() < g.norm()) {
                    v = cand;
                    g = gc;
                    moved = true;
                    break;
                }
            }
        }
        if (!moved && los_only) {
            if (auto next = fixed_point_map(v, pb, sens)) {
                const Vec2 gc = step_residual_gradient(*next, pb);
                if (gc.norm() < g.norm()) {
                    v = *next;
                    g = gc;
                    moved = true;
                }
            }
        }
        if (!moved) break;
    }
    ok = g.norm() <= tol;
    return v;
}

}  // namespace

double step_residual(const Vec2& v, const VelocityProblem& pb) {
    auto t = round_terms_at(pb.drone + v, moved_devices(pb), pb.devices, pb.radio, pb.constants);
    return t.j + t.k;
}

Vec2 step_residual_gradient(const Vec2& v, const VelocityProblem& pb) {
    const auto sens = per_sensitivity(pb.devices, pb.constants);
    Vec2 g = Vec2::Zero();
    for (std::size_t i = 0; i < pb.devices.size(); ++i)
        g += sens.residual[i] *
             effective_per_gradient(pb.drone + v, pb.device_pos[i] + pb.device_step[i], pb.devices[i], pb.radio);
    return g;
}

VelocityStep optimal_velocity(const VelocityProblem& pb) {
    if (pb.device_pos.size() != pb.devices.size() || pb.device_step.size() != pb.devices.size())
        throw ValidationError("devices", "positions, steps and devices differ in length");
    const auto sens = per_sensitivity(pb.devices, pb.constants);
    VelocityStep out;
    out.weights.resize(pb.devices.size());
    Vec2 num = Vec2::Zero();
    double den = 0.0;
    for (std::size_t i = 0; i < pb.devices.size(); ++i) {
        const double w = closed_form_weight(pb.drone, pb.device_pos[i], pb.devices[i], pb.radio, sens.residual[i]);
        out.weights[i] = w;
        // v_i - x~_i with x~_i = drone - device
        num += w * (pb.device_step[i] - (pb.drone - pb.device_pos[i]));
        den += w;
    }
    if (!(std::abs(den) >= 1e-12)) {
        out.degenerate = true;
        out.stationary = false;
        return out;
    }
    out.v_closed = num / den;
    if (!out.v_closed.allFinite()) out.v_closed = Vec2::Zero();

    const double tol = 1e-12 * (1.0 + step_residual_gradient(Vec2::Zero(), pb).norm());
    bool ok = false;
    Vec2 v = polish(out.v_closed, pb, sens, tol, ok);
    if (!ok) {
        bool ok0 = false;
        Vec2 v0 = polish(Vec2::Zero(), pb, sens, tol, ok0);
        if (ok0 || step_residual_gradient(v0, pb).norm() < step_residual_gradient(v, pb).norm()) {
            v = v0;
            ok = ok0;
        }
    }
    out.v_hat = v;
    // The Newton polish stalls at roundoff; anything this small passes any sane stationarity check.
    out.stationary = ok || step_residual_gradient(v, pb).norm() <= 1e-9 * (1.0 + tol);
    return out;
}

Vec2 project_velocity(const Vec2& v_hat, double v_max, ProjectionMode mode) {
    if (v_max < 0.0) throw ValidationError("v_max", "must be nonnegative");
    if (mode == ProjectionMode::kComponentwise) {
        const double c = v_max / std::numbers::sqrt2;
        return v_hat.cwiseMax(Vec2(-c, -c)).cwiseMin(Vec2(c, c));
    }
    const double n = v_hat.norm();
    if (n <= v_max) return v_hat;
    return v_hat * (v_max / n);
}

double max_speed_violation(const Trajectory& traj, double v_max) {
    double worst = -v_max;
    for (std::size_t k = 1; k < traj.waypoints.size(); ++k)
        worst = std::max(worst, (traj.waypoints[k] - traj.waypoints[k - 1]).norm() - v_max);
    return worst;
}

namespace {

int waypoint_steps(const Scenario& s) {
    if (s.dwell < 1 || s.horizon % s.dwell != 0) throw ValidationError("horizon", "T must be divisible by kappa");
    return s.horizon / s.dwell;
}

// First round spent at waypoint k.
int first_round(const Scenario& s, int k) {
    return k * s.dwell + 1;
}

}  // namespace

GreedyResult greedy_trajectory(const Scenario& s, ProjectionMode mode) {
    const int K = waypoint_steps(s);
    GreedyResult out;
    out.trajectory.dwell = s.dwell;
    out.trajectory.waypoints.push_back(optimize_placement(s).position);
    for (int k = 1; k <= K; ++k) {
        VelocityProblem pb;
        pb.drone = out.trajectory.waypoints.back();
        pb.device_pos = s.device_positions(first_round(s, k - 1));
        const auto next = s.device_positions(first_round(s, k));
        for (std::size_t i = 0; i < next.size(); ++i) pb.device_step.push_back(next[i] - pb.device_pos[i]);
        pb.devices = s.devices;
        pb.radio = s.radio;
        pb.constants = s.constants;
        auto step = optimal_velocity(pb);
        step.v_star = project_velocity(step.v_hat, s.v_max, mode);
        out.trajectory.waypoints.push_back(pb.drone + step.v_star);
        out.steps.push_back(std::move(step));
    }
    return out;
}

GreedyResult greedy_trajectory(const Scenario& s) {
    return greedy_trajectory(s, s.solver.projection);
}

namespace {

// Cyclic projections onto the pairwise speed constraints over variables p_0..p_{n-1}
// (plus the pair (p_{n-1}, p_0) when closed).
void project_speed(std::vector<Vec2>& p, double v_max, bool closed) {
    const std::size_t n = p.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double worst = 0.0;
        const std::size_t pairs = closed && n > 1 ? n : n - 1;
        for (std::size_t k = 0; k < pairs; ++k) {
            Vec2& a = p[k];
            Vec2& b = p[(k + 1) % n];
            const Vec2 diff = b - a;
            const double len = diff.norm();
            if (len <= v_max) continue;
            worst = std::max(worst, len - v_max);
            const Vec2 mid = 0.5 * (a + b);
            const Vec2 half = diff * (0.5 * v_max / len);
            a = mid - half;
            b = mid + half;
        }
        if (worst <= 1e-13) break;
    }
}

double violation(const std::vector<Vec2>& p, double v_max, bool closed) {
    const std::size_t n = p.size();
    double worst = 0.0;
    const std::size_t pairs = closed && n > 1 ? n : n - 1;
    for (std::size_t k = 0; k < pairs; ++k) worst = std::max(worst, (p[(k + 1) % n] - p[k]).norm() - v_max);
    return worst;
}

Trajectory assemble(const std::vector<Vec2>& vars, int dwell, bool closed) {
    Trajectory t;
    t.dwell = dwell;
    t.closed = closed;
    t.waypoints = vars;
    // The last waypoint is never dwelt on within the horizon: closed loops return to the
    // start, open ones stay put.
    t.waypoints.push_back(closed ? vars.front() : vars.back());
    return t;
}

double feasible_atl(const Trajectory& t, const Scenario& s, const std::vector<std::vector<Vec2>>& traces) {
    auto r = atl(t, traces, s.devices, s.radio, s.constants, s.horizon);
    return r.contraction_ok ? r.value : kInf;
}

}  // namespace

HorizonResult horizon_optimize(const Scenario& s, const HorizonOptions& opts, const std::optional<Trajectory>& initial) {
    const int K = waypoint_steps(s);
    const auto traces = s.device_traces();
    const double tol = 1e-9;

    std::vector<Vec2> x;
    if (initial) {
        if (static_cast<int>(initial->waypoints.size()) < K)
            throw ValidationError("waypoints", "initial trajectory has fewer than T/kappa waypoints");
        x.assign(initial->waypoints.begin(), initial->waypoints.begin() + K);
    } else if (opts.closed_loop) {
        x.assign(static_cast<std::size_t>(K), optimize_placement(s).position);
    } else {
        const auto g = greedy_trajectory(s).trajectory;
        x.assign(g.waypoints.begin(), g.waypoints.begin() + K);
    }
    if (violation(x, s.v_max, opts.closed_loop) > tol)
        throw InfeasibleError("initial trajectory violates the speed limit");

    HorizonResult out;
    double value = feasible_atl(assemble(x, s.dwell, opts.closed_loop), s, traces);
    if (!std::isfinite(value)) throw InfeasibleError("initial trajectory does not contract");
    out.initial_atl = value;

    double step = opts.step;
    for (int it = 0; it < opts.max_iters && step > 1e-9; ++it) {
        ++out.iterations;
        const auto grad = atl_gradient(assemble(x, s.dwell, opts.closed_loop), traces, s.devices, s.radio,
                                       s.constants, s.horizon);
        double gmax = 0.0;
        for (int k = 0; k < K; ++k) gmax = std::max(gmax, grad.waypoints[static_cast<std::size_t>(k)].norm());
        if (gmax == 0.0) break;

        std::vector<Vec2> cand(x.size());
        for (int k = 0; k < K; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            cand[kk] = x[kk] - step / gmax * grad.waypoints[kk];
        }
        project_speed(cand, s.v_max, opts.closed_loop);
        if (violation(cand, s.v_max, opts.closed_loop) > tol) {
            // Cyclic projection did not settle: back off along the segment towards the
            // feasible current iterate until the limit holds.
            std::vector<Vec2> trial(x.size());
            double lo = 0.0, hi = 1.0;
            for (int b = 0; b < 50; ++b) {
                const double mid = 0.5 * (lo + hi);
                for (std::size_t k = 0; k < x.size(); ++k) trial[k] = x[k] + mid * (cand[k] - x[k]);
                (violation(trial, s.v_max, opts.closed_loop) <= tol ? lo : hi) = mid;
            }
            for (std::size_t k = 0; k < x.size(); ++k) cand[k] = x[k] + lo * (cand[k] - x[k]);
        }
        const double cv = feasible_atl(assemble(cand, s.dwell, opts.closed_loop), s, traces);
        if (cv < value) {
            x = std::move(cand);
            value = cv;
            step *= 2.0;
        } else {
            step *= 0.5;
        }
    }
    out.trajectory = assemble(x, s.dwell, opts.closed_loop);
    out.atl = value;
    return out;
}

HorizonResult horizon_optimize(const Scenario& s) {
    return horizon_optimize(s, HorizonOptions::from(s.solver));
}

Trajectory baseline_weighted_centroid(const Scenario& s) {
    const int K = waypoint_steps(s);
    Trajectory t;
    t.dwell = s.dwell;
    t.waypoints.push_back(weighted_centroid(s.device_positions(1), s.devices));
    for (int k = 1; k <= K; ++k) {
        const Vec2 target = weighted_centroid(s.device_positions(first_round(s, k)), s.devices);
        const Vec2 prev = t.waypoints.back();
        t.waypoints.push_back(prev + project_velocity(target - prev, s.v_max, s.solver.projection));
    }
    return t;
}

Trajectory baseline_max_rate(const Scenario& s) {
    const int K = waypoint_steps(s);
    Trajectory t;
    t.dwell = s.dwell;
    auto pb = PlacementProblem::from(s, 1);
    t.waypoints.push_back(max_rate_point(pb, weighted_centroid(pb.positions, pb.devices)));
    for (int k = 1; k <= K; ++k) {
        pb = PlacementProblem::from(s, first_round(s, k));
        const Vec2 prev = t.waypoints.back();
        const Vec2 target = max_rate_point(pb, prev);
        t.waypoints.push_back(prev + project_velocity(target - prev, s.v_max, s.solver.projection));
    }
    return t;
}

}  // namespace skyfed
