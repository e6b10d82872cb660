#include "skyfed/placement.hpp"

#include "skyfed/bound.hpp"
#include "skyfed/channel.hpp"
#include "skyfed/error.hpp"
#include "skyfed/lp.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace skyfed {

PlacementProblem PlacementProblem::from(const Scenario& s, int round) {
    return {s.device_positions(round), s.devices, s.radio, s.constants};
}

namespace {

RoundTerms terms_at(const Vec2& p, const PlacementProblem& pb) {
    return round_terms_at(p, pb.positions, pb.devices, pb.radio, pb.constants);
}

// sum_i w_i de_i/dp for the given per-device weights.
Vec2 weighted_per_gradient(const Vec2& p, const PlacementProblem& pb, const std::vector<double>& w) {
    Vec2 g = Vec2::Zero();
    for (std::size_t i = 0; i < pb.devices.size(); ++i)
        g += w[i] * effective_per_gradient(p, pb.positions[i], pb.devices[i], pb.radio);
    return g;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double numerator_f(const Vec2& p, const PlacementProblem& pb) {
    auto t = terms_at(p, pb);
    return t.j + t.k;
}

double denominator_g(const Vec2& p, const PlacementProblem& pb) {
    return 1.0 - terms_at(p, pb).phi;
}

Vec2 grad_f(const Vec2& p, const PlacementProblem& pb) {
    return weighted_per_gradient(p, pb, per_sensitivity(pb.devices, pb.constants).residual);
}

Vec2 grad_g(const Vec2& p, const PlacementProblem& pb) {
    return -weighted_per_gradient(p, pb, per_sensitivity(pb.devices, pb.constants).contraction);
}

double placement_objective(const Vec2& p, const PlacementProblem& pb) {
    auto t = terms_at(p, pb);
    if (!t.contraction_ok) return kInf;
    return (t.j + t.k) / (1.0 - t.phi);
}

Vec2 weighted_centroid(const std::vector<Vec2>& positions, const std::vector<DeviceState>& devices) {
    Vec2 acc = Vec2::Zero();
    double total = 0.0;
    for (std::size_t i = 0; i < devices.size(); ++i) {
        const double w = static_cast<double>(devices[i].dataset_size);
        acc += w * positions[i];
        total += w;
    }
    return acc / total;
}

Vec2 weighted_centroid(const std::vector<DeviceState>& devices) {
    std::vector<Vec2> pos;
    for (const auto& d : devices) pos.push_back(d.position);
    return weighted_centroid(pos, devices);
}

Vec2 max_rate_point(const PlacementProblem& pb, const Vec2& start, int max_iters) {
    Vec2 p = start;
    double value = sum_rate(p, pb.positions, pb.devices, pb.radio);
    double step = 1.0;
    for (int it = 0; it < max_iters && step > 1e-7; ++it) {
        Vec2 g = sum_rate_gradient(p, pb.positions, pb.devices, pb.radio);
        const double gn = g.norm();
        if (gn == 0.0) break;
        Vec2 cand = p + step * g / gn;
        double v = sum_rate(cand, pb.positions, pb.devices, pb.radio);
        if (v > value) {
            p = cand;
            value = v;
            step *= 1.5;
        } else {
            step *= 0.5;
        }
    }
    return p;
}

Area device_area(const std::vector<Vec2>& positions) {
    Area a{positions.front(), positions.front()};
    for (const auto& p : positions) {
        a.lo = a.lo.cwiseMin(p);
        a.hi = a.hi.cwiseMax(p);
    }
    return a;
}

Vec2 grid_search_placement(const PlacementProblem& pb, int resolution, const Area& area) {
    if (resolution < 1) throw ValidationError("resolution", "must be >= 1");
    Vec2 best = area.lo;
    double best_obj = kInf;
    const int n = resolution;
    for (int ix = 0; ix < n; ++ix) {
        const double fx = n == 1 ? 0.5 : static_cast<double>(ix) / (n - 1);
        for (int iy = 0; iy < n; ++iy) {
            const double fy = n == 1 ? 0.5 : static_cast<double>(iy) / (n - 1);
            const Vec2 p(area.lo.x() + fx * (area.hi.x() - area.lo.x()), area.lo.y() + fy * (area.hi.y() - area.lo.y()));
            const double obj = placement_objective(p, pb);
            if (obj < best_obj) {
                best_obj = obj;
                best = p;
            }
        }
    }
    if (!std::isfinite(best_obj)) throw InfeasibleError("every grid cell violates Phi < 1");
    return best;
}

Vec2 grid_search_placement(const PlacementProblem& pb, int resolution) {
    return grid_search_placement(pb, resolution, device_area(pb.positions));
}

namespace {

PlacementResult run_from(const PlacementProblem& pb, Vec2 p, const PlacementOptions& opts) {
    PlacementResult res;
    double obj = placement_objective(p, pb);
    res.trace = {p};
    res.trace_objective = {obj};
    double radius = opts.trust_radius;
    // Any box with radius below this yields steps no longer than delta.
    const double stop_radius = opts.delta / (2.0 * std::numbers::sqrt2);

    while (res.iterations < opts.max_iters) {
        ++res.iterations;
        const double f0 = numerator_f(p, pb), g0 = denominator_g(p, pb);
        const Vec2 c = grad_f(p, pb), d = grad_g(p, pb);
        LinFrac frac{c, f0 - c.dot(p), d, g0 - d.dot(p), Box{p, radius}};

        // Shrink until the linearized denominator stays positive on the box.
        bool denominator_ok = false;
        while (!denominator_ok) {
            frac.box.radius = radius;
            denominator_ok = true;
            for (int k = 0; k < 4; ++k) denominator_ok = denominator_ok && frac.denominator(frac.box.corner(k)) > 0.0;
            if (!denominator_ok) {
                radius *= 0.5;
                if (radius < opts.min_radius)
                    throw InfeasibleError("linearized denominator non-positive on every trust box");
            }
        }

        // Trust-region safeguard: accept only exact-ratio decreases. After the first
        // improving radius keep halving while that keeps improving.
        Vec2 best = p;
        double best_obj = obj;
        double best_radius = radius;
        while (radius >= stop_radius) {
            frac.box.radius = radius;
            const Vec2 cand = charnes_cooper_min(frac);
            ++res.lp_solves;
            const double cand_obj = placement_objective(cand, pb);
            if (cand_obj < best_obj) {
                best = cand;
                best_obj = cand_obj;
                best_radius = radius;
            } else if (best_obj < obj) {
                break;
            }
            radius *= 0.5;
        }
        if (!(best_obj < obj)) {
            res.converged = true;  // no improving step longer than delta exists
            break;
        }
        const double step = (best - p).norm();
        p = best;
        obj = best_obj;
        radius = std::min(2.0 * best_radius, opts.trust_radius);
        res.trace.push_back(p);
        res.trace_objective.push_back(obj);
        if (step <= opts.delta) {
            res.converged = true;
            break;
        }
    }
    res.position = p;
    res.objective = obj;
    return res;
}

}  // namespace

PlacementResult optimize_placement(const PlacementProblem& pb, const PlacementOptions& opts) {
    Vec2 start = weighted_centroid(pb.positions, pb.devices);
    if (!std::isfinite(placement_objective(start, pb))) {
        // Coarse 21 x 21 feasibility scan for a contracting start.
        Area area = device_area(pb.positions);
        area.lo.array() -= 1.0;
        area.hi.array() += 1.0;
        start = grid_search_placement(pb, 21, area);
    }
    auto res = run_from(pb, start, opts);
    if (opts.rate_restart) {
        const Vec2 rate = max_rate_point(pb, weighted_centroid(pb.positions, pb.devices));
        if (placement_objective(rate, pb) < res.objective) {
            auto alt = run_from(pb, rate, opts);
            if (alt.objective < res.objective) {
                alt.iterations += res.iterations;
                alt.lp_solves += res.lp_solves;
                res = std::move(alt);
            }
        }
    }
    return res;
}

PlacementResult optimize_placement(const Scenario& s) {
    return optimize_placement(PlacementProblem::from(s), PlacementOptions::from(s.solver));
}

}  // namespace skyfed
