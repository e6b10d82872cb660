#pragma once

#include "skyfed/scenario.hpp"

#include <Eigen/Core>

namespace skyfed {

/// Axis-aligned square trust region (infinity-norm ball).
struct Box {
    Vec2 center = Vec2::Zero();
    double radius = 1.0;

    Vec2 lo() const { return center.array() - radius; }
    Vec2 hi() const { return center.array() + radius; }
    Vec2 corner(int k) const;  // k in 0..3
    bool contains(const Vec2& p, double tol = 1e-9) const;
};

/// (c.p + beta) / (d.p + gamma) restricted to a box.
struct LinFrac {
    Vec2 num_c = Vec2::Zero();
    double num_beta = 0.0;
    Vec2 den_d = Vec2::Zero();
    double den_gamma = 1.0;
    Box box;

    double numerator(const Vec2& p) const { return num_c.dot(p) + num_beta; }
    double denominator(const Vec2& p) const { return den_d.dot(p) + den_gamma; }
    double ratio(const Vec2& p) const { return numerator(p) / denominator(p); }
};

/// Optimum of min obj.(q, z) s.t. eq.(q, z) = rhs, q / z in box, z >= z_min.
struct LpSolution {
    Eigen::Vector3d x = Eigen::Vector3d::Zero();  // (q_x, q_y, z)
    double objective = 0.0;
};

/// Exact solver by enumeration of the (at most 10) candidate vertices.
/// Throws InfeasibleError for an empty region and UnboundedError when the
/// equality row changes sign over the box.
LpSolution solve_box_lp(const Eigen::Vector3d& objective, const Eigen::Vector3d& eq_row, double eq_rhs,
                        const Box& box, double z_min = 1e-12);

/// Minimizer of a linear-fractional function over its box via the Charnes-Cooper transform.
Vec2 charnes_cooper_min(const LinFrac& frac);

}  // namespace skyfed
