#include "skyfed/lp.hpp"

#include "skyfed/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

namespace skyfed {

Vec2 Box::corner(int k) const {
    return {k & 1 ? center.x() + radius : center.x() - radius, k & 2 ? center.y() + radius : center.y() - radius};
}

bool Box::contains(const Vec2& p, double tol) const {
    return ((p - center).cwiseAbs().array() <= radius + tol).all();
}

LpSolution solve_box_lp(const Eigen::Vector3d& objective, const Eigen::Vector3d& eq_row, double eq_rhs,
                        const Box& box, double z_min) {
    if (!(box.radius >= 0.0) || !box.center.allFinite()) throw InfeasibleError("trust box is empty");
    if (!(eq_rhs > 0.0)) throw ValidationError("eq_rhs", "equality right-hand side must be positive");

    // The feasible set is {(p z, z) : p in box, z = rhs / (eq.(p, 1))}; it is a bounded
    // polytope exactly when eq.(p, 1) keeps a positive sign over the box.
    double den_min = std::numeric_limits<double>::infinity();
    double den_max = -den_min;
    for (int k = 0; k < 4; ++k) {
        const Vec2 c = box.corner(k);
        const double v = eq_row.head<2>().dot(c) + eq_row.z();
        den_min = std::min(den_min, v);
        den_max = std::max(den_max, v);
    }
    if (den_max <= 0.0) throw InfeasibleError("equality constraint unsatisfiable with z > 0 on the box");
    if (den_min <= 0.0) throw UnboundedError("denominator changes sign on the box");

    const Vec2 lo = box.lo(), hi = box.hi();
    // Inequalities a.x >= b over x = (q_x, q_y, z).
    const std::array<Eigen::Vector3d, 5> rows{
        Eigen::Vector3d(1, 0, -lo.x()), Eigen::Vector3d(-1, 0, hi.x()),
        Eigen::Vector3d(0, 1, -lo.y()), Eigen::Vector3d(0, -1, hi.y()),
        Eigen::Vector3d(0, 0, 1)};
    const std::array<double, 5> rhs{0, 0, 0, 0, z_min};

    const double scale = eq_row.cwiseAbs().maxCoeff() * (1.0 + box.center.cwiseAbs().maxCoeff() + box.radius);
    std::optional<LpSolution> best;
    double worst = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < 5; ++a) {
        for (int b = a + 1; b < 5; ++b) {
            Eigen::Matrix3d A;
            A.row(0) = eq_row.transpose();
            A.row(1) = rows[a].transpose();
            A.row(2) = rows[b].transpose();
            Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
            if (!lu.isInvertible()) continue;
            const Eigen::Vector3d x = lu.solve(Eigen::Vector3d(eq_rhs, rhs[a], rhs[b]));
            if (!x.allFinite()) continue;
            const double tol = 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff()) * std::max(1.0, scale);
            bool feasible = true;
            for (int k = 0; k < 5 && feasible; ++k) feasible = rows[k].dot(x) >= rhs[k] - tol;
            if (!feasible) continue;
            const double obj = objective.dot(x);
            worst = std::max(worst, obj);
            if (!best || obj < best->objective) best = LpSolution{x, obj};
        }
    }
    if (!best) throw InfeasibleError("no feasible vertex");

    // Flat objective: every feasible point is optimal; answer with the box center.
    const double spread = worst - best->objective;
    if (spread <= 1e-14 * std::max(1.0, std::abs(best->objective))) {
        const double z = eq_rhs / (eq_row.head<2>().dot(box.center) + eq_row.z());
        Eigen::Vector3d x(box.center.x() * z, box.center.y() * z, z);
        return {x, objective.dot(x)};
    }
    return *best;
}

Vec2 charnes_cooper_min(const LinFrac& frac) {
    if (!(frac.box.radius > 0.0)) throw ValidationError("radius", "trust radius must be positive");
    const Eigen::Vector3d objective(frac.num_c.x(), frac.num_c.y(), frac.num_beta);
    const Eigen::Vector3d eq(frac.den_d.x(), frac.den_d.y(), frac.den_gamma);
    const auto sol = solve_box_lp(objective, eq, 1.0, frac.box);
    Vec2 p = sol.x.head<2>() / sol.x.z();
    // Map roundoff back into the box.
    return p.cwiseMax(frac.box.lo()).cwiseMin(frac.box.hi());
}

}  // namespace skyfed
