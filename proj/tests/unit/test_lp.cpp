#include "skyfed/error.hpp"
#include "skyfed/lp.hpp"
#include "skyfed/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace skyfed;

namespace {

// A linear-fractional function with a positive denominator is quasi-linear, so its
// minimum over a box sits at one of the four corners.
double corner_min(const LinFrac& f) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; ++k) best = std::min(best, f.ratio(f.box.corner(k)));
    return best;
}

double grid_min(const LinFrac& f, int n) {
    double best = std::numeric_limits<double>::infinity();
    const Vec2 lo = f.box.lo();
    const double step = 2 * f.box.radius / (n - 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) best = std::min(best, f.ratio(lo + Vec2(i * step, j * step)));
    return best;
}

LinFrac random_frac(Rng& rng, double radius) {
    LinFrac f;
    f.box.center = Vec2(rng.uniform(-50, 50), rng.uniform(-50, 50));
    f.box.radius = radius;
    f.num_c = Vec2(rng.normal(), rng.normal());
    f.num_beta = rng.normal() * 10;
    f.den_d = Vec2(rng.normal(), rng.normal()) * 0.01;
    // Keep the denominator positive on the whole box.
    const double lowest = std::min({f.den_d.dot(f.box.corner(0)), f.den_d.dot(f.box.corner(1)),
                                    f.den_d.dot(f.box.corner(2)), f.den_d.dot(f.box.corner(3))});
    f.den_gamma = -lowest + rng.uniform(0.1, 2.0);
    return f;
}

}  // namespace

TEST_CASE("objective aligned with a corner picks that corner") {
    Box box{Vec2(1, 2), 0.5};
    const auto sol = solve_box_lp(Eigen::Vector3d(1, 1, 0), Eigen::Vector3d(0, 0, 1), 1.0, box);
    CHECK((sol.x.head<2>() / sol.x.z()).isApprox(box.corner(0)));
    const auto up = solve_box_lp(Eigen::Vector3d(-1, -1, 0), Eigen::Vector3d(0, 0, 1), 1.0, box);
    CHECK((up.x.head<2>() / up.x.z()).isApprox(box.corner(3)));
}

TEST_CASE("flat objective returns the box center") {
    Box box{Vec2(3, -4), 2.0};
    const auto sol = solve_box_lp(Eigen::Vector3d::Zero(), Eigen::Vector3d(0.1, 0.0, 1.0), 1.0, box);
    CHECK((sol.x.head<2>() / sol.x.z()).isApprox(box.center));
}

TEST_CASE("sign changes and empty boxes are reported") {
    Box box{Vec2(0, 0), 1.0};
    CHECK_THROWS_AS(solve_box_lp(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(1, 0, 0), 1.0, box), UnboundedError);
    CHECK_THROWS_AS(solve_box_lp(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 0, -1), 1.0, box), InfeasibleError);
    CHECK_THROWS_AS(solve_box_lp(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 0, 1), 1.0, Box{Vec2(0, 0), -1.0}),
                    InfeasibleError);
}

TEST_CASE("lp optimum equals the best box corner ratio") {
    Rng rng(31, "lp-vertices");
    for (int n = 0; n < 500; ++n) {
        const auto f = random_frac(rng, 0.5);
        const auto sol = solve_box_lp(Eigen::Vector3d(f.num_c.x(), f.num_c.y(), f.num_beta),
                                      Eigen::Vector3d(f.den_d.x(), f.den_d.y(), f.den_gamma), 1.0, f.box);
        CHECK(sol.objective == doctest::Approx(corner_min(f)).epsilon(1e-10));
        // Equality row holds at the returned point.
        CHECK(f.den_d.dot(sol.x.head<2>()) + f.den_gamma * sol.x.z() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("charnes cooper limiting cases") {
    LinFrac f;
    f.box = Box{Vec2(0, 0), 1.0};
    f.num_beta = 1.0;
    f.den_d = Vec2(0.2, 0.1);
    f.den_gamma = 1.0;
    CHECK(charnes_cooper_min(f).isApprox(Vec2(1, 1)));  // constant numerator: largest denominator

    f.num_c = Vec2(1, -2);
    f.den_d = Vec2::Zero();
    CHECK(charnes_cooper_min(f).isApprox(Vec2(-1, 1)));  // constant denominator: corner along -c
}

TEST_CASE("charnes cooper agrees with a dense grid and never loses to the center") {
    Rng rng(32, "cc-grid");
    for (int n = 0; n < 100; ++n) {
        auto f = random_frac(rng, rng.uniform(0.1, 10.0));
        const Vec2 p = charnes_cooper_min(f);
        CHECK(f.box.contains(p));
        CHECK(f.ratio(p) <= grid_min(f, 101) + 1e-9);
        CHECK(f.ratio(p) <= f.ratio(f.box.center) + 1e-12);

        // Argmin invariance under a common positive scaling.
        LinFrac g = f;
        g.num_c *= 3.7;
        g.num_beta *= 3.7;
        g.den_d *= 3.7;
        g.den_gamma *= 3.7;
        CHECK((charnes_cooper_min(g) - p).norm() < 1e-9 * (1 + p.norm()));
    }
}
