#include "oracles.hpp"

#include "skyfed/bound.hpp"
#include "skyfed/channel.hpp"
#include "skyfed/placement.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace skyfed;

namespace {

long double oracle_ratio(const Vec2& p, const PlacementProblem& pb) {
    std::vector<double> e;
    for (std::size_t i = 0; i < pb.devices.size(); ++i)
        e.push_back(static_cast<double>(oracle::per(p, pb.positions[i], pb.devices[i], pb.radio)));
    const auto t = oracle::terms(e, pb.devices, pb.constants);
    if (t.phi >= 1.0L) return std::numeric_limits<long double>::infinity();
    return (t.j + t.k) / (1.0L - t.phi);
}

}  // namespace

TEST_CASE("f and g limiting case and consistency with the bound terms") {
    auto pb = PlacementProblem::from(oracle::stationary_scenario(1));
    const Vec2 c = weighted_centroid(pb.positions, pb.devices);
    const auto t = round_terms_at(c, pb.positions, pb.devices, pb.radio, pb.constants);
    CHECK(numerator_f(c, pb) / denominator_g(c, pb) ==
          doctest::Approx((t.j + t.k) / (1.0 - t.phi)).epsilon(1e-12));
    CHECK(placement_objective(c, pb) == doctest::Approx(static_cast<double>(oracle_ratio(c, pb))).epsilon(1e-11));

    for (auto& d : pb.devices) {
        d.per_override = 0.0;
        d.noise_var = 0.0;
    }
    CHECK(numerator_f(c, pb) == 0.0);
    CHECK(denominator_g(c, pb) == doctest::Approx(pb.constants.strong_convexity / pb.constants.lipschitz));
}

TEST_CASE("weighted centroid") {
    std::vector<DeviceState> d(2);
    d[0].position = Vec2(0, 0);
    d[1].position = Vec2(4, 2);
    CHECK(weighted_centroid(d).isApprox(Vec2(2, 1)));
    CHECK(weighted_centroid({d[1]}).isApprox(Vec2(4, 2)));

    // D = (1000, 200, 300, 700, 800) on a fixed layout, by hand.
    std::vector<DeviceState> five(5);
    const long D[5] = {1000, 200, 300, 700, 800};
    const Vec2 P[5] = {Vec2(10, 12), Vec2(60, 8), Vec2(15, 62), Vec2(35, 40), Vec2(62, 58)};
    for (int i = 0; i < 5; ++i) {
        five[i].dataset_size = D[i];
        five[i].position = P[i];
    }
    CHECK(weighted_centroid(five).isApprox(Vec2(100600.0 / 3000.0, 106600.0 / 3000.0)));
}

TEST_CASE("grad f and grad g match finite differences") {
    for (int n = 0; n < 200; ++n) {
        const auto s = oracle::stationary_scenario(300 + static_cast<std::uint64_t>(n));
        const auto pb = PlacementProblem::from(s);
        Rng rng(static_cast<std::uint64_t>(n), "placement-fd");
        const Vec2 p(rng.uniform(0, 70), rng.uniform(0, 70));
        const Vec2 fdf = oracle::fd_gradient([&](const Vec2& q) { return numerator_f(q, pb); }, p, 1e-4);
        const Vec2 fdg = oracle::fd_gradient([&](const Vec2& q) { return denominator_g(q, pb); }, p, 1e-4);
        CHECK(oracle::rel_err(grad_f(p, pb), fdf, 1e-14) < 1e-6);
        CHECK(oracle::rel_err(grad_g(p, pb), fdg, 1e-14) < 1e-6);
    }
}

TEST_CASE("gradients vanish straight above a single device; noiseless g is collinear with f") {
    auto s = oracle::stationary_scenario(2);
    s.devices.resize(1);
    auto pb = PlacementProblem::from(s);
    CHECK(grad_f(pb.positions[0], pb).norm() == 0.0);
    CHECK(grad_g(pb.positions[0], pb).norm() == 0.0);

    pb = PlacementProblem::from(oracle::stationary_scenario(3));
    for (auto& d : pb.devices) d.noise_var = 0.0;
    const Vec2 p(20, 30);
    const Vec2 a = grad_f(p, pb), b = grad_g(p, pb);
    CHECK(std::abs(a.x() * b.y() - a.y() * b.x()) <= 1e-9 * a.norm() * b.norm());
    CHECK(a.dot(b) < 0.0);
}

TEST_CASE("single device placement converges overhead") {
    auto s = oracle::stationary_scenario(4);
    s.devices.resize(1);
    s.devices[0].position = Vec2(12, 34);
    const auto r = optimize_placement(s);
    CHECK(r.converged);
    CHECK((r.position - Vec2(12, 34)).norm() <= s.solver.delta);
}

TEST_CASE("symmetric pair converges to the midpoint") {
    Scenario s;
    DeviceState d;
    d.dataset_size = 300;
    d.noise_var = 0.1;
    d.fading_mean = 0.6;
    d.position = Vec2(0, 0);
    s.devices.push_back(d);
    d.position = Vec2(30, 10);
    s.devices.push_back(d);
    const auto r = optimize_placement(s);
    CHECK((r.position - Vec2(15, 5)).norm() <= s.solver.delta);
}

TEST_CASE("placement beats both reference points and every accepted step descends") {
    for (int n = 0; n < 20; ++n) {
        const auto s = oracle::stationary_scenario(400 + static_cast<std::uint64_t>(n));
        const auto pb = PlacementProblem::from(s);
        const auto r = optimize_placement(s);
        const Vec2 c = weighted_centroid(pb.positions, pb.devices);
        CHECK(r.objective <= placement_objective(c, pb) + 1e-15);
        CHECK(r.objective <= placement_objective(max_rate_point(pb, c), pb) + 1e-15);
        for (std::size_t k = 1; k < r.trace_objective.size(); ++k)
            CHECK(r.trace_objective[k] <= r.trace_objective[k - 1]);
    }
}

TEST_CASE("placement lands within two cells of an independent 201 x 201 grid argmin") {
    int hits = 0;
    std::vector<int> iters;
    for (int n = 0; n < 20; ++n) {
        const auto s = oracle::stationary_scenario(500 + static_cast<std::uint64_t>(n));
        const auto pb = PlacementProblem::from(s);
        Vec2 lo = pb.positions[0], hi = pb.positions[0];
        for (const auto& p : pb.positions) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        const Vec2 cell = (hi - lo) / 200.0;
        long double best = std::numeric_limits<long double>::infinity();
        Vec2 arg = lo;
        for (int i = 0; i <= 200; ++i)
            for (int j = 0; j <= 200; ++j) {
                const Vec2 p = lo + Vec2(i * cell.x(), j * cell.y());
                const auto v = oracle_ratio(p, pb);
                if (v < best) best = v, arg = p;
            }
        const auto r = optimize_placement(s);
        iters.push_back(r.iterations);
        hits += std::abs(r.position.x() - arg.x()) <= 2 * cell.x() + 1e-9 &&
                std::abs(r.position.y() - arg.y()) <= 2 * cell.y() + 1e-9;
        // Finer grids never do worse.
        CHECK(placement_objective(grid_search_placement(pb, 41), pb) <=
              placement_objective(grid_search_placement(pb, 21), pb) + 1e-15);
    }
    std::sort(iters.begin(), iters.end());
    CHECK(hits >= 18);
    CHECK(iters[iters.size() / 2] <= 10);
}

TEST_CASE("grid search on a single device returns the nearest grid point") {
    PlacementProblem pb = PlacementProblem::from(oracle::stationary_scenario(5));
    pb.devices.resize(1);
    pb.positions = {Vec2(3.3, 7.7)};
    const Vec2 g = grid_search_placement(pb, 11, Area{Vec2(0, 0), Vec2(10, 10)});
    CHECK(g.isApprox(Vec2(3, 8)));
}
