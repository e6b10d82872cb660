#include "skyfed/error.hpp"
#include "skyfed/rng.hpp"
#include "skyfed/scenario.hpp"

#include <doctest.h>

#include <cmath>

using namespace skyfed;

namespace {

const char* kMinimal = R"(
[device]
x = 1
y = 2
dataset_size = 10
)";

}  // namespace

TEST_CASE("minimal scenario takes the reference radio defaults") {
    const auto s = parse_scenario(kMinimal);
    REQUIRE(s.devices.size() == 1);
    CHECK(s.radio.altitude == 20.0);
    CHECK(s.radio.noise_psd == doctest::Approx(std::pow(10.0, -17.4)).epsilon(1e-15));
    CHECK(s.radio.carrier == 1e9);
    CHECK(s.radio.waterfall == 0.053);
    CHECK(s.radio.pathloss_exp == 3.4);
    CHECK(s.radio.bandwidth == 2.5e6);
    CHECK(s.devices[0].tx_power == 0.1);
    CHECK(s.devices[0].fading_mean >= 0.1);
    CHECK(s.devices[0].fading_mean <= 1.0);
    CHECK(s.effective_learning_rate() == doctest::Approx(1.0 / s.constants.lipschitz));
}

TEST_CASE("default radio environment equals the parsed defaults") {
    CHECK(parse_scenario(kMinimal).radio == RadioEnvironment{});
}

TEST_CASE("zero dataset size is rejected naming the field") {
    try {
        parse_scenario("[device]\ndataset_size = 0\n");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "dataset_size");
    }
}

TEST_CASE("horizon must be divisible by the dwell") {
    CHECK_THROWS_AS(parse_scenario(std::string("[run]\nhorizon = 10\ndwell = 3\n") + kMinimal), ValidationError);
}

TEST_CASE("syntax errors carry the line number") {
    try {
        parse_scenario("[run]\nhorizon 10\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_scenario("[nope]\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("[run]\nbogus = 1\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("[run]\nseed = 1\nseed = 2\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("[run]\nhorizon = ten\n"), ParseError);
}

TEST_CASE("invalid invariants never escape as anything but library errors") {
    for (const char* bad : {"[device]\nnoise_var = -1\n", "[device]\nfading_mean = 0\n", "[device]\ntx_power = 0\n",
                            "[learning]\nmu = 2\nL = 1\n[device]\n", "[radio]\naltitude = -3\n[device]\n", ""})
        CHECK_THROWS_AS(parse_scenario(bad), Error);
}

TEST_CASE("serialize then parse is the identity") {
    auto s = parse_scenario(std::string(R"(
[run]
horizon = 40
dwell = 8
seed = 99
model = quadratic
target_loss = 0.25
[radio]
los_model = mixture
altitude = 55.5
[learning]
c1 = 0.3
[device]
x = -3.25
y = 1e-3
vx = 0.05
dataset_size = 17
psnr_db = 12
per_override = 0.125
[device]
x = 40
y = 41
dataset_size = 3
fading_mean = 0.3333333333333333
)"));
    const auto again = parse_scenario(serialize_scenario(s));
    CHECK(again == s);
}

TEST_CASE("psnr to variance") {
    CHECK(psnr_to_variance(0.0, 1.0) == 1.0);
    CHECK(psnr_to_variance(30.0, 1.0) == doctest::Approx(0.001).epsilon(1e-14));
    CHECK(psnr_to_variance(5.0, 1.0) == doctest::Approx(0.31622776601683794).epsilon(1e-14));
    CHECK(psnr_to_variance(10.0, 2.0) == doctest::Approx(0.4));
    double prev = psnr_to_variance(-20.0);
    for (double p = -19.5; p <= 60.0; p += 0.5) {
        const double v = psnr_to_variance(p);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("seed override redraws the seeded defaults") {
    const auto a = parse_scenario(kMinimal, 5);
    const auto b = parse_scenario(kMinimal, 5);
    const auto c = parse_scenario(kMinimal, 6);
    CHECK(a.seed == 5);
    CHECK(a.devices[0].fading_mean == b.devices[0].fading_mean);
    CHECK(a.devices[0].fading_mean != c.devices[0].fading_mean);
}

TEST_CASE("rng streams are reproducible and separated by label") {
    Rng a(42, "alpha"), b(42, "alpha"), c(42, "beta"), d(42, "alpha", {1});
    bool differs_label = false, differs_index = false;
    for (int k = 0; k < 100; ++k) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        differs_label |= x != c.uniform();
        differs_index |= x != d.uniform();
    }
    CHECK(differs_label);
    CHECK(differs_index);
}

TEST_CASE("trajectory holds each waypoint for its dwell and clamps past the end") {
    Trajectory t;
    t.dwell = 3;
    t.waypoints = {Vec2(0, 0), Vec2(1, 0)};
    CHECK(t.position_at_round(1) == Vec2(0, 0));
    CHECK(t.position_at_round(3) == Vec2(0, 0));
    CHECK(t.position_at_round(4) == Vec2(1, 0));
    CHECK(t.position_at_round(9) == Vec2(1, 0));
    CHECK(t.expand(6).size() == 6);
    CHECK_THROWS_AS(t.expand(7), ValidationError);
}

TEST_CASE("devices move with constant velocity from round one") {
    auto s = parse_scenario("[device]\nx = 1\ny = 1\nvx = 0.5\nvy = -1\n");
    CHECK(s.device_positions(1)[0] == Vec2(1, 1));
    CHECK(s.device_positions(3)[0].isApprox(Vec2(2, -1)));
}
