#include "oracles.hpp"

#include "skyfed/channel.hpp"

#include <doctest.h>

#include <cmath>

using namespace skyfed;

TEST_CASE("los probability") {
    // Straight below: elevation 90 deg; direct evaluation of 1 / (1 + 9.61 exp(-0.16 (90 - 9.61))).
    const long double direct = 1.0L / (1.0L + 9.61L * std::exp(-0.16L * (90.0L - 9.61L)));
    const double z = los_probability(Vec3(5, 5, 20), Vec3(5, 5, 0), 9.61, 0.16);
    CHECK(z == doctest::Approx(static_cast<double>(direct)).epsilon(1e-14));
    CHECK(1.0 - z < 1e-4);
    CHECK(los_probability(37.0, 0.0, 0.16) == 1.0);
    double prev = 0.0;
    for (double e = 0.0; e <= 90.0; e += 1.0) {
        const double p = los_probability(e, 9.61, 0.16);
        CHECK(p > prev);
        prev = p;
    }
}

TEST_CASE("mean gain follows the power law and is linear in the fading mean") {
    RadioEnvironment r;
    DeviceState d;
    d.fading_mean = 1.0;
    r.altitude = 10.0;
    const Vec2 dev(0, 0);
    // Ground offsets giving 3-D distances 20 and 40.
    const Vec2 p1(std::sqrt(300.0), 0), p2(std::sqrt(1500.0), 0);
    CHECK(mean_channel_gain(p2, dev, d, r) / mean_channel_gain(p1, dev, d, r) ==
          doctest::Approx(std::pow(2.0, -3.4)).epsilon(1e-12));
    DeviceState half = d;
    half.fading_mean = 0.5;
    CHECK(mean_channel_gain(p1, dev, half, r) == doctest::Approx(0.5 * mean_channel_gain(p1, dev, d, r)));
}

TEST_CASE("reference gain and packet error rate straight below the drone") {
    RadioEnvironment r;
    DeviceState d;
    d.fading_mean = 1.0;
    d.tx_power = 0.1;
    const long double lam = 299792458.0L / (4.0L * std::numbers::pi_v<long double> * 1e9L);
    const long double gain = lam * lam * std::pow(20.0L, -3.4L);
    CHECK(mean_channel_gain(Vec2(3, 4), Vec2(3, 4), d, r) == doctest::Approx(static_cast<double>(gain)).epsilon(1e-12));
    const double e = packet_error_rate(Vec2(3, 4), Vec2(3, 4), d, r);
    CHECK(e == doctest::Approx(static_cast<double>(oracle::per(Vec2(3, 4), Vec2(3, 4), d, r))).epsilon(1e-12));
    CHECK(e > 1e-5);
    CHECK(e < 1e-3);
}

TEST_CASE("packet error rate is monotone in distance and vanishes with power") {
    RadioEnvironment r;
    DeviceState d;
    d.fading_mean = 0.4;
    const Vec2 dev(0, 0);
    const double at_h = packet_error_rate(Vec2(0, 0), dev, d, r);
    const double at_2h = packet_error_rate(Vec2(std::sqrt(3.0) * r.altitude, 0), dev, d, r);
    CHECK(at_h < at_2h);
    double prev = -1.0;
    for (double x = 0; x < 500; x += 5) {
        const double e = packet_error_rate(Vec2(x, 0), dev, d, r);
        CHECK(e >= prev);
        CHECK(e >= 0.0);
        CHECK(e < 1.0);
        prev = e;
    }
    d.tx_power = 1e12;
    CHECK(packet_error_rate(Vec2(30, 0), dev, d, r) < 1e-12);
}

TEST_CASE("packet error rate matches the closed form on random geometry") {
    Rng rng(11, "channel-random");
    for (int n = 0; n < 200; ++n) {
        RadioEnvironment r;
        r.altitude = rng.uniform(5, 120);
        DeviceState d;
        d.fading_mean = rng.uniform(0.1, 1);
        d.tx_power = rng.uniform(0.01, 1);
        const Vec2 drone(rng.uniform(-100, 100), rng.uniform(-100, 100)), dev(rng.uniform(-100, 100), rng.uniform(-100, 100));
        CHECK(packet_error_rate(drone, dev, d, r) ==
              doctest::Approx(static_cast<double>(oracle::per(drone, dev, d, r))).epsilon(1e-11));
    }
}

TEST_CASE("per gradient") {
    RadioEnvironment r;
    DeviceState d;
    d.fading_mean = 0.7;
    CHECK(per_gradient(Vec2(2, 3), Vec2(2, 3), d, r).norm() == 0.0);

    Rng rng(12, "per-gradient");
    for (int n = 0; n < 1000; ++n) {
        d.fading_mean = rng.uniform(0.1, 1);
        r.los_model = n % 4 == 0 ? LosModel::kMixture : LosModel::kAlwaysLos;
        const Vec2 drone(rng.uniform(0, 70), rng.uniform(0, 70)), dev(rng.uniform(0, 70), rng.uniform(0, 70));
        const Vec2 g = per_gradient(drone, dev, d, r);
        CHECK(g.dot(drone - dev) >= 0.0);
        const Vec2 fd = oracle::fd_gradient([&](const Vec2& p) { return packet_error_rate(p, dev, d, r); }, drone, 1e-4);
        CHECK(oracle::rel_err(g, fd, 1e-12) < 1e-6);
    }
}

TEST_CASE("pinned packet error rate ignores geometry") {
    RadioEnvironment r;
    DeviceState d;
    d.per_override = 0.25;
    CHECK(effective_per(Vec2(0, 0), Vec2(500, 0), d, r) == 0.25);
    CHECK(effective_per_gradient(Vec2(0, 0), Vec2(500, 0), d, r).norm() == 0.0);
}

TEST_CASE("sum rate gradient") {
    const auto s = oracle::stationary_scenario(4);
    const auto pos = s.device_positions(1);
    Rng rng(13, "sum-rate");
    for (int n = 0; n < 50; ++n) {
        const Vec2 p(rng.uniform(0, 70), rng.uniform(0, 70));
        const Vec2 fd =
            oracle::fd_gradient([&](const Vec2& q) { return sum_rate(q, pos, s.devices, s.radio); }, p, 1e-4);
        CHECK(oracle::rel_err(sum_rate_gradient(p, pos, s.devices, s.radio), fd, 1e-9) < 1e-6);
    }
}
