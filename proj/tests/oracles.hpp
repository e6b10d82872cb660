// Independent reference computations for the tests. Nothing here calls into the
// library's numerics; formulas are re-evaluated in long double from their definitions.
#pragma once

#include "skyfed/rng.hpp"
#include "skyfed/scenario.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using skyfed::DeviceState;
using skyfed::LearningConstants;
using skyfed::RadioEnvironment;
using skyfed::Vec2;
using ld = long double;

inline ld per(const Vec2& drone, const Vec2& dev, const DeviceState& d, const RadioEnvironment& r) {
    const ld dx = drone.x() - dev.x(), dy = drone.y() - dev.y(), h = r.altitude;
    const ld dist = std::sqrt(dx * dx + dy * dy + h * h);
    const ld lambda = static_cast<ld>(r.light_speed) / (4.0L * std::numbers::pi_v<ld> * r.carrier);
    const ld gain = lambda * lambda * r.extra_loss_los * d.fading_mean * std::pow(dist, -static_cast<ld>(r.pathloss_exp));
    return 1.0L - std::exp(-static_cast<ld>(r.waterfall) * r.bandwidth * r.noise_psd / (gain * d.tx_power));
}

struct Terms {
    ld phi, j, k;
};

inline Terms terms(const std::vector<double>& e, const std::vector<DeviceState>& devs, const LearningConstants& c) {
    ld D = 0, se = 0, sk = 0;
    for (const auto& d : devs) D += d.dataset_size;
    for (std::size_t i = 0; i < devs.size(); ++i) {
        se += devs[i].dataset_size * static_cast<ld>(e[i]);
        sk += devs[i].dataset_size * (1.0L - e[i]) * devs[i].noise_var;
    }
    const ld L = c.lipschitz, mu = c.strong_convexity;
    return {1.0L - mu / L + 4.0L * mu * c.c2 / (L * D) * se, 2.0L * c.c1 / (L * D) * se,
            c.eta * c.feature_dim / (2.0L * L * D * D) * sk};
}

/// Direct ATL: sum_t (J_t + K_t) prod_{tau > t} Phi_tau.
inline ld atl(const std::vector<Terms>& rounds) {
    ld total = 0;
    for (std::size_t t = 0; t < rounds.size(); ++t) {
        ld prod = 1;
        for (std::size_t u = t + 1; u < rounds.size(); ++u) prod *= rounds[u].phi;
        total += (rounds[t].j + rounds[t].k) * prod;
    }
    return total;
}

/// Central differences of a scalar function of a 2-vector.
inline Vec2 fd_gradient(const std::function<double(const Vec2&)>& f, const Vec2& p, double h) {
    Vec2 g;
    for (int k = 0; k < 2; ++k) {
        Vec2 e = Vec2::Zero();
        e[k] = h;
        g[k] = (f(p + e) - f(p - e)) / (2 * h);
    }
    return g;
}

/// Relative error with an absolute floor so vanishing gradients do not blow up.
inline double rel_err(const Vec2& a, const Vec2& b, double floor) {
    return (a - b).norm() / std::max(b.norm(), floor);
}

/// Seeded moving-device scenario: D = (1000, 200, 300, 700, 800), PSNR (5, 5, 5, 5, 30) dB,
/// positions U[0, 70]^2, velocities 0.1 U[0, 1] per axis, fading means U[0.1, 1].
inline skyfed::Scenario moving_scenario(std::uint64_t seed, int horizon = 100, int dwell = 5) {
    skyfed::Rng r(seed, "test-scenario");
    skyfed::Scenario s;
    const long D[5] = {1000, 200, 300, 700, 800};
    const double psnr[5] = {5, 5, 5, 5, 30};
    for (int i = 0; i < 5; ++i) {
        DeviceState d;
        d.id = i + 1;
        d.position = Vec2(r.uniform(0, 70), r.uniform(0, 70));
        d.velocity = Vec2(0.1 * r.uniform(), 0.1 * r.uniform());
        d.dataset_size = D[i];
        d.noise_var = std::pow(10.0, -psnr[i] / 10.0);
        d.fading_mean = r.uniform(0.1, 1.0);
        s.devices.push_back(d);
    }
    s.horizon = horizon;
    s.dwell = dwell;
    s.v_max = 2.0;
    s.seed = seed;
    return s;
}

inline skyfed::Scenario stationary_scenario(std::uint64_t seed) {
    auto s = moving_scenario(seed);
    for (auto& d : s.devices) d.velocity.setZero();
    return s;
}

}  // namespace oracle

#include <cstdint>
#include <fstream>
#include <string>

namespace oracle {

/// Writes a big-endian IDX pair by hand: `n` images of rows x cols bytes and their labels.
inline void write_idx(const std::string& images, const std::string& labels, const std::vector<std::uint8_t>& pixels,
                      const std::vector<std::uint8_t>& label_bytes, std::uint32_t rows, std::uint32_t cols,
                      std::uint32_t image_magic = 0x00000803u) {
    const auto be = [](std::ofstream& out, std::uint32_t v) {
        const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                           static_cast<char>(v)};
        out.write(b, 4);
    };
    std::ofstream img(images, std::ios::binary);
    be(img, image_magic);
    be(img, static_cast<std::uint32_t>(label_bytes.size()));
    be(img, rows);
    be(img, cols);
    img.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    std::ofstream lab(labels, std::ios::binary);
    be(lab, 0x00000801u);
    be(lab, static_cast<std::uint32_t>(label_bytes.size()));
    lab.write(reinterpret_cast<const char*>(label_bytes.data()), static_cast<std::streamsize>(label_bytes.size()));
}

}  // namespace oracle
