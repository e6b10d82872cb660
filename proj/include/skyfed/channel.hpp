#pragma once

#include "skyfed/scenario.hpp"

#include <Eigen/Core>

namespace skyfed {

using Vec3 = Eigen::Vector3d;

/// Drone-to-device link quality for one round.
struct LinkState {
    double distance = 0.0;   // 3-D, m
    double mean_gain = 0.0;  // E|h|^2, linear
    double per = 0.0;        // packet error rate
};

/// LoS probability 1 / (1 + a exp(-b (elevation_deg - a))).
double los_probability(double elevation_deg, double los_a, double los_b);
double los_probability(const Vec3& drone, const Vec3& device, double los_a, double los_b);

/// A_i = (s / 4 pi fc)^2 pi_LoS nu_i, the distance-independent part of the always-LoS gain.
double gain_constant(const DeviceState& device, const RadioEnvironment& radio);

/// 3-D distance between the drone (at the radio altitude) and a ground point.
double link_distance(const Vec2& drone, const Vec2& device_pos, const RadioEnvironment& radio);

double mean_channel_gain(const Vec2& drone, const Vec2& device_pos, const DeviceState& device,
                         const RadioEnvironment& radio);

/// e = 1 - exp(-theta B N0 / (E|h|^2 rho)). Ignores `per_override`.
double packet_error_rate(const Vec2& drone, const Vec2& device_pos, const DeviceState& device,
                         const RadioEnvironment& radio);

/// d e / d(drone x, y).
Vec2 per_gradient(const Vec2& drone, const Vec2& device_pos, const DeviceState& device,
                  const RadioEnvironment& radio);

LinkState link_state(const Vec2& drone, const Vec2& device_pos, const DeviceState& device,
                     const RadioEnvironment& radio);

/// Packet error rate honoring the device's `per_override`.
double effective_per(const Vec2& drone, const Vec2& device_pos, const DeviceState& device,
                     const RadioEnvironment& radio);
/// Zero when the PER is pinned.
Vec2 effective_per_gradient(const Vec2& drone, const Vec2& device_pos, const DeviceState& device,
                            const RadioEnvironment& radio);

/// Sum over devices of log2(1 + E|h|^2 rho / (B N0)).
double sum_rate(const Vec2& drone, const std::vector<Vec2>& device_pos,
                const std::vector<DeviceState>& devices, const RadioEnvironment& radio);
Vec2 sum_rate_gradient(const Vec2& drone, const std::vector<Vec2>& device_pos,
                       const std::vector<DeviceState>& devices, const RadioEnvironment& radio);

}  // namespace skyfed
