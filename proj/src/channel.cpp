#include "skyfed/channel.hpp"

#include <cmath>
#include <numbers>

namespace skyfed {
namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double elevation_deg(double ground, double altitude) {
    return std::atan2(altitude, ground) * kRadToDeg;
}

// LoS/NLoS mixture factor pi_LoS zeta + pi_NLoS (1 - zeta), divided by pi_LoS so that
// the always-LoS model reduces to exactly 1.
double mixture_factor(double ground, const RadioEnvironment& radio) {
    if (radio.los_model == LosModel::kAlwaysLos) return 1.0;
    double z = los_probability(elevation_deg(ground, radio.altitude), radio.los_a, radio.los_b);
    return z + (radio.extra_loss_nlos / radio.extra_loss_los) * (1.0 - z);
}

// Exponent u = theta B N0 / (E|h|^2 rho) of the PER.
double per_exponent(double distance, double mixture, const DeviceState& device, const RadioEnvironment& radio) {
    double k = radio.waterfall * radio.bandwidth * radio.noise_psd / (gain_constant(device, radio) * device.tx_power);
    return k * std::pow(distance, radio.pathloss_exp) / mixture;
}

}  // namespace

double los_probability(double elevation, double los_a, double los_b) {
    return 1.0 / (1.0 + los_a * std::exp(-los_b * (elevation - los_a)));
}

double los_probability(const Vec3& drone, const Vec3& device, double los_a, double los_b) {
    double ground = (drone.head<2>() - device.head<2>()).norm();
    return los_probability(elevation_deg(ground, drone.z() - device.z()), los_a, los_b);
}

double gain_constant(const DeviceState& device, const RadioEnvironment& radio) {
    double w = radio.light_speed / (4.0 * std::numbers::pi * radio.carrier);
    return w * w * radio.extra_loss_los * device.fading_mean;
}

double link_distance(const Vec2& drone, const Vec2& device_pos, const RadioEnvironment& radio) {
    return std::sqrt((drone - device_pos).squaredNorm() + radio.altitude * radio.altitude);
}

double mean_channel_gain(const Vec2& drone, const Vec2& device_pos, const DeviceState& device,
                         const RadioEnvironment& radio) {
    double d = link_distance(drone, device_pos, radio);
    double ground = (drone - device_pos).norm();
    return gain_constant(device, radio) * std::pow(d, -radio.pathloss_exp) * mixture_factor(ground, radio);
}

double packet_error_rate(const Vec2& drone, const Vec2& device_pos, const DeviceState& device,
                         const RadioEnvironment& radio) {
    double d = link_distance(drone, device_pos, radio);
    double ground = (drone - device_pos).norm();
    return -std::expm1(-per_exponent(d, mixture_factor(ground, radio), device, radio));
}

Vec2 per_gradient(const Vec2& drone, const Vec2& device_pos, const DeviceState& device,
                  const RadioEnvironment& radio) {
    const Vec2 offset = drone - device_pos;
    const double d2 = offset.squaredNorm() + radio.altitude * radio.altitude;
    const double ground = offset.norm();
    const double m = mixture_factor(ground, radio);
    const double u = per_exponent(std::sqrt(d2), m, device, radio);
    // du/dp = u (alpha offset / d^2 - m'(p) / m)
    Vec2 du = u * radio.pathloss_exp / d2 * offset;
    if (radio.los_model == LosModel::kMixture && ground > 0.0) {
        const double H = radio.altitude;
        const double elev = elevation_deg(ground, H);
        const double z = los_probability(elev, radio.los_a, radio.los_b);
        const double dz_delev = radio.los_b * z * (1.0 - z);
        const double delev_dground = -H / d2 * kRadToDeg;
        const double dm_dz = 1.0 - radio.extra_loss_nlos / radio.extra_loss_los;
        const double dm_dground = dm_dz * dz_delev * delev_dground;
        du -= u / m * dm_dground * (offset / ground);
    }
    return std::exp(-u) * du;
}

LinkState link_state(const Vec2& drone, const Vec2& device_pos, const DeviceState& device,
                     const RadioEnvironment& radio) {
    return {link_distance(drone, device_pos, radio), mean_channel_gain(drone, device_pos, device, radio),
            packet_error_rate(drone, device_pos, device, radio)};
}

double effective_per(const Vec2& drone, const Vec2& device_pos, const DeviceState& device,
                     const RadioEnvironment& radio) {
    if (device.per_override) return *device.per_override;
    return packet_error_rate(drone, device_pos, device, radio);
}

Vec2 effective_per_gradient(const Vec2& drone, const Vec2& device_pos, const DeviceState& device,
                            const RadioEnvironment& radio) {
    if (device.per_override) return Vec2::Zero();
    return per_gradient(drone, device_pos, device, radio);
}

double sum_rate(const Vec2& drone, const std::vector<Vec2>& device_pos, const std::vector<DeviceState>& devices,
                const RadioEnvironment& radio) {
    double total = 0.0;
    const double noise = radio.bandwidth * radio.noise_psd;
    for (std::size_t i = 0; i < devices.size(); ++i) {
        double snr = mean_channel_gain(drone, device_pos[i], devices[i], radio) * devices[i].tx_power / noise;
        total += std::log2(1.0 + snr);
    }
    return total;
}

Vec2 sum_rate_gradient(const Vec2& drone, const std::vector<Vec2>& device_pos,
                       const std::vector<DeviceState>& devices, const RadioEnvironment& radio) {
    Vec2 g = Vec2::Zero();
    const double noise = radio.bandwidth * radio.noise_psd;
    for (std::size_t i = 0; i < devices.size(); ++i) {
        // Through the PER exponent: snr = theta / u, so d log2(1+snr) = -snr/(1+snr) du/u / ln 2.
        const Vec2 offset = drone - device_pos[i];
        const double d2 = offset.squaredNorm() + radio.altitude * radio.altitude;
        double snr = mean_channel_gain(drone, device_pos[i], devices[i], radio) * devices[i].tx_power / noise;
        Vec2 dlog_gain = -radio.pathloss_exp / d2 * offset;
        if (radio.los_model == LosModel::kMixture) {
            // d log(gain) = -d log(u); reuse the PER exponent derivative.
            double u = -std::log1p(-packet_error_rate(drone, device_pos[i], devices[i], radio));
            if (u > 0.0) {
                Vec2 de = per_gradient(drone, device_pos[i], devices[i], radio);
                dlog_gain = -de / (std::exp(-u) * u);
            }
        }
        g += snr / (1.0 + snr) / std::numbers::ln2 * dlog_gain;
    }
    return g;
}

}  // namespace skyfed
