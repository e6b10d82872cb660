#include "skyfed/bound.hpp"

#include "skyfed/channel.hpp"
#include "skyfed/error.hpp"

#include <cmath>

namespace skyfed {

PerSensitivity per_sensitivity(const std::vector<DeviceState>& devices, const LearningConstants& c) {
    double total = 0.0;
    for (const auto& d : devices) total += static_cast<double>(d.dataset_size);
    const double L = c.lipschitz;
    const double M = static_cast<double>(c.feature_dim);
    PerSensitivity s;
    s.residual.reserve(devices.size());
    s.contraction.reserve(devices.size());
    for (const auto& d : devices) {
        const double share = static_cast<double>(d.dataset_size) / total;
        s.residual.push_back(share * (2.0 * c.c1 / L - c.eta * M * d.noise_var / (2.0 * L * total)));
        s.contraction.push_back(4.0 * c.strong_convexity * c.c2 * share / L);
    }
    return s;
}

RoundTerms round_terms(std::span<const double> per, const std::vector<DeviceState>& devices,
                       const LearningConstants& c) {
    if (per.size() != devices.size())
        throw ValidationError("per", "expected " + std::to_string(devices.size()) + " packet error rates, got " +
                                         std::to_string(per.size()));
    double total = 0.0;
    for (const auto& d : devices) total += static_cast<double>(d.dataset_size);
    double weighted_err = 0.0;    // sum D_i e_i
    double weighted_noise = 0.0;  // sum D_i (1 - e_i) sigma_i^2
    for (std::size_t i = 0; i < devices.size(); ++i) {
        const double di = static_cast<double>(devices[i].dataset_size);
        weighted_err += di * per[i];
        weighted_noise += di * (1.0 - per[i]) * devices[i].noise_var;
    }
    const double L = c.lipschitz;
    const double mu = c.strong_convexity;
    RoundTerms t;
    t.phi = 1.0 - mu / L + 4.0 * mu * c.c2 / (L * total) * weighted_err;
    t.j = 2.0 * c.c1 / (L * total) * weighted_err;
    t.k = c.eta * static_cast<double>(c.feature_dim) / (2.0 * L * total * total) * weighted_noise;
    t.contraction_ok = 4.0 * c.c2 / total * weighted_err < 1.0;
    return t;
}

RoundTerms round_terms_at(const Vec2& drone, const std::vector<Vec2>& device_pos, const std::vector<DeviceState>& devices,
                          const RadioEnvironment& radio, const LearningConstants& constants) {
    std::vector<double> per(devices.size());
    for (std::size_t i = 0; i < devices.size(); ++i) per[i] = effective_per(drone, device_pos[i], devices[i], radio);
    return round_terms(per, devices, constants);
}

double gap_step(double gap, const RoundTerms& terms) {
    return terms.phi * gap + terms.j + terms.k;
}

double stationary_gap(const RoundTerms& terms, int rounds, double gap0) {
    const double residual = terms.j + terms.k;
    if (terms.phi == 1.0) return gap0 + rounds * residual;
    const double pT = std::pow(terms.phi, rounds);
    return pT * gap0 + residual * (1.0 - pT) / (1.0 - terms.phi);
}

AtlResult atl_rounds(const std::vector<Vec2>& drone_per_round, const std::vector<std::vector<Vec2>>& device_traces,
                     const std::vector<DeviceState>& devices, const RadioEnvironment& radio,
                     const LearningConstants& constants) {
    if (device_traces.size() < drone_per_round.size())
        throw ValidationError("horizon", "device traces cover fewer rounds than the drone trajectory");
    AtlResult out;
    out.rounds.reserve(drone_per_round.size());
    // S_t = Phi_t S_{t-1} + J_t + K_t with S_0 = 0 unrolls to the ATL sum at t = T.
    double acc = 0.0;
    for (std::size_t t = 0; t < drone_per_round.size(); ++t) {
        auto terms = round_terms_at(drone_per_round[t], device_traces[t], devices, radio, constants);
        acc = gap_step(acc, terms);
        out.contraction_ok = out.contraction_ok && terms.contraction_ok;
        out.rounds.push_back(terms);
    }
    out.value = acc;
    return out;
}

AtlResult atl(const Trajectory& trajectory, const std::vector<std::vector<Vec2>>& device_traces,
              const std::vector<DeviceState>& devices, const RadioEnvironment& radio,
              const LearningConstants& constants, int horizon) {
    if (static_cast<int>(device_traces.size()) != horizon)
        throw ValidationError("horizon", "device traces must have exactly T rounds");
    return atl_rounds(trajectory.expand(horizon), device_traces, devices, radio, constants);
}

AtlResult atl(const Trajectory& trajectory, const Scenario& s) {
    return atl(trajectory, s.device_traces(), s.devices, s.radio, s.constants, s.horizon);
}

AtlGradient atl_gradient(const Trajectory& trajectory, const std::vector<std::vector<Vec2>>& device_traces,
                         const std::vector<DeviceState>& devices, const RadioEnvironment& radio,
                         const LearningConstants& constants, int horizon) {
    if (static_cast<int>(device_traces.size()) != horizon)
        throw ValidationError("horizon", "device traces must have exactly T rounds");
    const auto drone = trajectory.expand(horizon);
    const auto sens = per_sensitivity(devices, constants);
    const std::size_t n = devices.size();

    std::vector<RoundTerms> terms(drone.size());
    std::vector<Vec2> d_residual(drone.size()), d_phi(drone.size());
    std::vector<double> before(drone.size());  // S_{t-1}
    double acc = 0.0;
    AtlGradient out;
    for (std::size_t t = 0; t < drone.size(); ++t) {
        std::vector<double> per(n);
        Vec2 gr = Vec2::Zero(), gp = Vec2::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            per[i] = effective_per(drone[t], device_traces[t][i], devices[i], radio);
            Vec2 de = effective_per_gradient(drone[t], device_traces[t][i], devices[i], radio);
            gr += sens.residual[i] * de;
            gp += sens.contraction[i] * de;
        }
        terms[t] = round_terms(per, devices, constants);
        out.contraction_ok = out.contraction_ok && terms[t].contraction_ok;
        d_residual[t] = gr;
        d_phi[t] = gp;
        before[t] = acc;
        acc = gap_step(acc, terms[t]);
    }
    out.value = acc;
    out.waypoints.assign(trajectory.waypoints.size(), Vec2::Zero());
    // Reverse sweep: dATL/dS_t = prod_{tau > t} Phi_tau.
    double tail = 1.0;
    for (std::size_t t = drone.size(); t-- > 0;) {
        const auto w = static_cast<std::size_t>(static_cast<int>(t) / trajectory.dwell);
        out.waypoints[std::min(w, out.waypoints.size() - 1)] += tail * (d_residual[t] + before[t] * d_phi[t]);
        tail *= terms[t].phi;
    }
    return out;
}

AtlGradient atl_gradient(const Trajectory& trajectory, const Scenario& s) {
    return atl_gradient(trajectory, s.device_traces(), s.devices, s.radio, s.constants, s.horizon);
}

}  // namespace skyfed
