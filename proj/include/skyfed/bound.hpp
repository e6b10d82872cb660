#pragma once

#include "skyfed/scenario.hpp"

#include <span>
#include <vector>

namespace skyfed {

/// Terms of the per-round bound gap_{t+1} <= phi gap_t + j + k.
struct RoundTerms {
    double phi = 0.0;  // contraction factor
    double j = 0.0;    // packet-error residual
    double k = 0.0;    // sensor-noise residual
    bool contraction_ok = true;
};

/// Per-device derivatives of the round terms with respect to that device's PER.
/// d(J+K)/de_i may be negative for noise-dominated devices; dPhi/de_i is always positive.
struct PerSensitivity {
    std::vector<double> residual;     // d(J+K)/de_i = (D_i/D)(2c1/L - eta M sigma_i^2 / (2 L D))
    std::vector<double> contraction;  // dPhi/de_i = 4 mu c2 D_i / (L D)
};

PerSensitivity per_sensitivity(const std::vector<DeviceState>& devices, const LearningConstants& constants);

RoundTerms round_terms(std::span<const double> per, const std::vector<DeviceState>& devices,
                       const LearningConstants& constants);

/// Round terms with every PER taken from the channel at the given geometry.
RoundTerms round_terms_at(const Vec2& drone, const std::vector<Vec2>& device_pos, const std::vector<DeviceState>& devices,
                          const RadioEnvironment& radio, const LearningConstants& constants);

double gap_step(double gap, const RoundTerms& terms);

/// Bound after T rounds with constant terms, phi^T gap0 + (j+k)(1-phi^T)/(1-phi).
double stationary_gap(const RoundTerms& terms, int rounds, double gap0);

struct AtlResult {
    double value = 0.0;
    std::vector<RoundTerms> rounds;
    bool contraction_ok = true;  // every round has phi < 1
};

/// Asymptotic trajectory loss sum_{t<T} (J_t+K_t) prod_{tau>t} Phi_tau + (J_T+K_T)
/// for per-round drone positions (rounds 1..T).
AtlResult atl_rounds(const std::vector<Vec2>& drone_per_round, const std::vector<std::vector<Vec2>>& device_traces,
                     const std::vector<DeviceState>& devices, const RadioEnvironment& radio,
                     const LearningConstants& constants);

/// ATL of a waypoint trajectory expanded by its dwell to `horizon` rounds.
AtlResult atl(const Trajectory& trajectory, const std::vector<std::vector<Vec2>>& device_traces,
              const std::vector<DeviceState>& devices, const RadioEnvironment& radio,
              const LearningConstants& constants, int horizon);
AtlResult atl(const Trajectory& trajectory, const Scenario& scenario);

struct AtlGradient {
    double value = 0.0;
    std::vector<Vec2> waypoints;  // dATL / d waypoint; zero for waypoints no round uses
    bool contraction_ok = true;
};

AtlGradient atl_gradient(const Trajectory& trajectory, const std::vector<std::vector<Vec2>>& device_traces,
                         const std::vector<DeviceState>& devices, const RadioEnvironment& radio,
                         const LearningConstants& constants, int horizon);
AtlGradient atl_gradient(const Trajectory& trajectory, const Scenario& scenario);

}  // namespace skyfed
