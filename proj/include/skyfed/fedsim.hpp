#pragma once

#include "skyfed/dataset.hpp"
#include "skyfed/model.hpp"
#include "skyfed/scenario.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace skyfed {

/// Datasets and model of one scenario. Clean copies are kept for evaluation; devices
/// train on the noisy copies.
struct Federation {
    std::shared_ptr<const Model> model;
    std::vector<LocalDataset> clean;
    std::vector<LocalDataset> noisy;
    LocalDataset pooled;           // all clean samples, the global objective F
    Eigen::VectorXd initial;       // w_0
    std::optional<Eigen::VectorXd> optimum;  // argmin of F when the model is convex
    double optimum_loss = 0.0;

    /// F(w) - F(w*); NaN without a known optimum.
    double gap(const Eigen::VectorXd& w) const;
};

/// Synthetic blobs (or an IDX pool split by label skew) sized by the devices' D_i, with
/// sensor noise drawn from (seed, "noise", device, replicate).
Federation build_federation(const Scenario& s, std::uint64_t replicate = 0);
/// Redraws only the sensor noise.
void renoise(Federation& fed, const Scenario& s, std::uint64_t replicate);

/// One full-batch gradient step on the local mean loss.
Eigen::VectorXd local_step(const Eigen::VectorXd& w, const LocalDataset& data, double lr, const Model& model);

/// sum_i D_i C_i w_i / sum_i D_i C_i; `previous` when nothing was delivered.
Eigen::VectorXd aggregate(const std::vector<Eigen::VectorXd>& local, const std::vector<int>& delivered,
                          const std::vector<long>& dataset_sizes, const Eigen::VectorXd& previous);

struct RoundRecord {
    int round = 0;
    std::vector<double> per;
    std::vector<int> delivered;
    Vec2 drone = Vec2::Zero();
    double loss = 0.0;      // F(w_t) on clean data
    double accuracy = 0.0;  // NaN for the quadratic model
    double gap = 0.0;       // NaN without a known optimum
};

struct SimulationResult {
    double initial_loss = 0.0;
    double initial_gap = 0.0;
    std::vector<RoundRecord> rounds;
    Eigen::VectorXd weights;
};

struct SimOptions {
    std::uint64_t replicate = 0;  // selects the delivery stream
    bool force_delivery = false;
};

/// FedAvg with one local step per round and Bernoulli(1 - e_it) deliveries drawn from
/// (seed, "delivery", device, round, replicate). The drone follows `trajectory`.
SimulationResult simulate(const Scenario& s, const Trajectory& trajectory, const Federation& fed, int rounds,
                          const SimOptions& opts = {});

/// First round whose loss is at or below `target`; rounds + 1 when never reached.
int rounds_to_target(const SimulationResult& r, double target);

struct EstimateOptions {
    int fit_points = 400;       // sampled weights for the (c1, c2) fit
    int eta_points = 64;        // (w, sample) pairs for the mixed-Hessian bound
    double radius = 0.0;        // sampling radius around w*; 0 picks 2 ||w_0 - w*|| + 1
    std::uint64_t seed = 0;
};

struct ConstantsEstimate {
    LearningConstants constants;
    double radius = 0.0;
};

/// L and mu exact for the quadratic model (bounds for logistic); c1, c2 by a least-squares
/// slope plus the largest residual over sampled w; eta as the largest sampled mixed-Hessian norm.
ConstantsEstimate estimate_constants(const Federation& fed, const EstimateOptions& opts = {});

/// Fraction of `n` random w (same sampling as the fit, fresh stream) where some sample breaks
/// ||grad f||^2 <= c1 + c2 ||grad F||^2.
double assumption_v_violations(const Federation& fed, const LearningConstants& c, double radius, int n,
                               std::uint64_t seed);

struct BoundReport {
    std::vector<double> mean_gap;  // E[gap_t], t = 0..T
    std::vector<double> bound;     // Phi_t E[gap_{t-1}] + J_t + K_t, t = 1..T (index 0 unused)
    int violations = 0;
    int rounds = 0;
    double violation_fraction() const { return rounds ? static_cast<double>(violations) / rounds : 0.0; }
};

/// Compares the Monte-Carlo mean gap against the one-step bound, round by round.
BoundReport check_theorem_bound(const std::vector<SimulationResult>& replicates, const std::vector<DeviceState>& devices,
                                const LearningConstants& constants);

}  // namespace skyfed
