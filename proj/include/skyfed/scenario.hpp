#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace skyfed {

using Vec2 = Eigen::Vector2d;

/// One ground device taking part in training.
struct DeviceState {
    int id = 0;
    Vec2 position = Vec2::Zero();  // m, ground plane
    Vec2 velocity = Vec2::Zero();  // m per aggregation round
    long dataset_size = 1;         // D_i
    double noise_var = 0.0;        // sigma_i^2 of the additive feature noise
    double tx_power = 0.1;         // mW
    double fading_mean = 1.0;      // nu_i = E[small-scale fading]
    /// Pins the device's packet error rate regardless of geometry (sweeps, ablations).
    std::optional<double> per_override;

    bool operator==(const DeviceState&) const = default;
};

enum class LosModel { kAlwaysLos, kMixture };

/// Shared air-to-ground channel constants. Defaults reproduce the reference
/// simulation table: H = 20 m, N0 = -174 dBm/Hz, theta = 0.053, alpha = 3.4, fc = 1 GHz.
struct RadioEnvironment {
    double waterfall = 0.053;           // theta, used linearly
    double bandwidth = 2.5e6;           // Hz
    double noise_psd = 3.981071705534972e-18;  // mW/Hz, 10^(-17.4)
    double pathloss_exp = 3.4;          // alpha (magnitude)
    double carrier = 1e9;               // Hz
    double extra_loss_los = 1.0;        // linear
    double extra_loss_nlos = 0.01;      // linear, mixture model only
    double los_a = 9.61;
    double los_b = 0.16;
    double altitude = 20.0;             // m
    double light_speed = 299792458.0;   // m/s
    LosModel los_model = LosModel::kAlwaysLos;

    bool operator==(const RadioEnvironment&) const = default;
};

/// Constants of the per-round convergence bound.
struct LearningConstants {
    double lipschitz = 1.0;         // L
    double strong_convexity = 0.1;  // mu
    double c1 = 1.0;
    double c2 = 0.5;
    double eta = 0.8;
    long feature_dim = 784;         // M

    bool operator==(const LearningConstants&) const = default;
};

/// Drone waypoints; the drone hovers `dwell` rounds at each one.
struct Trajectory {
    std::vector<Vec2> waypoints;
    int dwell = 1;
    bool closed = false;

    /// Drone ground position during 1-based round `round`.
    const Vec2& position_at_round(int round) const;
    /// Per-round drone positions for rounds 1..horizon.
    std::vector<Vec2> expand(int horizon) const;
};

enum class DatasetKind { kSynthetic, kIdx };
enum class ModelKind { kQuadratic, kLogistic, kTinyMlp };
enum class ProjectionMode { kRadial, kComponentwise };

struct DatasetSpec {
    DatasetKind kind = DatasetKind::kSynthetic;
    std::string idx_images;
    std::string idx_labels;
    int classes = 10;
    double label_skew = 0.0;
    double peak = 1.0;  // PSNR peak value for psnr_db device keys

    bool operator==(const DatasetSpec&) const = default;
};

struct ModelSpec {
    ModelKind kind = ModelKind::kLogistic;
    double l2 = 1e-2;
    int hidden = 16;  // tiny-mlp only

    bool operator==(const ModelSpec&) const = default;
};

/// Tunables of the optimizers; not part of the physical model.
struct SolverOptions {
    double trust_radius = 5.0;  // m
    double delta = 0.01;        // m, placement stopping tolerance
    int max_iters = 50;
    int horizon_iters = 400;
    double horizon_step = 1.0;  // m, initial step of the horizon solver
    ProjectionMode projection = ProjectionMode::kRadial;
    bool closed_loop = false;

    bool operator==(const SolverOptions&) const = default;
};

struct Scenario {
    std::vector<DeviceState> devices;
    RadioEnvironment radio;
    LearningConstants constants;
    int horizon = 100;   // T
    int dwell = 5;       // kappa
    double v_max = 2.0;  // m per waypoint step
    std::uint64_t seed = 1;
    DatasetSpec dataset;
    ModelSpec model;
    std::optional<double> learning_rate;  // defaults to 1/L
    std::optional<double> target_loss;
    SolverOptions solver;

    double effective_learning_rate() const;
    long total_samples() const;
    /// Device ground positions during 1-based round `round` (constant-velocity motion from round 1).
    std::vector<Vec2> device_positions(int round) const;
    /// Positions for rounds 1..horizon.
    std::vector<std::vector<Vec2>> device_traces() const;

    bool operator==(const Scenario&) const = default;
};

/// Parses the `key = value` scenario format. Throws ParseError / ValidationError.
Scenario parse_scenario(std::string_view text);
/// Same, with the run seed replaced before any seeded default (fading means) is drawn.
Scenario parse_scenario(std::string_view text, std::optional<std::uint64_t> seed_override);
Scenario load_scenario(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt);
/// Writes every field explicitly; parse_scenario(serialize_scenario(s)) == s.
std::string serialize_scenario(const Scenario& s);
/// Checks all invariants; throws ValidationError naming the field.
void validate(const Scenario& s);

/// Feature-noise variance for a PSNR in dB: peak^2 * 10^(-psnr/10).
double psnr_to_variance(double psnr_db, double peak = 1.0);

}  // namespace skyfed
