#pragma once

#include "skyfed/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace skyfed {

enum class DataSource { kSynthetic, kIdx };

/// Samples x features matrix with integer class labels.
struct LocalDataset {
    Eigen::MatrixXd features;
    Eigen::VectorXi labels;
    double noise_var = 0.0;  // variance of the noise already added to `features`
    DataSource source = DataSource::kSynthetic;
    int classes = 0;

    long size() const { return static_cast<long>(features.rows()); }
    long dim() const { return static_cast<long>(features.cols()); }
};

/// Per-class sample counts for n samples: a `label_skew` fraction of the mass goes to
/// `dominant`, the rest is spread evenly. Largest-remainder rounding, ties to the lower class.
std::vector<long> class_counts(long n, int classes, double label_skew, int dominant);

/// Gaussian class blobs with centers in [0, 1]^M shared by every caller with the same
/// `centers_seed`; within-class standard deviation 0.25 per feature.
LocalDataset make_synthetic(long n_samples, long dim, int classes, double label_skew, Rng& rng, int dominant = 0,
                            std::uint64_t centers_seed = 0);

/// Copy with N(0, var) added to every feature once.
LocalDataset add_sensor_noise(const LocalDataset& clean, double var, Rng& rng);

/// Big-endian IDX pair (images 0x00000803, labels 0x00000801); pixels scaled by 1/255.
LocalDataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Picks rows for one device: per-class counts from class_counts, taken in file order
/// from the rows not yet claimed (tracked by `cursor`, one position per class).
LocalDataset take_partition(const LocalDataset& pool, long n_samples, double label_skew, int dominant,
                            std::vector<long>& cursor);

}  // namespace skyfed
