#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace skyfed {

/// Reproducible random stream. Streams with distinct (seed, label, indices)
/// are independent; identical keys give bit-identical draws.
class Rng {
public:
    Rng(std::uint64_t seed, std::string_view label, std::initializer_list<std::uint64_t> indices = {});

    /// Uniform in [0, 1), 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal(double mean = 0.0, double stddev = 1.0);
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

inline Rng seeded_rng(std::uint64_t seed, std::string_view label,
                      std::initializer_list<std::uint64_t> indices = {}) {
    return Rng(seed, label, indices);
}

}  // namespace skyfed
