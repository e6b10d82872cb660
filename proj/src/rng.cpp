#include "skyfed/rng.hpp"

#include <vector>

namespace skyfed {
namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void push64(std::vector<std::uint32_t>& words, std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::string_view label, std::initializer_list<std::uint64_t> indices) {
    // seed_seq's mixing is fully specified by the standard, so streams match across platforms.
    std::vector<std::uint32_t> words;
    push64(words, seed);
    push64(words, fnv1a(label));
    for (auto i : indices) push64(words, i);
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean, double stddev) {
    return mean + stddev * normal_(engine_);
}

std::uint64_t Rng::below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
}

}  // namespace skyfed
