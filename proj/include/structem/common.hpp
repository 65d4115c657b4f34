#ifndef STRUCTEM_COMMON_HPP
#define STRUCTEM_COMMON_HPP

#include <cstdint>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace structem {

// Sentinel for a missing dataset cell.
inline constexpr int kMissing = -1;

// Log-domain zero. Propagates through sums of log factors.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// Deterministic seed derivation for nested random streams (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline double log_sum_exp(const std::vector<double>& xs) {
    double hi = kLogZero;
    for (double x : xs) hi = std::max(hi, x);
    if (hi == kLogZero) return kLogZero;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - hi);
    return hi + std::log(acc);
}

// Shortest round-trip decimal text for a double; used wherever emitted
// numbers must be byte-stable across runs.
std::string format_double(double value);

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);

}  // namespace structem

#endif
