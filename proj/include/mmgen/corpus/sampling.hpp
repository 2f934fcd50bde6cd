#pragma once

#include "mmgen/corpus/manifest.hpp"

#include <cstdint>
#include <vector>

namespace mmgen::corpus {

inline constexpr double kSamplingTarget = 100.0;

/// Inclusion probability min(1, 100/N).
double inclusion_probability(std::size_t n);

/// Keeps each record independently with probability min(1, 100/N), driven
/// by a SplitMix64 stream seeded with `seed`. Relative order is preserved.
std::vector<ImageRecord> sample_by_pattern(const std::vector<ImageRecord>& records_of_pattern,
                                           std::uint64_t seed);

/// Applies sample_by_pattern to each pattern group of `records` (grouped by
/// their pattern labels) and returns the union, ordered by id.
std::vector<ImageRecord> sample_per_pattern(const std::vector<ImageRecord>& records,
                                            std::uint64_t seed);

/// SplitMix64; fixed algorithm so selections are identical across platforms.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();

  private:
    std::uint64_t state_;
};

} // namespace mmgen::corpus
