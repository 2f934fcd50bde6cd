#include "mmgen/corpus/sampling.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace mmgen::corpus {

std::uint64_t SplitMix64::next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double inclusion_probability(std::size_t n) {
    if (n == 0) return 0.0;
    return std::min(1.0, kSamplingTarget / static_cast<double>(n));
}

std::vector<ImageRecord> sample_by_pattern(const std::vector<ImageRecord>& records_of_pattern,
                                           std::uint64_t seed) {
    const double p = inclusion_probability(records_of_pattern.size());
    SplitMix64 rng(seed);
    std::vector<ImageRecord> out;
    for (const auto& r : records_of_pattern) {
        // Always draw so that the stream position does not depend on p.
        const double u = rng.uniform();
        if (u < p) out.push_back(r);
    }
    return out;
}

std::vector<ImageRecord> sample_per_pattern(const std::vector<ImageRecord>& records,
                                            std::uint64_t seed) {
    std::map<Pattern, std::vector<ImageRecord>> groups;
    for (const auto& r : records) {
        for (auto p : r.patterns) groups[p].push_back(r);
    }
    std::map<std::string, ImageRecord> chosen;
    for (auto& [p, group] : groups) {
        std::sort(group.begin(), group.end(),
                  [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; });
        const std::uint64_t group_seed = SplitMix64(seed ^ (0x1000193ULL * (static_cast<std::uint64_t>(p) + 1))).next();
        for (auto& r : sample_by_pattern(group, group_seed)) chosen.emplace(r.id, r);
    }
    std::vector<ImageRecord> out;
    out.reserve(chosen.size());
    for (auto& [id, r] : chosen) out.push_back(std::move(r));
    return out;
}

} // namespace mmgen::corpus
