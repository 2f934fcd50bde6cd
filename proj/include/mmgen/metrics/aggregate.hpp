#pragma once

#include "mmgen/corpus/manifest.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mmgen::metrics {

/// One (image, lmm, generator) outcome as seen by aggregation; `sim` is
/// empty when any stage failed.
struct ScoredItem {
    std::string image_id;
    std::optional<double> sim;
};

struct PatternStat {
    double mean = 0.0;
    std::size_t count = 0;
};

struct PatternScoreTable {
    double overall_mean = 0.0; // micro average over scored images; 0 when none
    std::size_t scored = 0;
    std::size_t failed = 0;
    std::size_t total = 0;
    std::map<corpus::Pattern, PatternStat> per_pattern; // only patterns with count > 0
};

/// Items are summed in ascending image-id order (stable), so results are
/// reproducible bit-for-bit. An image in k patterns contributes to k rows.
/// Throws UnknownImageId.
PatternScoreTable aggregate(std::vector<ScoredItem> items, const corpus::Manifest& manifest);

} // namespace mmgen::metrics
