#include "mmgen/metrics/aggregate.hpp"

#include "mmgen/common/error.hpp"

#include <algorithm>
#include <unordered_map>

namespace mmgen::metrics {

PatternScoreTable aggregate(std::vector<ScoredItem> items, const corpus::Manifest& manifest) {
    std::unordered_map<std::string, const corpus::ImageRecord*> by_id;
    for (const auto& r : manifest.records) by_id.emplace(r.id, &r);

    std::stable_sort(items.begin(), items.end(),
                     [](const ScoredItem& a, const ScoredItem& b) { return a.image_id < b.image_id; });

    PatternScoreTable t;
    t.total = items.size();
    double sum = 0.0;
    std::map<corpus::Pattern, double> sums;
    for (const auto& item : items) {
        auto it = by_id.find(item.image_id);
        if (it == by_id.end()) throw UnknownImageId("image id not in manifest: " + item.image_id);
        if (!item.sim) {
            ++t.failed;
            continue;
        }
        ++t.scored;
        sum += *item.sim;
        for (auto p : it->second->patterns) {
            sums[p] += *item.sim;
            ++t.per_pattern[p].count;
        }
    }
    if (t.scored > 0) t.overall_mean = sum / static_cast<double>(t.scored);
    for (auto& [p, stat] : t.per_pattern) stat.mean = sums[p] / static_cast<double>(stat.count);
    return t;
}

} // namespace mmgen::metrics
