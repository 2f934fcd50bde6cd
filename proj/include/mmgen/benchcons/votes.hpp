#pragma once

#include "mmgen/benchcons/construct.hpp"
#include "mmgen/corpus/manifest.hpp"
#include "mmgen/corpus/pattern.hpp"

#include <json.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace mmgen::benchcons {

enum class TaskStatus { Open, Done };
std::string_view to_string(TaskStatus s);

struct ReviewTask {
    std::string image_id;
    std::string uri;
    std::set<corpus::Pattern> proposed;
    std::map<corpus::Pattern, std::string> rationale;
    std::string description;

    [[nodiscard]] nlohmann::json to_json() const;
    static ReviewTask from_json(const nlohmann::json& j);
};

struct ReviewVerdict {
    std::string image_id;
    std::set<corpus::Pattern> patterns;
    std::string annotator;
    std::string timestamp; // ISO-8601 UTC
    bool reject_image = false;
    bool override_model = true; // disagreements go the human's way

    /// Same decision, ignoring the timestamp.
    [[nodiscard]] bool same_decision(const ReviewVerdict& o) const;
    [[nodiscard]] nlohmann::json to_json() const;
    /// Throws SchemaMismatch / UnknownPattern on malformed input. Enforces a
    /// non-empty pattern set unless reject_image is set.
    static ReviewVerdict from_json(const nlohmann::json& j);
};

/// Tasks for the given (typically sampled) records, seeded with the model's
/// taxonomy patterns and rationales. Records without a successful result get
/// an empty proposal.
std::vector<ReviewTask> make_review_tasks(const std::vector<corpus::ImageRecord>& records,
                                          const std::vector<ExtractionResult>& model);

/// Per (image, pattern): kept when model and human agree; a human-only
/// pattern is added when the verdict has override set, and model-only
/// patterns are dropped. With several verdicts for one image the greatest
/// (timestamp, annotator, content) wins. Rejected images, images with an
/// empty final set and images without a verdict are left out. Output is a
/// Test manifest ordered by id; images come from `source`.
/// Throws OrphanVerdict when a verdict has no model result.
corpus::Manifest merge_votes(const corpus::Manifest& source, const std::vector<ExtractionResult>& model,
                             const std::vector<ReviewVerdict>& human);

} // namespace mmgen::benchcons
