#include "mmgen/benchcons/construct.hpp"

#include "mmgen/common/error.hpp"
#include "mmgen/common/fsutil.hpp"
#include "mmgen/prompts/prompts.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace mmgen::benchcons {

using nlohmann::json;

json ExtractionResult::to_json() const {
    json j{{"image", image_id}, {"raw", raw}, {"attempts", attempts}};
    j["annotation"] = annotation ? json::parse(prompts::serialize_annotation(*annotation)) : json(nullptr);
    j["error"] = error.empty() ? json(nullptr) : json{{"kind", error_kind}, {"message", error}};
    return j;
}

ExtractionResult ExtractionResult::from_json(const json& j) {
    ExtractionResult r;
    r.image_id = j.at("image").get<std::string>();
    r.raw = j.value("raw", "");
    r.attempts = j.value("attempts", 0);
    if (j.contains("annotation") && !j["annotation"].is_null()) {
        r.annotation = prompts::parse_annotation(j["annotation"].dump(), false);
    }
    if (j.contains("error") && !j["error"].is_null()) {
        r.error_kind = j["error"].value("kind", "");
        r.error = j["error"].value("message", "");
    }
    return r;
}

namespace {

ExtractionResult annotate_one(const corpus::ImageRecord& rec, clients::LmmClient& lmm, const std::string& prompt,
                              bool restricted, const ConstructOptions& opts) {
    ExtractionResult out;
    out.image_id = rec.id;
    clients::LmmRequest req;
    try {
        req.image = fsutil::read_bytes(rec.uri.starts_with("file://") ? rec.uri.substr(7) : rec.uri);
    } catch (const Error& e) {
        out.error_kind = e.kind();
        out.error = e.what();
        return out;
    }
    req.prompt = prompt;
    req.temperature = opts.temperature;
    req.max_tokens = opts.max_tokens;
    for (int attempt = 0; attempt < 2; ++attempt) {
        req.cache_salt = attempt == 0 ? "" : "retry-" + std::to_string(attempt);
        ++out.attempts;
        try {
            out.raw = lmm.describe(req).text;
            out.annotation = prompts::parse_annotation(out.raw, restricted);
            out.error_kind.clear();
            out.error.clear();
            return out;
        } catch (const AuthError&) {
            throw;
        } catch (const Error& e) {
            out.error_kind = e.kind();
            out.error = e.what();
            const bool parse_failure = e.kind() == "NoJsonFound" || e.kind() == "SchemaMismatch" ||
                                       e.kind() == "UnknownPattern";
            if (!parse_failure) return out;
        }
    }
    return out;
}

std::vector<ExtractionResult> annotate_all(const corpus::Manifest& manifest, clients::LmmClient& lmm,
                                           prompts::PromptId prompt, bool restricted, const ConstructOptions& opts) {
    if (manifest.records.empty()) throw EmptyCorpus("manifest has no images");
    const std::string text = prompts::render(prompt);
    std::vector<ExtractionResult> results(manifest.records.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;
    std::mutex mu;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= results.size()) return;
            try {
                results[i] = annotate_one(manifest.records[i], lmm, text, restricted, opts);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!fatal) fatal = std::current_exception();
                next = results.size();
            }
        }
    };
    {
        std::vector<std::jthread> threads;
        const auto k = std::min<std::size_t>(results.size(), static_cast<std::size_t>(std::max(1, opts.workers)));
        for (std::size_t t = 0; t < k; ++t) threads.emplace_back(body);
    }
    if (fatal) std::rethrow_exception(fatal);
    return results;
}

} // namespace

std::vector<ExtractionResult> extract_patterns(const corpus::Manifest& manifest, clients::LmmClient& lmm,
                                               const ConstructOptions& opts) {
    return annotate_all(manifest, lmm, prompts::PromptId::Extraction, false, opts);
}

std::vector<ExtractionResult> reannotate(const corpus::Manifest& manifest, clients::LmmClient& lmm,
                                         const ConstructOptions& opts) {
    return annotate_all(manifest, lmm, prompts::PromptId::Reannotation, true, opts);
}

std::size_t FrequencyTable::occurrences() const noexcept {
    std::size_t n = 0;
    for (const auto& [_, c] : entries) n += c;
    return n;
}

json FrequencyTable::to_json() const {
    json counts = json::array();
    for (const auto& [name, c] : entries) counts.push_back(json::array({name, c}));
    return json{{"distinct_names", distinct_names()}, {"occurrences", occurrences()}, {"counts", counts}};
}

FrequencyTable FrequencyTable::from_json(const json& j) {
    std::vector<std::pair<std::string, std::size_t>> counts;
    for (const auto& e : j.at("counts")) counts.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::size_t>());
    return make_frequency_table(std::move(counts));
}

FrequencyTable make_frequency_table(std::vector<std::pair<std::string, std::size_t>> counts) {
    std::map<std::string, std::size_t> merged;
    for (auto& [name, c] : counts) {
        if (c > 0) merged[name] += c;
    }
    FrequencyTable t;
    t.entries.assign(merged.begin(), merged.end());
    std::stable_sort(t.entries.begin(), t.entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return t;
}

FrequencyTable tally(const std::vector<ExtractionResult>& results) {
    std::vector<std::pair<std::string, std::size_t>> counts;
    for (const auto& r : results) {
        if (!r.annotation) continue;
        for (const auto& name : r.annotation->image_pattern) counts.emplace_back(name, 1);
    }
    return make_frequency_table(std::move(counts));
}

prompts::SummaryProposal summarize(const FrequencyTable& freq, clients::LmmClient& lmm,
                                   std::optional<std::size_t> top_k, const ConstructOptions& opts) {
    if (freq.entries.empty()) throw Error("EmptyFrequencyTable", "frequency table is empty");
    clients::LmmRequest req;
    req.prompt = prompts::render_summary(freq.entries, top_k);
    req.temperature = opts.temperature;
    req.max_tokens = opts.max_tokens;
    const std::string raw = lmm.describe(req).text;
    try {
        return prompts::parse_summary(raw);
    } catch (const NoJsonFound& e) {
        throw NoJsonFound(std::string(e.what()) + "; raw response: " + raw);
    } catch (const SchemaMismatch& e) {
        throw SchemaMismatch(std::string(e.what()) + "; raw response: " + raw);
    }
}

corpus::Manifest annotated_manifest(const corpus::Manifest& source, const std::vector<ExtractionResult>& results) {
    std::map<std::string, const ExtractionResult*> by_id;
    for (const auto& r : results) by_id[r.image_id] = &r;
    corpus::Manifest out;
    out.kind = corpus::ManifestKind::Test;
    out.taxonomy_version = source.taxonomy_version;
    out.created_at = source.created_at;
    for (const auto& rec : source.records) {
        auto it = by_id.find(rec.id);
        if (it == by_id.end() || !it->second->annotation) continue;
        corpus::ImageRecord r = rec;
        r.patterns.clear();
        for (const auto& name : it->second->annotation->image_pattern) {
            if (auto p = corpus::try_parse_pattern(name)) r.patterns.insert(*p);
        }
        if (!r.patterns.empty()) out.records.push_back(std::move(r));
    }
    return out;
}

std::string serialize_results(const std::vector<ExtractionResult>& results) {
    std::string out;
    for (const auto& r : results) out += r.to_json().dump() + "\n";
    return out;
}

std::vector<ExtractionResult> parse_results(std::string_view jsonl) {
    std::vector<ExtractionResult> out;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(ExtractionResult::from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error("ResultsFormat", std::string("bad extraction result line: ") + e.what());
        }
    }
    return out;
}

} // namespace mmgen::benchcons
