#include "mmgen/benchcons/votes.hpp"

#include "mmgen/common/error.hpp"

#include <algorithm>

namespace mmgen::benchcons {

using nlohmann::json;

std::string_view to_string(TaskStatus s) { return s == TaskStatus::Open ? "open" : "done"; }

namespace {

json pattern_list(const std::set<corpus::Pattern>& ps) {
    json a = json::array();
    for (auto p : ps) a.push_back(std::string(corpus::name(p)));
    return a;
}

} // namespace

json ReviewTask::to_json() const {
    json r = json::object();
    for (const auto& [p, text] : rationale) r[std::string(corpus::name(p))] = text;
    return json{{"id", image_id}, {"uri", uri}, {"proposed", pattern_list(proposed)}, {"rationale", r},
                {"description", description}};
}

ReviewTask ReviewTask::from_json(const json& j) {
    ReviewTask t;
    t.image_id = j.at("id").get<std::string>();
    t.uri = j.at("uri").get<std::string>();
    for (const auto& n : j.at("proposed")) t.proposed.insert(corpus::parse_pattern(n.get<std::string>()));
    const json rationale = j.value("rationale", json::object());
    for (const auto& [k, v] : rationale.items()) {
        t.rationale[corpus::parse_pattern(k)] = v.get<std::string>();
    }
    t.description = j.value("description", "");
    return t;
}

bool ReviewVerdict::same_decision(const ReviewVerdict& o) const {
    return image_id == o.image_id && patterns == o.patterns && annotator == o.annotator &&
           reject_image == o.reject_image && override_model == o.override_model;
}

json ReviewVerdict::to_json() const {
    return json{{"image", image_id},        {"patterns", pattern_list(patterns)}, {"annotator", annotator},
                {"timestamp", timestamp},   {"reject_image", reject_image},       {"override", override_model}};
}

ReviewVerdict ReviewVerdict::from_json(const json& j) {
    if (!j.is_object()) throw SchemaMismatch("verdict must be a JSON object");
    auto field = [&](const char* key, auto check, const char* what) -> const json* {
        if (!j.contains(key)) return nullptr;
        if (!check(j[key])) throw SchemaMismatch(std::string(key) + " must be " + what);
        return &j[key];
    };
    ReviewVerdict v;
    if (auto* id = field("image", [](const json& x) { return x.is_string(); }, "a string")) v.image_id = id->get<std::string>();
    const json* ann = field("annotator", [](const json& x) { return x.is_string(); }, "a string");
    if (!ann || ann->get<std::string>().empty()) throw SchemaMismatch("annotator must be a non-empty string");
    v.annotator = ann->get<std::string>();
    if (auto* ts = field("timestamp", [](const json& x) { return x.is_string(); }, "a string")) v.timestamp = ts->get<std::string>();
    if (auto* r = field("reject_image", [](const json& x) { return x.is_boolean(); }, "a boolean")) v.reject_image = r->get<bool>();
    if (auto* o = field("override", [](const json& x) { return x.is_boolean(); }, "a boolean")) v.override_model = o->get<bool>();
    if (auto* ps = field("patterns", [](const json& x) { return x.is_array(); }, "an array")) {
        for (const auto& n : *ps) {
            if (!n.is_string()) throw SchemaMismatch("patterns must contain strings");
            v.patterns.insert(corpus::parse_pattern(n.get<std::string>()));
        }
    }
    if (v.patterns.empty() && !v.reject_image) {
        throw SchemaMismatch("verdict needs at least one pattern or reject_image=true");
    }
    return v;
}

std::vector<ReviewTask> make_review_tasks(const std::vector<corpus::ImageRecord>& records,
                                          const std::vector<ExtractionResult>& model) {
    std::map<std::string, const ExtractionResult*> by_id;
    for (const auto& r : model) by_id[r.image_id] = &r;
    std::vector<ReviewTask> tasks;
    for (const auto& rec : records) {
        ReviewTask t;
        t.image_id = rec.id;
        t.uri = rec.uri;
        auto it = by_id.find(rec.id);
        if (it != by_id.end() && it->second->annotation) {
            const auto& a = *it->second->annotation;
            t.description = a.description;
            for (const auto& name : a.image_pattern) {
                auto p = corpus::try_parse_pattern(name);
                if (!p) continue;
                t.proposed.insert(*p);
                if (auto d = a.pattern_detail.find(name); d != a.pattern_detail.end()) t.rationale[*p] = d->second;
            }
        }
        tasks.push_back(std::move(t));
    }
    std::sort(tasks.begin(), tasks.end(), [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
    return tasks;
}

corpus::Manifest merge_votes(const corpus::Manifest& source, const std::vector<ExtractionResult>& model,
                             const std::vector<ReviewVerdict>& human) {
    // Model set per image: union over its successful results, taxonomy names only.
    std::map<std::string, std::set<corpus::Pattern>> model_sets;
    for (const auto& r : model) {
        auto& s = model_sets[r.image_id];
        if (!r.annotation) continue;
        for (const auto& name : r.annotation->image_pattern) {
            if (auto p = corpus::try_parse_pattern(name)) s.insert(*p);
        }
    }

    std::map<std::string, const ReviewVerdict*> winner;
    for (const auto& v : human) {
        if (!model_sets.contains(v.image_id)) throw OrphanVerdict(v.image_id);
        auto [it, inserted] = winner.emplace(v.image_id, &v);
        if (inserted) continue;
        const auto key = [](const ReviewVerdict& x) { return std::tie(x.timestamp, x.annotator); };
        const ReviewVerdict& cur = *it->second;
        if (key(cur) < key(v) || (key(cur) == key(v) && cur.to_json().dump() < v.to_json().dump())) it->second = &v;
    }

    corpus::Manifest out;
    out.kind = corpus::ManifestKind::Test;
    out.taxonomy_version = source.taxonomy_version;
    out.created_at = source.created_at;
    for (const auto& [id, v] : winner) {
        if (v->reject_image) continue;
        const auto* rec = source.find(id);
        if (!rec) throw OrphanVerdict(id);
        const auto& m = model_sets.at(id);
        std::set<corpus::Pattern> final_set;
        for (auto p : v->patterns) {
            if (m.contains(p) || v->override_model) final_set.insert(p);
        }
        if (final_set.empty()) continue;
        corpus::ImageRecord r = *rec;
        r.patterns = std::move(final_set);
        out.records.push_back(std::move(r));
    }
    return out;
}

} // namespace mmgen::benchcons
