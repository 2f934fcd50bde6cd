#include "mmgen/prompts/annotation.hpp"

#include "mmgen/common/error.hpp"
#include "mmgen/corpus/pattern.hpp"

#include <json.hpp>

#include <set>

namespace mmgen::prompts {

using nlohmann::json;

std::optional<std::string> extract_json_object(std::string_view raw) {
    for (std::size_t start = raw.find('{'); start != std::string_view::npos;
         start = raw.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            const char c = raw[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    std::string candidate(raw.substr(start, i - start + 1));
                    if (json::accept(candidate)) return candidate;
                    break;
                }
            }
        }
    }
    return std::nullopt;
}

namespace {

json parse_object(std::string_view raw) {
    auto text = extract_json_object(raw);
    if (!text) throw NoJsonFound("no JSON object found in model output");
    return json::parse(*text);
}

void read_patterns(const json& j, std::vector<std::string>& names,
                   std::map<std::string, std::string>& details) {
    if (!j.contains("image_pattern") || !j["image_pattern"].is_array()) {
        throw SchemaMismatch("image_pattern");
    }
    for (const auto& p : j["image_pattern"]) {
        if (!p.is_string()) throw SchemaMismatch("image_pattern");
        names.push_back(p.get<std::string>());
    }
    if (!j.contains("pattern_detail") || !j["pattern_detail"].is_object()) {
        throw SchemaMismatch("pattern_detail");
    }
    for (const auto& [k, v] : j["pattern_detail"].items()) {
        if (!v.is_string()) throw SchemaMismatch("pattern_detail");
        details[k] = v.get<std::string>();
    }
    const std::set<std::string> name_set(names.begin(), names.end());
    if (name_set.size() != names.size()) throw SchemaMismatch("image_pattern");
    std::set<std::string> detail_keys;
    for (const auto& [k, v] : details) detail_keys.insert(k);
    if (name_set != detail_keys) throw SchemaMismatch("pattern_detail");
}

} // namespace

PatternAnnotation parse_annotation(std::string_view raw, bool restricted) {
    const json j = parse_object(raw);
    PatternAnnotation a;
    if (!j.contains("description") || !j["description"].is_string()) {
        throw SchemaMismatch("description");
    }
    a.description = j["description"].get<std::string>();
    read_patterns(j, a.image_pattern, a.pattern_detail);
    if (restricted) {
        for (const auto& n : a.image_pattern) corpus::parse_pattern(n);
    }
    return a;
}

std::string serialize_annotation(const PatternAnnotation& a) {
    json j{{"description", a.description},
           {"image_pattern", a.image_pattern},
           {"pattern_detail", a.pattern_detail}};
    return j.dump();
}

SummaryProposal parse_summary(std::string_view raw) {
    const json j = parse_object(raw);
    SummaryProposal s;
    read_patterns(j, s.image_pattern, s.pattern_detail);
    s.raw = std::string(raw);
    return s;
}

} // namespace mmgen::prompts
