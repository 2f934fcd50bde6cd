#include "mmgen/pipeline/journal.hpp"

#include "mmgen/common/error.hpp"

#include <fstream>

namespace mmgen::pipeline {

using nlohmann::json;

std::string_view to_string(Stage s) {
    switch (s) {
    case Stage::Describe: return "describe";
    case Stage::EmbedInput: return "embed_input";
    case Stage::Generate: return "generate";
    case Stage::EmbedGenerated: return "embed_generated";
    }
    return "";
}

Stage parse_stage(std::string_view s) {
    if (s == "describe") return Stage::Describe;
    if (s == "embed_input") return Stage::EmbedInput;
    if (s == "generate") return Stage::Generate;
    if (s == "embed_generated") return Stage::EmbedGenerated;
    throw Error("JournalFormat", "unknown stage \"" + std::string(s) + "\"");
}

json JournalEvent::to_json() const {
    json j{{"stage", std::string(to_string(key.stage))},
           {"image", key.image},
           {"lmm", key.lmm},
           {"generator", key.generator},
           {"status", ok ? "ok" : "failed"},
           {"ms", elapsed_ms}};
    if (ok) j["output"] = output;
    if (!ok) {
        j["error"] = error_kind;
        j["reason"] = reason;
    }
    if (key.stage == Stage::Generate) j["seed"] = seed;
    return j;
}

JournalEvent JournalEvent::from_json(const json& j) {
    JournalEvent e;
    e.key.stage = parse_stage(j.at("stage").get<std::string>());
    e.key.image = j.at("image").get<std::string>();
    e.key.lmm = j.at("lmm").get<std::string>();
    e.key.generator = j.at("generator").get<std::string>();
    const auto status = j.at("status").get<std::string>();
    if (status != "ok" && status != "failed") throw Error("JournalFormat", "bad status " + status);
    e.ok = status == "ok";
    if (e.ok) e.output = j.at("output").get<std::string>();
    e.error_kind = j.value("error", "");
    e.reason = j.value("reason", "");
    e.seed = j.value("seed", std::uint64_t{0});
    e.elapsed_ms = j.value("ms", 0.0);
    return e;
}

Journal::Journal(const std::filesystem::path& path, Hook after_append) : log_(path), hook_(std::move(after_append)) {}

void Journal::append(const JournalEvent& e) {
    std::lock_guard lock(mu_);
    log_.append(e.to_json().dump());
    if (hook_) hook_(e);
}

std::vector<JournalEvent> Journal::replay(const std::filesystem::path& path) {
    std::vector<JournalEvent> events;
    std::ifstream in(path, std::ios::binary);
    if (!in) return events;
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t offset = 0;
    while (offset < data.size()) {
        const auto nl = data.find('\n', offset);
        if (nl == std::string::npos) throw CorruptJournal(offset, "truncated record (no terminating newline)");
        const std::string_view line(data.data() + offset, nl - offset);
        if (!line.empty()) {
            try {
                events.push_back(JournalEvent::from_json(json::parse(line)));
            } catch (const std::exception& e) {
                throw CorruptJournal(offset, e.what());
            }
        }
        offset = nl + 1;
    }
    return events;
}

std::map<StageKey, JournalEvent> Journal::completed(const std::vector<JournalEvent>& events) {
    std::map<StageKey, JournalEvent> done;
    for (const auto& e : events) done[e.key] = e;
    return done;
}

} // namespace mmgen::pipeline
