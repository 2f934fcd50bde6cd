#pragma once

#include "mmgen/common/fsutil.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

namespace mmgen::pipeline {

enum class Stage { Describe, EmbedInput, Generate, EmbedGenerated };

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

/// Work-item identity. Describe uses (image, lmm, ""), EmbedInput uses
/// (image, "", ""), Generate/EmbedGenerated use (image, lmm, generator).
struct StageKey {
    Stage stage;
    std::string image;
    std::string lmm;
    std::string generator;

    auto operator<=>(const StageKey&) const = default;
};

/// One completed (ok or failed) stage execution.
struct JournalEvent {
    StageKey key;
    bool ok = false;
    std::string output;      // content hash of the stage output when ok
    std::string error_kind;  // when failed
    std::string reason;      // when failed
    std::uint64_t seed = 0;  // Generate only
    double elapsed_ms = 0;

    [[nodiscard]] nlohmann::json to_json() const;
    static JournalEvent from_json(const nlohmann::json& j);
};

/// Append-only JSONL journal; every append is fsynced before returning and
/// appends from concurrent workers are serialized.
class Journal {
  public:
    using Hook = std::function<void(const JournalEvent&)>;

    explicit Journal(const std::filesystem::path& path, Hook after_append = {});

    void append(const JournalEvent& e);

    /// Parses a journal file. A record that does not parse, or a final line
    /// without its terminating newline, raises CorruptJournal with the byte
    /// offset of the start of that record. A missing file replays as empty.
    static std::vector<JournalEvent> replay(const std::filesystem::path& path);

    /// Latest event per key.
    static std::map<StageKey, JournalEvent> completed(const std::vector<JournalEvent>& events);

  private:
    std::mutex mu_;
    fsutil::AppendLog log_;
    Hook hook_;
};

} // namespace mmgen::pipeline
