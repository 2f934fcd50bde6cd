#pragma once

#include "mmgen/benchcons/votes.hpp"
#include "mmgen/common/fsutil.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace mmgen::benchcons {

/// Immutable view of review state; replaced wholesale after each write.
struct ReviewSnapshot {
    std::vector<ReviewTask> tasks; // ordered by id
    std::map<std::string, std::size_t> index;
    std::map<std::string, ReviewVerdict> verdicts; // latest accepted per task
    std::size_t journal_entries = 0;

    [[nodiscard]] TaskStatus status(const std::string& id) const {
        return verdicts.contains(id) ? TaskStatus::Done : TaskStatus::Open;
    }
    [[nodiscard]] const ReviewTask* find(const std::string& id) const;
    [[nodiscard]] std::size_t done() const noexcept { return verdicts.size(); }
};

/// `<dir>/tasks.jsonl` plus the append-only `<dir>/verdicts.jsonl` journal.
class ReviewStore {
  public:
    /// Writes tasks.jsonl; refuses a directory that already has verdicts.
    static void create(const std::filesystem::path& dir, const std::vector<ReviewTask>& tasks);

    /// Loads tasks and replays the verdict journal.
    explicit ReviewStore(std::filesystem::path dir);

    enum class Outcome { Accepted, Unchanged, NotFound, Conflict };

    /// Durably journals the verdict before returning Accepted. A verdict
    /// with the same decision as the current one is Unchanged and writes
    /// nothing. A different verdict on a done task needs `amend`.
    Outcome submit(const std::string& task_id, ReviewVerdict verdict, bool amend);

    [[nodiscard]] std::shared_ptr<const ReviewSnapshot> snapshot() const;
    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

    /// Reads a verdict journal into its sequence of accepted verdicts.
    static std::vector<ReviewVerdict> read_journal(const std::filesystem::path& path);

  private:
    std::filesystem::path dir_;
    std::mutex write_mu_;
    mutable std::mutex snap_mu_;
    std::shared_ptr<const ReviewSnapshot> snap_;
    std::unique_ptr<fsutil::AppendLog> log_;
};

} // namespace mmgen::benchcons
