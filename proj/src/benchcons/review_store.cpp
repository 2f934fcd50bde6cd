#include "mmgen/benchcons/review_store.hpp"

#include "mmgen/common/error.hpp"
#include "mmgen/corpus/manifest.hpp"

#include <algorithm>
#include <sstream>

namespace mmgen::benchcons {

namespace fs = std::filesystem;
using nlohmann::json;

const ReviewTask* ReviewSnapshot::find(const std::string& id) const {
    auto it = index.find(id);
    return it == index.end() ? nullptr : &tasks[it->second];
}

namespace {

constexpr const char* kTasks = "tasks.jsonl";
constexpr const char* kVerdicts = "verdicts.jsonl";

std::vector<json> read_jsonl(const fs::path& path) {
    std::vector<json> out;
    if (!fs::exists(path)) return out;
    std::istringstream in(fsutil::read_text(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw Error("ReviewFormat", path.string() + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

} // namespace

void ReviewStore::create(const fs::path& dir, const std::vector<ReviewTask>& tasks) {
    fs::create_directories(dir);
    if (fs::exists(dir / kVerdicts) && fs::file_size(dir / kVerdicts) > 0) {
        throw ConfigError(dir.string() + " already holds review verdicts");
    }
    auto sorted = tasks;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
    std::string out;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i > 0 && sorted[i].image_id == sorted[i - 1].image_id) {
            throw ConfigError("duplicate review task " + sorted[i].image_id);
        }
        out += sorted[i].to_json().dump() + "\n";
    }
    fsutil::atomic_write(dir / kTasks, out);
}

std::vector<ReviewVerdict> ReviewStore::read_journal(const fs::path& path) {
    std::vector<ReviewVerdict> out;
    for (const auto& j : read_jsonl(path)) out.push_back(ReviewVerdict::from_json(j));
    return out;
}

ReviewStore::ReviewStore(fs::path dir) : dir_(std::move(dir)) {
    if (!fs::exists(dir_ / kTasks)) throw ConfigError("no " + std::string(kTasks) + " in " + dir_.string());
    auto snap = std::make_shared<ReviewSnapshot>();
    for (const auto& j : read_jsonl(dir_ / kTasks)) snap->tasks.push_back(ReviewTask::from_json(j));
    std::sort(snap->tasks.begin(), snap->tasks.end(), [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
    for (std::size_t i = 0; i < snap->tasks.size(); ++i) snap->index[snap->tasks[i].image_id] = i;
    for (auto& v : read_journal(dir_ / kVerdicts)) {
        if (!snap->index.contains(v.image_id)) throw Error("ReviewFormat", "verdict for unknown task " + v.image_id);
        snap->verdicts[v.image_id] = std::move(v);
        ++snap->journal_entries;
    }
    snap_ = std::move(snap);
    log_ = std::make_unique<fsutil::AppendLog>(dir_ / kVerdicts);
}

std::shared_ptr<const ReviewSnapshot> ReviewStore::snapshot() const {
    std::lock_guard lock(snap_mu_);
    return snap_;
}

ReviewStore::Outcome ReviewStore::submit(const std::string& task_id, ReviewVerdict verdict, bool amend) {
    std::lock_guard lock(write_mu_);
    const auto cur = snapshot();
    if (!cur->find(task_id)) return Outcome::NotFound;
    verdict.image_id = task_id;
    if (auto it = cur->verdicts.find(task_id); it != cur->verdicts.end()) {
        if (it->second.same_decision(verdict)) return Outcome::Unchanged;
        if (!amend) return Outcome::Conflict;
    }
    if (verdict.timestamp.empty()) verdict.timestamp = corpus::utc_timestamp_now();
    log_->append(verdict.to_json().dump());

    auto next = std::make_shared<ReviewSnapshot>(*cur);
    next->verdicts[task_id] = std::move(verdict);
    ++next->journal_entries;
    std::lock_guard swap(snap_mu_);
    snap_ = std::move(next);
    return Outcome::Accepted;
}

} // namespace mmgen::benchcons
