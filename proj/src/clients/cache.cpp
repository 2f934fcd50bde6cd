#include "mmgen/clients/cache.hpp"

#include "mmgen/common/fsutil.hpp"

namespace mmgen::clients {

namespace fs = std::filesystem;

std::string CacheKey::relative_path() const {
    return service + "/" + digest.substr(0, 2) + "/" + digest;
}

CacheKey make_cache_key(std::string_view service, const nlohmann::json& canonical_request) {
    std::string material(service);
    material += '\n';
    material += canonical_request.dump();
    return {std::string(service), sha256_hex(material)};
}

ContentStore::ContentStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

std::optional<Bytes> ContentStore::get(const CacheKey& key) const {
    const fs::path p = root_ / key.relative_path();
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) return std::nullopt;
    return fsutil::read_bytes(p);
}

void ContentStore::put(const CacheKey& key, std::span<const std::uint8_t> value) const {
    fsutil::atomic_write(root_ / key.relative_path(), value);
}

ContentStore::GcStats ContentStore::gc(std::chrono::seconds max_age, bool dry_run) const {
    GcStats stats;
    const auto now = fs::file_time_type::clock::now();
    std::vector<fs::path> doomed;
    for (const auto& entry : fs::recursive_directory_iterator(root_)) {
        if (!entry.is_regular_file()) continue;
        const bool temp = entry.path().filename().string().find(".tmp.") != std::string::npos;
        const bool old = max_age.count() == 0 || now - entry.last_write_time() > max_age;
        if (temp || old) {
            doomed.push_back(entry.path());
            stats.bytes_freed += entry.file_size();
        } else {
            ++stats.kept;
        }
    }
    stats.removed = doomed.size();
    if (!dry_run) {
        for (const auto& p : doomed) fs::remove(p);
    }
    return stats;
}

} // namespace mmgen::clients
