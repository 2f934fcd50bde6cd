#pragma once

#include "mmgen/common/digest.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

namespace mmgen::clients {

/// Service kind plus the SHA-256 of the canonical (sorted-key) request JSON.
struct CacheKey {
    std::string service;
    std::string digest;

    [[nodiscard]] std::string relative_path() const;
    bool operator==(const CacheKey&) const = default;
};

CacheKey make_cache_key(std::string_view service, const nlohmann::json& canonical_request);

/// On-disk content-addressed store; writes are temp-file-then-rename, so
/// concurrent writers of the same key are harmless.
class ContentStore {
  public:
    explicit ContentStore(std::filesystem::path root);

    [[nodiscard]] std::optional<Bytes> get(const CacheKey& key) const;
    void put(const CacheKey& key, std::span<const std::uint8_t> value) const;
    void put(const CacheKey& key, std::string_view value) const {
        put(key, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(value.data()), value.size()));
    }

    struct GcStats {
        std::size_t removed = 0;
        std::size_t kept = 0;
        std::uintmax_t bytes_freed = 0;
    };
    /// Removes stray temp files and entries whose mtime is older than
    /// `max_age`; `max_age` of zero removes every entry.
    GcStats gc(std::chrono::seconds max_age, bool dry_run = false) const;

    [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }

  private:
    std::filesystem::path root_;
};

} // namespace mmgen::clients
