#pragma once

#include "mmgen/common/digest.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace mmgen::fsutil {

namespace fs = std::filesystem;

Bytes read_bytes(const fs::path& path);
std::string read_text(const fs::path& path);

/// Writes via a sibling temp file, fsync, then rename; readers never observe
/// a partial file.
void atomic_write(const fs::path& path, std::string_view contents);
inline void atomic_write(const fs::path& path, std::span<const std::uint8_t> contents) {
    atomic_write(path, as_chars(contents));
}

/// Appends one line (a trailing '\n' is added) and fsyncs before returning.
class AppendLog {
  public:
    explicit AppendLog(const fs::path& path);
    ~AppendLog();
    AppendLog(const AppendLog&) = delete;
    AppendLog& operator=(const AppendLog&) = delete;

    void append(std::string_view line);
    [[nodiscard]] const fs::path& path() const noexcept { return path_; }

  private:
    fs::path path_;
    int fd_ = -1;
};

} // namespace mmgen::fsutil
