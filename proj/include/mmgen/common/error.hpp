#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mmgen {

/// Base for every error raised by the library. `kind()` is a stable,
/// machine-readable tag (used in journals and reports); `what()` is prose.
class Error : public std::runtime_error {
  public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

  private:
    std::string kind_;
};

#define MMGEN_DEFINE_ERROR(Name)                                                \
    class Name : public Error {                                                 \
      public:                                                                   \
        explicit Name(const std::string& message) : Error(#Name, message) {}    \
    }

// corpus
MMGEN_DEFINE_ERROR(UndecodableImage);
MMGEN_DEFINE_ERROR(EmptyCorpus);
MMGEN_DEFINE_ERROR(ManifestFormatError);
// prompts / taxonomy
MMGEN_DEFINE_ERROR(UnknownPattern);
MMGEN_DEFINE_ERROR(NoJsonFound);
MMGEN_DEFINE_ERROR(SchemaMismatch);
// clients
MMGEN_DEFINE_ERROR(AuthError);
MMGEN_DEFINE_ERROR(PayloadTooLarge);
MMGEN_DEFINE_ERROR(SafetyRefusal);
MMGEN_DEFINE_ERROR(NetworkError);
// metrics
MMGEN_DEFINE_ERROR(DimensionMismatch);
MMGEN_DEFINE_ERROR(ZeroVector);
MMGEN_DEFINE_ERROR(TooFewSamples);
MMGEN_DEFINE_ERROR(UnknownImageId);
MMGEN_DEFINE_ERROR(ModelSetMismatch);
// pipeline
MMGEN_DEFINE_ERROR(ConfigError);
MMGEN_DEFINE_ERROR(IntegrityError);
MMGEN_DEFINE_ERROR(Interrupted);
// benchcons
MMGEN_DEFINE_ERROR(OrphanVerdict);

#undef MMGEN_DEFINE_ERROR

class ProviderError : public Error {
  public:
    ProviderError(int status, std::string body)
        : Error("ProviderError", "provider returned HTTP " + std::to_string(status) + ": " +
                                     body.substr(0, 200)),
          status_(status), body_(std::move(body)) {}

    [[nodiscard]] int status() const noexcept { return status_; }
    [[nodiscard]] const std::string& body() const noexcept { return body_; }

  private:
    int status_;
    std::string body_;
};

class CorruptJournal : public Error {
  public:
    CorruptJournal(std::uint64_t offset, const std::string& detail)
        : Error("CorruptJournal",
                "journal corrupt at byte offset " + std::to_string(offset) + ": " + detail),
          offset_(offset) {}

    [[nodiscard]] std::uint64_t offset() const noexcept { return offset_; }

  private:
    std::uint64_t offset_;
};

} // namespace mmgen
