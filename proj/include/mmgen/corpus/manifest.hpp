#pragma once

#include "mmgen/corpus/pattern.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace mmgen::corpus {

enum class ManifestKind { Test, Domain };

std::string_view to_string(ManifestKind k);
ManifestKind parse_manifest_kind(std::string_view s);

struct ImageRecord {
    std::string id;
    std::string hash; // lowercase hex SHA-256 of the payload bytes
    std::string uri;
    std::set<Pattern> patterns;
    std::uint32_t width = 0;
    std::uint32_t height = 0;

    bool operator==(const ImageRecord&) const = default;
};

struct Manifest {
    ManifestKind kind = ManifestKind::Domain;
    std::vector<ImageRecord> records;
    std::string taxonomy_version{kTaxonomyVersion};
    std::string created_at; // ISO-8601 UTC

    [[nodiscard]] const ImageRecord* find(std::string_view id) const;
    bool operator==(const Manifest&) const = default;
};

/// Canonical JSONL: a header line `{"manifest":{...}}` followed by one record
/// per line, keys sorted, patterns in taxonomy order.
std::string serialize_manifest(const Manifest& m);
Manifest parse_manifest(std::string_view jsonl);

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

std::string utc_timestamp_now();

struct IngestResult {
    Manifest manifest;
    std::vector<std::string> warnings;
};

/// Builds a manifest from image files and/or directories (searched
/// recursively for .png/.jpg/.jpeg/.webp). Hashing runs on an OpenMP worker
/// pool; record order is (filename, hash) regardless of scheduling.
IngestResult ingest_images(const std::vector<std::filesystem::path>& paths, ManifestKind kind);

struct Violation {
    std::string kind; // DuplicateId, MissingPattern, UnexpectedPattern, UncoveredPattern,
                      // DeadUri, HashMismatch, BadDimensions
    std::string id;
    std::string detail;
};

struct ValidationReport {
    bool valid = true;
    std::size_t image_count = 0;
    std::size_t pattern_slot_count = 0; // an image in k patterns counts k times
    std::map<Pattern, std::size_t> per_pattern;
    std::size_t min_pattern_count = 0;
    std::vector<Violation> violations;
    std::vector<std::string> warnings;
};

inline constexpr std::size_t kRecommendedMinPerPattern = 114;

struct ValidateOptions {
    bool check_uris = true; // stat local files and re-hash their bytes
};

ValidationReport validate_manifest(const Manifest& m, const ValidateOptions& opts = {});

} // namespace mmgen::corpus
