#include "mmgen/corpus/manifest.hpp"

#include "mmgen/common/error.hpp"
#include "mmgen/common/fsutil.hpp"
#include "mmgen/corpus/image_probe.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace mmgen::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(ManifestKind k) { return k == ManifestKind::Test ? "test" : "domain"; }

ManifestKind parse_manifest_kind(std::string_view s) {
    if (s == "test") return ManifestKind::Test;
    if (s == "domain") return ManifestKind::Domain;
    throw ManifestFormatError("unknown manifest kind \"" + std::string(s) + "\"");
}

const ImageRecord* Manifest::find(std::string_view id) const {
    for (const auto& r : records) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

namespace {

json record_to_json(const ImageRecord& r) {
    json patterns = json::array();
    for (auto p : r.patterns) patterns.push_back(std::string(name(p)));
    return json{{"id", r.id}, {"hash", r.hash}, {"uri", r.uri},
                {"patterns", patterns}, {"w", r.width}, {"h", r.height}};
}

ImageRecord record_from_json(const json& j) {
    ImageRecord r;
    try {
        r.id = j.at("id").get<std::string>();
        r.hash = j.at("hash").get<std::string>();
        r.uri = j.at("uri").get<std::string>();
        for (const auto& p : j.at("patterns")) r.patterns.insert(parse_pattern(p.get<std::string>()));
        r.width = j.at("w").get<std::uint32_t>();
        r.height = j.at("h").get<std::uint32_t>();
    } catch (const json::exception& e) {
        throw ManifestFormatError(std::string("bad manifest record: ") + e.what());
    }
    return r;
}

bool is_image_extension(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".webp";
}

} // namespace

std::string serialize_manifest(const Manifest& m) {
    std::string out;
    const json header{{"manifest",
                       {{"kind", std::string(to_string(m.kind))},
                        {"taxonomy_version", m.taxonomy_version},
                        {"created_at", m.created_at}}}};
    out += header.dump();
    out += '\n';
    for (const auto& r : m.records) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    return out;
}

Manifest parse_manifest(std::string_view jsonl) {
    Manifest m;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    bool first = true;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ManifestFormatError("line " + std::to_string(lineno) + ": " + e.what());
        }
        if (first && j.contains("manifest")) {
            const auto& h = j["manifest"];
            m.kind = parse_manifest_kind(h.value("kind", "domain"));
            m.taxonomy_version = h.value("taxonomy_version", std::string(kTaxonomyVersion));
            m.created_at = h.value("created_at", "");
        } else {
            m.records.push_back(record_from_json(j));
        }
        first = false;
    }
    return m;
}

Manifest load_manifest(const fs::path& path) { return parse_manifest(fsutil::read_text(path)); }

void save_manifest(const Manifest& m, const fs::path& path) {
    fsutil::atomic_write(path, serialize_manifest(m));
}

std::string utc_timestamp_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

IngestResult ingest_images(const std::vector<fs::path>& paths, ManifestKind kind) {
    std::vector<fs::path> files;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            for (const auto& entry : fs::recursive_directory_iterator(p)) {
                if (entry.is_regular_file() && is_image_extension(entry.path())) {
                    files.push_back(entry.path());
                }
            }
        } else {
            files.push_back(p);
        }
    }
    if (files.empty()) {
        throw EmptyCorpus("no images found in the given paths");
    }

    struct Scanned {
        ImageRecord record;
        std::optional<std::string> error;
    };
    std::vector<Scanned> scanned(files.size());

#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < files.size(); ++i) {
        try {
            const Bytes bytes = fsutil::read_bytes(files[i]);
            const ImageInfo info = probe_image(bytes);
            auto& r = scanned[i].record;
            r.hash = sha256_hex(bytes);
            r.uri = fs::absolute(files[i]).lexically_normal().string();
            r.width = info.width;
            r.height = info.height;
        } catch (const std::exception& e) {
            scanned[i].error = e.what();
        }
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (scanned[i].error) {
            throw UndecodableImage(files[i].string() + ": " + *scanned[i].error);
        }
    }

    std::vector<std::size_t> order(files.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto fa = files[a].filename().string();
        const auto fb = files[b].filename().string();
        if (fa != fb) return fa < fb;
        if (scanned[a].record.hash != scanned[b].record.hash) {
            return scanned[a].record.hash < scanned[b].record.hash;
        }
        return scanned[a].record.uri < scanned[b].record.uri;
    });

    IngestResult result;
    result.manifest.kind = kind;
    result.manifest.created_at = utc_timestamp_now();
    std::unordered_map<std::string, std::string> uri_by_hash;
    std::set<std::string> used_ids;
    for (auto i : order) {
        ImageRecord r = std::move(scanned[i].record);
        std::string id = files[i].stem().string();
        if (used_ids.count(id)) id += "-" + r.hash.substr(0, 8);
        for (int n = 2; used_ids.count(id); ++n) id = files[i].stem().string() + "-" + std::to_string(n);
        used_ids.insert(id);
        r.id = id;
        auto [it, inserted] = uri_by_hash.emplace(r.hash, r.uri);
        if (!inserted) {
            result.warnings.push_back("DuplicateHash: " + it->second + " and " + r.uri +
                                      " have identical bytes (" + r.hash + ")");
        }
        result.manifest.records.push_back(std::move(r));
    }
    return result;
}

ValidationReport validate_manifest(const Manifest& m, const ValidateOptions& opts) {
    ValidationReport rep;
    rep.image_count = m.records.size();
    for (auto p : all_patterns()) rep.per_pattern[p] = 0;

    std::set<std::string> seen;
    std::unordered_map<std::string, std::string> id_by_hash;
    auto violate = [&](std::string kind, const std::string& id, std::string detail) {
        rep.violations.push_back({std::move(kind), id, std::move(detail)});
    };

    for (const auto& r : m.records) {
        if (!seen.insert(r.id).second) violate("DuplicateId", r.id, "id appears more than once");
        if (m.kind == ManifestKind::Test && r.patterns.empty()) {
            violate("MissingPattern", r.id, "test record has no pattern labels");
        }
        if (m.kind == ManifestKind::Domain && !r.patterns.empty()) {
            violate("UnexpectedPattern", r.id, "domain record carries pattern labels");
        }
        if (r.width == 0 || r.height == 0) violate("BadDimensions", r.id, "width/height must be positive");
        for (auto p : r.patterns) ++rep.per_pattern[p];
        rep.pattern_slot_count += r.patterns.size();

        auto [it, inserted] = id_by_hash.emplace(r.hash, r.id);
        if (!inserted) rep.warnings.push_back("DuplicateHash: " + it->second + " and " + r.id);

        if (opts.check_uris && r.uri.find("://") == std::string::npos) {
            std::error_code ec;
            if (!fs::is_regular_file(r.uri, ec)) {
                violate("DeadUri", r.id, r.uri);
            } else if (sha256_hex(fsutil::read_bytes(r.uri)) != r.hash) {
                violate("HashMismatch", r.id, "payload bytes do not match recorded hash");
            }
        }
    }

    if (m.kind == ManifestKind::Test) {
        rep.min_pattern_count = rep.image_count == 0 ? 0 : SIZE_MAX;
        for (const auto& [p, count] : rep.per_pattern) {
            rep.min_pattern_count = std::min(rep.min_pattern_count, count);
            if (count == 0) {
                violate("UncoveredPattern", std::string(name(p)), "no record carries this pattern");
            } else if (count < kRecommendedMinPerPattern) {
                rep.warnings.push_back("pattern " + std::string(name(p)) + " has " +
                                       std::to_string(count) + " images (reference set has >= " +
                                       std::to_string(kRecommendedMinPerPattern) + ")");
            }
        }
    }
    rep.valid = rep.violations.empty();
    return rep;
}

} // namespace mmgen::corpus
