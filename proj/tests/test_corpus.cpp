#include "fixtures.hpp"

#include "mmgen/common/error.hpp"
#include "mmgen/corpus/image_probe.hpp"
#include "mmgen/corpus/manifest.hpp"
#include "mmgen/corpus/pattern.hpp"
#include "mmgen/corpus/sampling.hpp"

#include <doctest.h>

#include <random>

using namespace mmgen;
using namespace mmgen::corpus;
namespace fs = std::filesystem;

TEST_CASE("taxonomy has thirteen patterns in a fixed order") {
    const auto& all = all_patterns();
    REQUIRE(all.size() == 13);
    const std::vector<std::string> expected{"Surreal",     "Technology", "Natural",  "Artistic", "Color",
                                            "Count",       "Orientation", "Position", "Contextual", "Text",
                                            "Symbol",      "Geometry",   "Motion"};
    for (std::size_t i = 0; i < all.size(); ++i) {
        CHECK(name(all[i]) == expected[i]);
        CHECK(parse_pattern(expected[i]) == all[i]);
        CHECK_FALSE(explanation(all[i]).empty());
    }
    CHECK_THROWS_AS(parse_pattern("Lighting"), UnknownPattern);
    CHECK_FALSE(try_parse_pattern("surreal").has_value());
}

TEST_CASE("image probing reads dimensions from headers") {
    const auto png = clients::solid_png(13, 7, 1, 2, 3);
    const auto info = probe_image(png);
    CHECK(info.format == ImageFormat::Png);
    CHECK(info.width == 13);
    CHECK(info.height == 7);
    CHECK(mime_type(info.format) == "image/png");

    // SOI, APP0 (len 4), SOF0: len 11, precision 8, height 0x0102, width 0x0304
    const Bytes jpeg{0xFF, 0xD8, 0xFF, 0xE0, 0x00, 0x04, 0x00, 0x00, 0xFF, 0xC0, 0x00, 0x0B,
                     0x08, 0x01, 0x02, 0x03, 0x04, 0x03, 0x01, 0x11, 0x00};
    const auto j = probe_image(jpeg);
    CHECK(j.format == ImageFormat::Jpeg);
    CHECK(j.width == 0x0304);
    CHECK(j.height == 0x0102);

    const Bytes garbage{'n', 'o', 't', ' ', 'a', 'n', ' ', 'i', 'm', 'a', 'g', 'e'};
    CHECK_THROWS_AS(probe_image(garbage), UndecodableImage);
    CHECK_THROWS_AS(probe_image(Bytes{}), UndecodableImage);
}

TEST_CASE("ingest hashes, orders and disambiguates") {
    testkit::TempDir tmp;
    CHECK_THROWS_AS(ingest_images({tmp.path()}, ManifestKind::Domain), EmptyCorpus);

    testkit::write_png_corpus(tmp / "a", 3);
    testkit::write_png_corpus(tmp / "b", 1); // b/img00.png has the same bytes as a/img00.png
    const auto res = ingest_images({tmp / "a", tmp / "b"}, ManifestKind::Domain);
    REQUIRE(res.manifest.records.size() == 4);
    std::set<std::string> ids;
    for (const auto& r : res.manifest.records) {
        ids.insert(r.id);
        CHECK(r.hash == sha256_hex(fsutil::read_bytes(r.uri)));
        CHECK(r.width > 0);
    }
    CHECK(ids.size() == 4);
    CHECK(ids.contains("img01"));
    REQUIRE(res.warnings.size() == 1);
    CHECK(res.warnings[0].starts_with("DuplicateHash"));

    fsutil::atomic_write(tmp / "bad" / "x.png", std::string("not a png"));
    CHECK_THROWS_AS(ingest_images({tmp / "bad"}, ManifestKind::Domain), UndecodableImage);
}

TEST_CASE("manifest serialization round-trips") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        Manifest m;
        m.kind = trial % 2 ? ManifestKind::Test : ManifestKind::Domain;
        m.created_at = "2024-01-01T00:00:00Z";
        const int n = static_cast<int>(rng() % 20);
        for (int i = 0; i < n; ++i) {
            ImageRecord r;
            r.id = "id" + std::to_string(i);
            r.hash = sha256_hex(r.id);
            r.uri = "/data/" + r.id + ".png";
            r.width = 1 + static_cast<std::uint32_t>(rng() % 4000);
            r.height = 1 + static_cast<std::uint32_t>(rng() % 4000);
            for (auto p : all_patterns()) {
                if (rng() % 4 == 0) r.patterns.insert(p);
            }
            m.records.push_back(r);
        }
        const auto text = serialize_manifest(m);
        const auto back = parse_manifest(text);
        CHECK(back.kind == m.kind);
        CHECK(back.records == m.records);
        CHECK(serialize_manifest(back) == text);
    }
    CHECK_THROWS_AS(parse_manifest("{\"manifest\":{\"kind\":\"test\"}}\n{broken\n"), ManifestFormatError);
}

TEST_CASE("validation reports violations and both count views") {
    Manifest m;
    m.kind = ManifestKind::Test;
    // 1,284 images; image i carries patterns i mod 13 and, for even i, (i+1) mod 13.
    const auto& all = all_patterns();
    std::map<Pattern, std::size_t> oracle;
    std::size_t slots = 0;
    for (std::size_t i = 0; i < 1284; ++i) {
        ImageRecord r;
        r.id = "t" + std::to_string(i);
        r.hash = sha256_hex(r.id);
        r.uri = "mem://" + r.id;
        r.width = r.height = 64;
        r.patterns.insert(all[i % 13]);
        if (i % 2 == 0) r.patterns.insert(all[(i + 1) % 13]);
        for (auto p : r.patterns) ++oracle[p];
        slots += r.patterns.size();
        m.records.push_back(r);
    }
    const auto rep = validate_manifest(m);
    CHECK(rep.valid);
    CHECK(rep.image_count == 1284);
    CHECK(rep.pattern_slot_count == slots);
    CHECK(rep.pattern_slot_count > rep.image_count);
    std::size_t min_count = SIZE_MAX;
    for (auto p : all) {
        CHECK(rep.per_pattern.at(p) == oracle[p]);
        min_count = std::min(min_count, oracle[p]);
    }
    CHECK(rep.min_pattern_count == min_count);
    CHECK(min_count >= kRecommendedMinPerPattern);

    m.records[0].patterns.clear();
    m.records[1].id = m.records[2].id;
    m.records[3].width = 0;
    const auto bad = validate_manifest(m);
    CHECK_FALSE(bad.valid);
    std::set<std::string> kinds;
    for (const auto& v : bad.violations) kinds.insert(v.kind);
    CHECK(kinds == std::set<std::string>{"MissingPattern", "DuplicateId", "BadDimensions"});

    Manifest sparse;
    sparse.kind = ManifestKind::Test;
    sparse.records = {m.records[5]};
    const auto s = validate_manifest(sparse);
    std::size_t uncovered = 0;
    for (const auto& v : s.violations) uncovered += v.kind == "UncoveredPattern";
    CHECK(uncovered == 12);
}

TEST_CASE("validation checks local files") {
    testkit::TempDir tmp;
    testkit::write_png_corpus(tmp / "img", 2);
    auto m = ingest_images({tmp / "img"}, ManifestKind::Domain).manifest;
    CHECK(validate_manifest(m).valid);
    fs::remove(m.records[0].uri);
    fsutil::atomic_write(m.records[1].uri, std::string("changed"));
    const auto rep = validate_manifest(m);
    REQUIRE(rep.violations.size() == 2);
    CHECK(rep.violations[0].kind == "DeadUri");
    CHECK(rep.violations[1].kind == "HashMismatch");
    CHECK(validate_manifest(m, {.check_uris = false}).valid);
}

TEST_CASE("splitmix64 matches the reference stream") {
    SplitMix64 rng(0);
    CHECK(rng.next() == 0xE220A8397B1DCDAFULL);
    CHECK(rng.next() == 0x6E789E6AA1B965F4ULL);
    CHECK(rng.next() == 0x06C45D188009454FULL);
    SplitMix64 u(99);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK((x >= 0.0 && x < 1.0));
    }
}

namespace {

std::vector<ImageRecord> synthetic(std::size_t n) {
    std::vector<ImageRecord> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i].id = "r" + std::to_string(i);
    return out;
}

} // namespace

TEST_CASE("sampling keeps min(1, 100/N) of each pattern") {
    CHECK(inclusion_probability(0) == 0.0);
    CHECK(inclusion_probability(50) == 1.0);
    CHECK(inclusion_probability(100) == 1.0);
    CHECK(inclusion_probability(400) == doctest::Approx(0.25));
    for (std::size_t n : {1u, 7u, 99u, 100u}) CHECK(sample_by_pattern(synthetic(n), n).size() == n);

    const auto pool = synthetic(1000);
    double total = 0;
    const int trials = 2000;
    for (int t = 0; t < trials; ++t) total += static_cast<double>(sample_by_pattern(pool, 1000 + t).size());
    const double mean = total / trials;
    // sd of the mean = sqrt(1000 * 0.1 * 0.9 / 2000) ~ 0.21
    CHECK(mean > 99.0);
    CHECK(mean < 101.0);

    CHECK(sample_by_pattern(pool, 5) == sample_by_pattern(pool, 5));
    CHECK(sample_by_pattern(pool, 5) != sample_by_pattern(pool, 6));
}

TEST_CASE("per-pattern sampling is a deterministic union ordered by id") {
    auto recs = synthetic(600);
    const auto& all = all_patterns();
    for (std::size_t i = 0; i < recs.size(); ++i) recs[i].patterns = {all[i % 3], all[3 + i % 2]};
    const auto a = sample_per_pattern(recs, 11);
    auto shuffled = recs;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937(3));
    const auto b = sample_per_pattern(shuffled, 11);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].id == b[i].id);
    CHECK(std::is_sorted(a.begin(), a.end(), [](const auto& x, const auto& y) { return x.id < y.id; }));
    CHECK(a.size() < recs.size());

    // Small patterns are kept whole.
    auto small = synthetic(40);
    for (auto& r : small) r.patterns = {Pattern::Text};
    CHECK(sample_per_pattern(small, 1).size() == 40);
}
