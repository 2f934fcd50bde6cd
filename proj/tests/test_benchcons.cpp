#include "fixtures.hpp"

#include "mmgen/benchcons/construct.hpp"
#include "mmgen/benchcons/review_service.hpp"
#include "mmgen/benchcons/review_store.hpp"
#include "mmgen/benchcons/votes.hpp"
#include "mmgen/common/digest.hpp"
#include "mmgen/common/error.hpp"

#include <doctest.h>
#include <httplib.h>

#include <random>

using namespace mmgen;
using namespace mmgen::benchcons;
using corpus::Pattern;
using testkit::TempDir;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kExampleAnswer = R"({
    "description": "A surreal black and white painting of a person holding brains.",
    "image_pattern": ["Text", "Structural and Physical Characteristics"],
    "pattern_detail": {
        "Text": "The image contains the text `dog'.",
        "Structural and Physical Characteristics": "Leaning buildings."
}})";

const char* kRestrictedAnswer = R"(Sure. {"description": "d", "image_pattern": ["Text", "Count"],
  "pattern_detail": {"Text": "a sign", "Count": "three cats"}})";

struct Lab {
    TempDir tmp;
    corpus::Manifest m;
    std::shared_ptr<clients::StubProvider> stub = std::make_shared<clients::StubProvider>();
    clients::LmmClient lmm;

    explicit Lab(std::size_t n)
        : m(corpus::load_manifest(testkit::write_manifest(tmp.path(), n))),
          lmm(testkit::service("lmm"), stub, nullptr, quiet()) {}

    static clients::ClientOptions quiet() {
        clients::ClientOptions o;
        o.sleeper = [](clients::Millis) {};
        o.jitter = [] { return 0.0; };
        return o;
    }
};

ReviewVerdict verdict(const std::string& id, std::set<Pattern> ps, const std::string& who = "ann",
                      const std::string& ts = "2026-01-01T00:00:00Z") {
    ReviewVerdict v;
    v.image_id = id;
    v.patterns = std::move(ps);
    v.annotator = who;
    v.timestamp = ts;
    return v;
}

ExtractionResult model_result(const std::string& id, const std::vector<std::string>& names) {
    ExtractionResult r;
    r.image_id = id;
    prompts::PatternAnnotation a;
    a.image_pattern = names;
    for (const auto& n : names) a.pattern_detail[n] = "because";
    r.annotation = a;
    r.attempts = 1;
    return r;
}

} // namespace

TEST_CASE("extraction parses clean and prose-wrapped answers") {
    Lab lab(3);
    std::atomic<int> k{0};
    lab.stub->set_lmm_responder([&](const std::string&, const Bytes&) {
        return (k++ % 2 == 0) ? std::string(kExampleAnswer) : "Here you go:\n" + std::string(kExampleAnswer) + "\nThanks";
    });
    const auto rs = extract_patterns(lab.m, lab.lmm, {.workers = 1});
    REQUIRE(rs.size() == 3);
    for (std::size_t i = 0; i < rs.size(); ++i) {
        CHECK(rs[i].image_id == lab.m.records[i].id);
        REQUIRE(rs[i].ok());
        CHECK(rs[i].attempts == 1);
        CHECK(rs[i].annotation->image_pattern ==
              std::vector<std::string>{"Text", "Structural and Physical Characteristics"});
    }
    const auto freq = tally(rs);
    CHECK(freq.distinct_names() == 2);
    CHECK(freq.occurrences() == 6);
}

TEST_CASE("garbage twice becomes a failure that keeps the raw text") {
    Lab lab(2);
    const std::string bad = lab.m.records[1].hash;
    lab.stub->set_lmm_responder([&](const std::string&, const Bytes& img) {
        return sha256_hex(img) == bad ? std::string("I cannot produce JSON today.") : std::string(kExampleAnswer);
    });
    const auto rs = extract_patterns(lab.m, lab.lmm, {.workers = 2});
    REQUIRE(rs.size() == 2);
    CHECK(rs[0].ok());
    CHECK_FALSE(rs[1].ok());
    CHECK(rs[1].attempts == 2);
    CHECK(rs[1].error_kind == "NoJsonFound");
    CHECK(rs[1].raw == "I cannot produce JSON today.");
    CHECK(lab.stub->calls(clients::kChatPath) == 3);

    const auto back = parse_results(serialize_results(rs));
    REQUIRE(back.size() == 2);
    CHECK(back[1].raw == rs[1].raw);
    CHECK(back[0].annotation == rs[0].annotation);
}

TEST_CASE("a retry that succeeds counts two attempts") {
    Lab lab(1);
    std::atomic<int> k{0};
    lab.stub->set_lmm_responder([&](const std::string&, const Bytes&) {
        return k++ == 0 ? std::string("{\"oops\": 1}") : std::string(kExampleAnswer);
    });
    const auto rs = extract_patterns(lab.m, lab.lmm);
    REQUIRE(rs[0].ok());
    CHECK(rs[0].attempts == 2);
}

TEST_CASE("reannotation is restricted to the taxonomy") {
    Lab lab(100);
    const std::string odd = lab.m.records[17].hash;
    lab.stub->set_lmm_responder([&](const std::string&, const Bytes& img) {
        if (sha256_hex(img) == odd)
            return std::string(R"({"description":"d","image_pattern":["Lighting"],"pattern_detail":{"Lighting":"x"}})");
        return std::string(kRestrictedAnswer);
    });
    const auto rs = reannotate(lab.m, lab.lmm, {.workers = 4});
    REQUIRE(rs.size() == 100);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        CHECK(rs[i].image_id == lab.m.records[i].id);
        if (rs[i].ok()) {
            ++ok;
            CHECK(rs[i].annotation->image_pattern == std::vector<std::string>{"Text", "Count"});
        }
    }
    CHECK(ok == 99);
    CHECK(rs[17].error_kind == "UnknownPattern");

    const auto annotated = annotated_manifest(lab.m, rs);
    CHECK(annotated.records.size() == 99);
    CHECK(annotated.kind == corpus::ManifestKind::Test);
    CHECK(annotated.records[0].patterns == std::set<Pattern>{Pattern::Text, Pattern::Count});

    corpus::Manifest empty;
    CHECK_THROWS_AS(reannotate(empty, lab.lmm), EmptyCorpus);
}

TEST_CASE("auth failure aborts construction") {
    Lab lab(2);
    lab.stub->script(clients::kChatPath, {{401, "no", "text/plain"}});
    CHECK_THROWS_AS(extract_patterns(lab.m, lab.lmm, {.workers = 1}), AuthError);
}

TEST_CASE("frequency table ordering") {
    const auto t = make_frequency_table({{"b", 3}, {"a", 3}, {"c", 5}, {"b", 1}, {"d", 1}});
    const std::vector<std::pair<std::string, std::size_t>> expected{{"c", 5}, {"b", 4}, {"a", 3}, {"d", 1}};
    CHECK(t.entries == expected);
    CHECK(t.distinct_names() == 4);
    CHECK(t.occurrences() == 13);
    CHECK(FrequencyTable::from_json(t.to_json()).entries == t.entries);
}

TEST_CASE("summary proposal is deterministic") {
    Lab lab(1);
    std::vector<std::string> prompts_seen;
    std::mutex mu;
    lab.stub->set_lmm_responder([&](const std::string& prompt, const Bytes& img) {
        std::lock_guard lock(mu);
        prompts_seen.push_back(prompt);
        CHECK(img.empty());
        return std::string(R"({"image_pattern":["Count","Text"],"pattern_detail":{"Count":"numbers","Text":"words"}})");
    });
    const auto t = make_frequency_table({{"Quantity", 9}, {"Text", 7}, {"Number", 4}});
    const auto a = summarize(t, lab.lmm, 2);
    const auto b = summarize(t, lab.lmm, 2);
    CHECK(a.image_pattern == b.image_pattern);
    CHECK(a.pattern_detail == b.pattern_detail);
    REQUIRE(prompts_seen.size() == 2);
    CHECK(prompts_seen[0] == prompts_seen[1]);
    CHECK(prompts_seen[0].find("Quantity") != std::string::npos);
    CHECK(prompts_seen[0].find("Number") == std::string::npos);

    CHECK_THROWS_AS(summarize(FrequencyTable{}, lab.lmm), Error);
    lab.stub->set_lmm_responder([](const std::string&, const Bytes&) { return std::string("no json"); });
    try {
        summarize(t, lab.lmm);
        FAIL("expected NoJsonFound");
    } catch (const NoJsonFound& e) {
        CHECK(std::string(e.what()).find("no json") != std::string::npos);
    }
}

TEST_CASE("merge voting rules") {
    corpus::Manifest src;
    for (const char* id : {"a", "b", "c", "d", "e"}) {
        corpus::ImageRecord r;
        r.id = id;
        r.hash = std::string(64, 'f');
        r.uri = std::string("/x/") + id;
        r.width = r.height = 10;
        src.records.push_back(r);
    }
    const std::vector<ExtractionResult> model{
        model_result("a", {"Artistic", "Color"}), model_result("b", {"Text"}), model_result("c", {"Count"}),
        model_result("d", {"Natural"}), model_result("e", {"Color"})};

    const std::vector<ReviewVerdict> human{
        verdict("a", {Pattern::Color, Pattern::Count}),     // {A,B} + {B,C} with override
        verdict("b", {Pattern::Text}),                       // unanimity
        [] { auto v = verdict("c", {Pattern::Count}); v.reject_image = true; return v; }(),
        [] { auto v = verdict("d", {Pattern::Natural, Pattern::Text}); v.override_model = false; return v; }(),
    };
    const auto m = merge_votes(src, model, human);
    REQUIRE(m.records.size() == 3);
    CHECK(m.kind == corpus::ManifestKind::Test);
    CHECK(m.records[0].id == "a");
    CHECK(m.records[0].patterns == std::set<Pattern>{Pattern::Color, Pattern::Count});
    CHECK(m.records[1].patterns == std::set<Pattern>{Pattern::Text});
    CHECK(m.records[2].id == "d");
    CHECK(m.records[2].patterns == std::set<Pattern>{Pattern::Natural});
    CHECK(m.records[0].uri == "/x/a");

    // Verdict order does not matter.
    std::mt19937_64 rng(3);
    auto shuffled = human;
    shuffled.push_back(verdict("a", {Pattern::Artistic}, "bob", "2026-02-01T00:00:00Z"));
    const auto expected = corpus::serialize_manifest(merge_votes(src, model, shuffled));
    for (int t = 0; t < 20; ++t) {
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(corpus::serialize_manifest(merge_votes(src, model, shuffled)) == expected);
    }
    // The later verdict won for "a".
    CHECK(merge_votes(src, model, shuffled).records[0].patterns == std::set<Pattern>{Pattern::Artistic});

    auto orphan = human;
    orphan.push_back(verdict("zzz", {Pattern::Text}));
    CHECK_THROWS_AS(merge_votes(src, model, orphan), OrphanVerdict);
}

TEST_CASE("verdict json validation") {
    const auto v = verdict("a", {Pattern::Text});
    CHECK(ReviewVerdict::from_json(v.to_json()).same_decision(v));
    CHECK_THROWS_AS(ReviewVerdict::from_json(json{{"image", "a"}, {"patterns", {"Text"}}}), SchemaMismatch);
    CHECK_THROWS_AS(ReviewVerdict::from_json(json{{"image", "a"}, {"patterns", {"Lighting"}}, {"annotator", "x"}}),
                    UnknownPattern);
    CHECK_THROWS_AS(ReviewVerdict::from_json(json{{"image", "a"}, {"patterns", json::array()}, {"annotator", "x"}}),
                    SchemaMismatch);
    const auto rej = ReviewVerdict::from_json(
        json{{"image", "a"}, {"patterns", json::array()}, {"annotator", "x"}, {"reject_image", true}});
    CHECK(rej.reject_image);
    auto later = v;
    later.timestamp = "2027-01-01T00:00:00Z";
    CHECK(later.same_decision(v));
}

TEST_CASE("review store replays its journal") {
    Lab lab(4);
    std::vector<ExtractionResult> model;
    for (const auto& r : lab.m.records) model.push_back(model_result(r.id, {"Text"}));
    const auto tasks = make_review_tasks(lab.m.records, model);
    REQUIRE(tasks.size() == 4);
    CHECK(tasks[0].proposed == std::set<Pattern>{Pattern::Text});

    const fs::path dir = lab.tmp / "review";
    ReviewStore::create(dir, tasks);
    {
        ReviewStore s(dir);
        const auto id = tasks[1].image_id;
        CHECK(s.submit(id, verdict(id, {Pattern::Text}), false) == ReviewStore::Outcome::Accepted);
        CHECK(s.submit(id, verdict(id, {Pattern::Text}, "ann", "2030-01-01T00:00:00Z"), false) ==
              ReviewStore::Outcome::Unchanged);
        CHECK(s.submit(id, verdict(id, {Pattern::Count}), false) == ReviewStore::Outcome::Conflict);
        CHECK(s.submit(id, verdict(id, {Pattern::Count}), true) == ReviewStore::Outcome::Accepted);
        CHECK(s.submit("nope", verdict("nope", {Pattern::Count}), false) == ReviewStore::Outcome::NotFound);
        CHECK(s.snapshot()->done() == 1);
    }
    ReviewStore again(dir);
    const auto snap = again.snapshot();
    CHECK(snap->done() == 1);
    CHECK(snap->journal_entries == 2);
    CHECK(snap->verdicts.at(tasks[1].image_id).patterns == std::set<Pattern>{Pattern::Count});
    CHECK(ReviewStore::read_journal(dir / "verdicts.jsonl").size() == 2);
    CHECK_THROWS(ReviewStore::create(dir, tasks));
}

TEST_CASE("review http service") {
    Lab lab(10);
    std::vector<ExtractionResult> model;
    for (const auto& r : lab.m.records) model.push_back(model_result(r.id, {"Color"}));
    const fs::path dir = lab.tmp / "review";
    ReviewStore::create(dir, make_review_tasks(lab.m.records, model));
    auto store = std::make_shared<ReviewStore>(dir);
    ReviewService svc(store);
    httplib::Client cli("127.0.0.1", svc.port());

    const auto body = [](const httplib::Result& r) { return json::parse(r->body); };
    const auto post = [&](const std::string& id, const json& v, bool amend = false) {
        json b = v;
        if (amend) b["amend"] = true;
        return cli.Post(("/tasks/" + id + "/verdict").c_str(), b.dump(), "application/json");
    };

    auto r = cli.Get("/healthz");
    REQUIRE(r);
    CHECK(r->status == 200);

    r = cli.Get("/tasks?limit=4");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(body(r)["total"] == 10);
    CHECK(body(r)["tasks"].size() == 4);
    CHECK(body(r)["tasks"][0]["id"] == lab.m.records[0].id);
    r = cli.Get("/tasks?offset=8&limit=4");
    CHECK(body(r)["tasks"].size() == 2);
    CHECK(cli.Get("/tasks?limit=-1")->status == 422);
    CHECK(cli.Get("/tasks?status=maybe")->status == 422);

    const auto id = lab.m.records[3].id;
    r = cli.Get(("/tasks/" + id).c_str());
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(body(r)["status"] == "open");
    CHECK(base64_decode(body(r)["image_b64"].get<std::string>()) == fsutil::read_bytes(lab.m.records[3].uri));
    CHECK(cli.Get("/tasks/missing")->status == 404);

    const json v{{"image", id}, {"patterns", {"Color"}}, {"annotator", "ann"}};
    r = post(id, v);
    CHECK(r->status == 200);
    CHECK(body(r)["progress"]["done"] == 1);
    CHECK(body(r)["task"]["status"] == "done");
    const auto journal = testkit::slurp(dir / "verdicts.jsonl");
    CHECK(post(id, v)->status == 200); // idempotent repeat
    CHECK(testkit::slurp(dir / "verdicts.jsonl") == journal);

    const json changed{{"image", id}, {"patterns", {"Text"}}, {"annotator", "ann"}};
    r = post(id, changed);
    CHECK(r->status == 409);
    CHECK(body(r)["error"]["code"] == "task_closed");
    CHECK(post(id, changed, true)->status == 200);

    CHECK(post("missing", v)->status == 404);
    CHECK(cli.Post(("/tasks/" + id + "/verdict").c_str(), "{nope", "application/json")->status == 422);
    CHECK(post(id, json{{"image", id}, {"patterns", {"Lighting"}}, {"annotator", "a"}})->status == 422);
    CHECK(post(id, json{{"image", lab.m.records[4].id}, {"patterns", {"Color"}}, {"annotator", "a"}})->status == 422);

    for (int k = 5; k < 7; ++k) {
        const auto other = lab.m.records[static_cast<std::size_t>(k)].id;
        CHECK(post(other, json{{"image", other}, {"patterns", {"Color"}}, {"annotator", "ann"}})->status == 200);
    }
    r = cli.Get("/progress");
    CHECK(body(r) == json{{"done", 3}, {"open", 7}, {"total", 10}});
    r = cli.Get("/tasks?status=done");
    CHECK(body(r)["total"] == 3);
    r = cli.Get("/tasks?status=open&limit=100");
    CHECK(body(r)["tasks"].size() == 7);

    httplib::Headers h{{"Origin", "http://localhost:5173"}};
    r = cli.Get("/progress", h);
    CHECK(r->has_header("Access-Control-Allow-Origin"));
    r = cli.Options("/tasks/x/verdict");
    CHECK(r->status == 204);

    svc.stop();
}
