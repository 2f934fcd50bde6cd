#include "mmgen/pipeline/scoring.hpp"

#include "mmgen/common/error.hpp"
#include "mmgen/common/fsutil.hpp"
#include "mmgen/metrics/fid.hpp"
#include "mmgen/metrics/gaussian.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

namespace mmgen::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* status_name(StageStatus s) {
    switch (s) {
    case StageStatus::Pending: return "pending";
    case StageStatus::Ok: return "ok";
    case StageStatus::Failed: return "failed";
    }
    return "pending";
}

StageStatus parse_status(const std::string& s) {
    if (s == "pending") return StageStatus::Pending;
    if (s == "ok") return StageStatus::Ok;
    if (s == "failed") return StageStatus::Failed;
    throw Error("RecordFormat", "bad stage status " + s);
}

template <class T> json opt(const std::optional<T>& v) { return v ? json(*v) : json(nullptr); }

template <class T> std::optional<T> get_opt(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<T>();
}

json quality_json(const prompts::CaptionQuality& q) {
    return json{{"word_count", q.word_count},
                {"in_range", q.in_range},
                {"boilerplate_prefix", q.boilerplate_prefix},
                {"boilerplate_suffix", q.boilerplate_suffix},
                {"markers", q.markers}};
}

prompts::CaptionQuality quality_from_json(const json& j) {
    prompts::CaptionQuality q;
    q.word_count = j.at("word_count").get<std::size_t>();
    q.in_range = j.at("in_range").get<bool>();
    q.boilerplate_prefix = j.at("boilerplate_prefix").get<bool>();
    q.boilerplate_suffix = j.at("boilerplate_suffix").get<bool>();
    q.markers = j.at("markers").get<std::vector<std::string>>();
    return q;
}

} // namespace

std::optional<RecordStage> EvalRecord::failed_stage() const {
    for (std::size_t i = 0; i < stages.size(); ++i) {
        if (stages[i].status == StageStatus::Failed) return static_cast<RecordStage>(i);
    }
    return std::nullopt;
}

json EvalRecord::to_json() const {
    json st = json::object();
    for (std::size_t i = 0; i < stages.size(); ++i) {
        json s{{"status", status_name(stages[i].status)}, {"ms", stages[i].elapsed_ms}};
        if (stages[i].status == StageStatus::Failed) {
            s["error"] = stages[i].error_kind;
            s["reason"] = stages[i].reason;
        }
        st[kRecordStageNames[i]] = std::move(s);
    }
    return json{{"image", image_id},
                {"lmm", lmm},
                {"generator", generator},
                {"seed", seed},
                {"caption", opt(caption)},
                {"caption_sha256", opt(caption_hash)},
                {"caption_quality", caption_quality ? quality_json(*caption_quality) : json(nullptr)},
                {"generated_image", opt(generated_image)},
                {"input_embedding", opt(input_embedding)},
                {"generated_embedding", opt(generated_embedding)},
                {"sim", opt(sim)},
                {"stages", std::move(st)}};
}

EvalRecord EvalRecord::from_json(const json& j) {
    EvalRecord r;
    r.image_id = j.at("image").get<std::string>();
    r.lmm = j.at("lmm").get<std::string>();
    r.generator = j.at("generator").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.caption = get_opt<std::string>(j, "caption");
    r.caption_hash = get_opt<std::string>(j, "caption_sha256");
    if (j.contains("caption_quality") && !j["caption_quality"].is_null()) {
        r.caption_quality = quality_from_json(j["caption_quality"]);
    }
    r.generated_image = get_opt<std::string>(j, "generated_image");
    r.input_embedding = get_opt<std::string>(j, "input_embedding");
    r.generated_embedding = get_opt<std::string>(j, "generated_embedding");
    r.sim = get_opt<double>(j, "sim");
    const auto& st = j.at("stages");
    for (std::size_t i = 0; i < r.stages.size(); ++i) {
        const auto& s = st.at(kRecordStageNames[i]);
        r.stages[i].status = parse_status(s.at("status").get<std::string>());
        r.stages[i].error_kind = s.value("error", "");
        r.stages[i].reason = s.value("reason", "");
        r.stages[i].elapsed_ms = s.value("ms", 0.0);
    }
    return r;
}

const EntryScore* ScoreReport::entry(std::string_view lmm, std::string_view generator) const {
    for (const auto& e : entries) {
        if (e.lmm == lmm && e.generator == generator) return &e;
    }
    return nullptr;
}

json ScoreReport::to_json() const {
    json es = json::array();
    for (const auto& e : entries) {
        json pp = json::array();
        for (const auto& [p, st] : e.per_pattern) {
            pp.push_back(json{{"pattern", std::string(corpus::name(p))}, {"mean", st.mean}, {"count", st.count}});
        }
        es.push_back(json{
            {"lmm", e.lmm},
            {"generator", e.generator},
            {"items", e.items},
            {"scored", e.scored},
            {"failed", e.failed},
            {"coverage", e.coverage},
            {"sim", opt(e.sim)},
            {"per_pattern", std::move(pp)},
            {"fid", opt(e.fid)},
            {"fid_error", e.fid_error.empty() ? json(nullptr) : json(e.fid_error)},
            {"fid_samples", e.fid_samples},
            {"fid_ridge_applied", e.ridge_applied},
            {"fid_ridge_epsilon", e.ridge_epsilon},
            {"captions",
             {{"count", e.captions.captions},
              {"mean_words", e.captions.mean_words},
              {"in_range", e.captions.in_range},
              {"boilerplate_prefix", e.captions.boilerplate_prefix},
              {"boilerplate_suffix", e.captions.boilerplate_suffix}}},
            {"failures_by_stage", e.failures_by_stage},
            {"failures_by_kind", e.failures_by_kind}});
    }
    return json{{"metadata",
                 {{"aggregation", aggregation},
                  {"covariance_divisor", covariance_divisor},
                  {"fid_normalize", fid_normalize},
                  {"headline_generator", headline_generator},
                  {"lmms", lmms},
                  {"generators", generators},
                  {"embedder", embedder},
                  {"embedding_dim", embedding_dim},
                  {"prompt", prompt},
                  {"prompt_sha256", prompt_sha256},
                  {"decoding", {{"temperature", temperature}, {"max_tokens", max_tokens}}},
                  {"base_seed", base_seed},
                  {"taxonomy_version", taxonomy_version}}},
                {"images", images},
                {"items", items},
                {"failed", failed},
                {"coverage", coverage},
                {"entries", std::move(es)}};
}

ScoreReport ScoreReport::from_json(const json& j) {
    ScoreReport r;
    try {
        const auto& m = j.at("metadata");
        r.aggregation = m.at("aggregation").get<std::string>();
        r.covariance_divisor = m.at("covariance_divisor").get<std::string>();
        r.fid_normalize = m.at("fid_normalize").get<bool>();
        r.headline_generator = m.at("headline_generator").get<std::string>();
        r.lmms = m.at("lmms").get<std::vector<std::string>>();
        r.generators = m.at("generators").get<std::vector<std::string>>();
        r.embedder = m.at("embedder").get<std::string>();
        r.embedding_dim = m.at("embedding_dim").get<std::size_t>();
        r.prompt = m.at("prompt").get<std::string>();
        r.prompt_sha256 = m.at("prompt_sha256").get<std::string>();
        r.temperature = m.at("decoding").at("temperature").get<double>();
        r.max_tokens = m.at("decoding").at("max_tokens").get<int>();
        r.base_seed = m.at("base_seed").get<std::uint64_t>();
        r.taxonomy_version = m.at("taxonomy_version").get<std::string>();
        r.images = j.at("images").get<std::size_t>();
        r.items = j.at("items").get<std::size_t>();
        r.failed = j.at("failed").get<std::size_t>();
        r.coverage = j.at("coverage").get<double>();
        for (const auto& ej : j.at("entries")) {
            EntryScore e;
            e.lmm = ej.at("lmm").get<std::string>();
            e.generator = ej.at("generator").get<std::string>();
            e.items = ej.at("items").get<std::size_t>();
            e.scored = ej.at("scored").get<std::size_t>();
            e.failed = ej.at("failed").get<std::size_t>();
            e.coverage = ej.at("coverage").get<double>();
            e.sim = get_opt<double>(ej, "sim");
            for (const auto& pj : ej.at("per_pattern")) {
                e.per_pattern[corpus::parse_pattern(pj.at("pattern").get<std::string>())] =
                    metrics::PatternStat{pj.at("mean").get<double>(), pj.at("count").get<std::size_t>()};
            }
            e.fid = get_opt<double>(ej, "fid");
            e.fid_error = get_opt<std::string>(ej, "fid_error").value_or("");
            e.fid_samples = ej.at("fid_samples").get<std::size_t>();
            e.ridge_applied = ej.at("fid_ridge_applied").get<bool>();
            e.ridge_epsilon = ej.at("fid_ridge_epsilon").get<double>();
            const auto& c = ej.at("captions");
            e.captions.captions = c.at("count").get<std::size_t>();
            e.captions.mean_words = c.at("mean_words").get<double>();
            e.captions.in_range = c.at("in_range").get<std::size_t>();
            e.captions.boilerplate_prefix = c.at("boilerplate_prefix").get<std::size_t>();
            e.captions.boilerplate_suffix = c.at("boilerplate_suffix").get<std::size_t>();
            e.failures_by_stage = ej.at("failures_by_stage").get<std::map<std::string, std::size_t>>();
            e.failures_by_kind = ej.at("failures_by_kind").get<std::map<std::string, std::size_t>>();
            r.entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw Error("ReportFormat", std::string("bad score report: ") + e.what());
    }
    return r;
}

std::string ScoreReport::serialize() const { return to_json().dump(2) + "\n"; }

ScoreReport load_report(const fs::path& report_json) {
    try {
        return ScoreReport::from_json(json::parse(fsutil::read_text(report_json)));
    } catch (const json::parse_error& e) {
        throw Error("ReportFormat", report_json.string() + ": " + e.what());
    }
}

namespace layout {
fs::path caption(const fs::path& run_dir, const std::string& sha) { return run_dir / "captions" / (sha + ".txt"); }
fs::path image(const fs::path& run_dir, const std::string& sha) { return run_dir / "images" / (sha + ".png"); }
fs::path embedding(const fs::path& run_dir, const std::string& sha) { return run_dir / "embeddings" / (sha + ".f64"); }
} // namespace layout

std::string write_embedding(const fs::path& run_dir, std::span<const double> v) {
    Bytes bytes(v.size() * 8);
    for (std::size_t i = 0; i < v.size(); ++i) {
        auto bits = std::bit_cast<std::uint64_t>(v[i]);
        for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
    const std::string sha = sha256_hex(bytes);
    const fs::path path = layout::embedding(run_dir, sha);
    if (!fs::exists(path)) {
        fs::create_directories(path.parent_path());
        fsutil::atomic_write(path, bytes);
    }
    return sha;
}

metrics::Embedding read_embedding(const fs::path& run_dir, const std::string& sha) {
    const fs::path path = layout::embedding(run_dir, sha);
    if (!fs::is_regular_file(path)) throw IntegrityError("missing embedding file " + path.string());
    const Bytes bytes = fsutil::read_bytes(path);
    if (sha256_hex(bytes) != sha) throw IntegrityError("hash mismatch in embedding file " + path.string());
    if (bytes.size() % 8 != 0) throw IntegrityError("truncated embedding file " + path.string());
    metrics::Embedding v(bytes.size() / 8);
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[i * 8 + static_cast<std::size_t>(b)];
        v[i] = std::bit_cast<double>(bits);
    }
    return v;
}

namespace {

void normalize(metrics::Embedding& v) {
    double s = 0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    if (s > 0) {
        for (double& x : v) x /= s;
    }
}

bool record_less(const EvalRecord& a, const EvalRecord& b) {
    return std::tie(a.image_id, a.lmm, a.generator) < std::tie(b.image_id, b.lmm, b.generator);
}

} // namespace

ScoreReport score_records(const fs::path& run_dir, const RunConfig& config, const corpus::Manifest& manifest,
                          std::vector<EvalRecord>& records) {
    std::sort(records.begin(), records.end(), record_less);

    std::map<std::string, metrics::Embedding> loaded;
    auto load = [&](const std::string& sha) -> const metrics::Embedding& {
        auto it = loaded.find(sha);
        if (it == loaded.end()) it = loaded.emplace(sha, read_embedding(run_dir, sha)).first;
        return it->second;
    };

    std::size_t dim = 0;
    for (auto& r : records) {
        r.sim.reset();
        auto& score = r.stage(RecordStage::Score);
        score = StageState{};
        const bool ready = r.stage(RecordStage::Describe).status == StageStatus::Ok &&
                           r.stage(RecordStage::Generate).status == StageStatus::Ok &&
                           r.stage(RecordStage::Embed).status == StageStatus::Ok;
        if (!ready) continue;
        if (!r.input_embedding || !r.generated_embedding) {
            throw IntegrityError("record " + r.image_id + "/" + r.lmm + "/" + r.generator + " lacks embedding hashes");
        }
        const auto& a = load(*r.input_embedding);
        const auto& b = load(*r.generated_embedding);
        if (dim == 0) dim = a.size();
        try {
            if (a.size() != dim || b.size() != dim) {
                throw DimensionMismatch("embedding dimension differs from " + std::to_string(dim));
            }
            r.sim = metrics::sim_score(a, b);
            score.status = StageStatus::Ok;
        } catch (const Error& e) {
            score.status = StageStatus::Failed;
            score.error_kind = e.kind();
            score.reason = e.what();
        }
    }

    ScoreReport rep;
    rep.fid_normalize = config.fid_normalize;
    rep.headline_generator = config.headline_generator();
    for (const auto& l : config.lmms) rep.lmms.push_back(l.name);
    for (const auto& g : config.generators) rep.generators.push_back(g.service.name);
    rep.embedder = config.embedder.model;
    rep.embedding_dim = dim;
    rep.prompt = std::string(prompts::to_string(config.prompt));
    rep.prompt_sha256 = sha256_hex(prompts::render(config.prompt));
    rep.temperature = config.temperature;
    rep.max_tokens = config.max_tokens;
    rep.base_seed = config.base_seed;
    rep.taxonomy_version = manifest.taxonomy_version;
    rep.images = manifest.records.size();

    for (const auto& lmm : rep.lmms) {
        for (const auto& gen : rep.generators) {
            EntryScore e;
            e.lmm = lmm;
            e.generator = gen;
            std::vector<metrics::ScoredItem> items;
            std::vector<metrics::Embedding> xs, ys;
            double words = 0;
            for (const auto& r : records) {
                if (r.lmm != lmm || r.generator != gen) continue;
                ++e.items;
                items.push_back({r.image_id, r.sim});
                if (auto f = r.failed_stage()) {
                    ++e.failed;
                    ++e.failures_by_stage[kRecordStageNames[static_cast<std::size_t>(*f)]];
                    ++e.failures_by_kind[r.stage(*f).error_kind];
                }
                if (r.sim) {
                    ++e.scored;
                    xs.push_back(load(*r.input_embedding));
                    ys.push_back(load(*r.generated_embedding));
                }
                if (r.caption_quality) {
                    ++e.captions.captions;
                    words += static_cast<double>(r.caption_quality->word_count);
                    e.captions.in_range += r.caption_quality->in_range ? 1 : 0;
                    e.captions.boilerplate_prefix += r.caption_quality->boilerplate_prefix ? 1 : 0;
                    e.captions.boilerplate_suffix += r.caption_quality->boilerplate_suffix ? 1 : 0;
                }
            }
            if (e.captions.captions > 0) e.captions.mean_words = words / static_cast<double>(e.captions.captions);
            e.coverage = e.items == 0 ? 1.0 : 1.0 - static_cast<double>(e.failed) / static_cast<double>(e.items);

            const auto table = metrics::aggregate(items, manifest);
            if (table.scored > 0) e.sim = table.overall_mean;
            e.per_pattern = table.per_pattern;

            e.fid_samples = xs.size();
            if (config.fid_normalize) {
                for (auto& v : xs) normalize(v);
                for (auto& v : ys) normalize(v);
            }
            try {
                const auto fx = metrics::fit_gaussian(xs);
                const auto fy = metrics::fit_gaussian(ys);
                const auto fr = metrics::fid_score(fx, fy);
                e.fid = fr.value;
                e.ridge_applied = fr.ridge_applied;
                e.ridge_epsilon = fr.ridge_epsilon;
            } catch (const TooFewSamples&) {
                e.fid_error = "TooFewSamples";
            }
            rep.items += e.items;
            rep.failed += e.failed;
            rep.entries.push_back(std::move(e));
        }
    }
    rep.coverage = rep.items == 0 ? 1.0 : 1.0 - static_cast<double>(rep.failed) / static_cast<double>(rep.items);
    return rep;
}

std::vector<EvalRecord> load_records(const fs::path& run_dir) {
    const fs::path path = run_dir / layout::kRecords;
    if (!fs::exists(path)) throw IntegrityError("missing " + path.string());
    std::vector<EvalRecord> out;
    std::istringstream in(fsutil::read_text(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(EvalRecord::from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw IntegrityError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void save_records(const fs::path& run_dir, const std::vector<EvalRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.to_json().dump();
        out += '\n';
    }
    fsutil::atomic_write(run_dir / layout::kRecords, out);
}

ScoreReport score_only(const fs::path& run_dir) {
    const RunConfig config = load_run_config(run_dir / layout::kConfig);
    const corpus::Manifest manifest = corpus::load_manifest(run_dir / layout::kManifest);
    auto records = load_records(run_dir);
    ScoreReport rep = score_records(run_dir, config, manifest, records);
    fsutil::atomic_write(run_dir / layout::kReport, rep.serialize());
    return rep;
}

} // namespace mmgen::pipeline
