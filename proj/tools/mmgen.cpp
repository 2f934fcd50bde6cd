#include "mmgen/benchcons/construct.hpp"
#include "mmgen/benchcons/review_service.hpp"
#include "mmgen/benchcons/review_store.hpp"
#include "mmgen/benchcons/votes.hpp"
#include "mmgen/clients/stub_provider.hpp"
#include "mmgen/common/error.hpp"
#include "mmgen/common/fsutil.hpp"
#include "mmgen/corpus/manifest.hpp"
#include "mmgen/corpus/sampling.hpp"
#include "mmgen/pipeline/run.hpp"
#include "mmgen/report/report.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <set>
#include <iostream>

namespace fs = std::filesystem;
using namespace mmgen;
using nlohmann::json;

namespace {

struct LmmFlags {
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    std::string cache_dir;
    int workers = 4;
    int max_tokens = 1024;

    void attach(CLI::App* app) {
        app->add_option("--endpoint", endpoint, "LMM base URL (or stub:)")->required();
        app->add_option("--model", model, "LMM model name")->required();
        app->add_option("--api-key-env", api_key_env, "environment variable holding the API key");
        app->add_option("--cache-dir", cache_dir, "response cache directory");
        app->add_option("--workers", workers, "parallel requests")->check(CLI::PositiveNumber);
        app->add_option("--max-tokens", max_tokens)->check(CLI::PositiveNumber);
    }

    std::unique_ptr<clients::LmmClient> client() const {
        clients::ServiceConfig c;
        c.name = model;
        c.endpoint = endpoint;
        c.model = model;
        c.api_key_env = api_key_env;
        c.max_concurrency = workers;
        std::shared_ptr<clients::ContentStore> cache;
        if (!cache_dir.empty()) cache = std::make_shared<clients::ContentStore>(cache_dir);
        auto transport = pipeline::default_transport_factory()(c);
        transport->probe();
        return std::make_unique<clients::LmmClient>(c, transport, cache, clients::ClientOptions{});
    }

    benchcons::ConstructOptions options() const {
        benchcons::ConstructOptions o;
        o.workers = workers;
        o.max_tokens = max_tokens;
        return o;
    }
};

void print_summary(const pipeline::RunSummary& s) {
    std::cout << "run dir:  " << s.run_dir.string() << "\n"
              << "items:    " << s.items << " (scored " << s.scored << ", failed " << s.failed << ")\n"
              << "coverage: " << report::fixed3(s.coverage * 100.0) << "%\n"
              << "stages:   " << s.executed << " executed, " << s.replayed << " replayed from journal\n";
}

void print_validation(const corpus::ValidationReport& r) {
    std::cout << "images: " << r.image_count << "  pattern slots: " << r.pattern_slot_count << "\n";
    for (auto p : corpus::all_patterns()) {
        auto it = r.per_pattern.find(p);
        std::cout << "  " << corpus::name(p) << ": " << (it == r.per_pattern.end() ? 0 : it->second) << "\n";
    }
    for (const auto& v : r.violations) std::cout << "violation " << v.kind << " " << v.id << ": " << v.detail << "\n";
    for (const auto& w : r.warnings) std::cout << "warning " << w << "\n";
    std::cout << (r.valid ? "valid" : "INVALID") << "\n";
}

std::vector<benchcons::ExtractionResult> load_results(const std::string& path) {
    return benchcons::parse_results(fsutil::read_text(path));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mmgen: image -> description -> regenerated image evaluation of multimodal models"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "hash images into a manifest");
    std::vector<std::string> ingest_paths;
    std::string ingest_kind = "domain", ingest_out;
    ingest->add_option("paths", ingest_paths, "image files or directories")->required();
    ingest->add_option("--kind", ingest_kind)->check(CLI::IsMember({"test", "domain"}));
    ingest->add_option("-o,--output", ingest_out, "manifest path")->required();

    // validate
    auto* validate = app.add_subcommand("validate", "check a manifest");
    std::string validate_path;
    bool no_uri_check = false;
    validate->add_option("manifest", validate_path)->required();
    validate->add_flag("--no-uri-check", no_uri_check, "skip reading image files");

    // run / resume / score
    auto* run = app.add_subcommand("run", "evaluate models over a manifest");
    std::string config_path;
    int run_workers = 0;
    run->add_option("--config", config_path, "run configuration JSON")->required();
    run->add_option("--workers", run_workers, "override worker count")->check(CLI::PositiveNumber);

    auto* resume = app.add_subcommand("resume", "continue an interrupted run");
    std::string resume_dir;
    resume->add_option("run_dir", resume_dir)->required();

    auto* score = app.add_subcommand("score", "recompute report.json from persisted embeddings");
    std::string score_dir;
    score->add_option("run_dir", score_dir)->required();

    // report
    auto* rep = app.add_subcommand("report", "render leaderboards and consistency data");
    std::vector<std::string> rep_dirs;
    std::string rep_fmt = "markdown";
    rep->add_option("run_dirs", rep_dirs)->required();
    rep->add_option("--fmt", rep_fmt)->check(CLI::IsMember({"json", "csv", "markdown", "md"}));

    // cache gc
    auto* cache = app.add_subcommand("cache", "response cache maintenance");
    cache->require_subcommand(1);
    auto* gc = cache->add_subcommand("gc", "remove old cache entries");
    std::string gc_dir;
    double gc_days = 30;
    bool gc_dry = false;
    gc->add_option("cache_dir", gc_dir)->required();
    gc->add_option("--max-age-days", gc_days)->check(CLI::NonNegativeNumber);
    gc->add_flag("--dry-run", gc_dry);

    // construct
    auto* construct = app.add_subcommand("construct", "benchmark construction");
    construct->require_subcommand(1);
    LmmFlags extract_lmm, reannot_lmm, summary_lmm;
    std::string cons_manifest, cons_out, cons_results, review_dir, merge_out;
    std::optional<std::size_t> top_k;
    std::uint64_t sample_seed = 0;

    auto* extract = construct->add_subcommand("extract", "open-vocabulary pattern extraction");
    extract->add_option("--manifest", cons_manifest)->required();
    extract->add_option("-o,--output", cons_out, "results JSONL")->required();
    extract_lmm.attach(extract);

    auto* summarize = construct->add_subcommand("summarize", "frequency table and summary proposal");
    summarize->add_option("--results", cons_results, "extraction results JSONL")->required();
    summarize->add_option("--top-k", top_k, "entries passed to the model");
    summarize->add_option("-o,--output", cons_out, "proposal JSON");
    summary_lmm.attach(summarize);

    auto* reannot = construct->add_subcommand("reannotate", "re-annotate with the fixed 13 patterns");
    reannot->add_option("--manifest", cons_manifest)->required();
    reannot->add_option("-o,--output", cons_out, "results JSONL")->required();
    reannot_lmm.attach(reannot);

    auto* sample = construct->add_subcommand("sample", "sample 100/N per pattern and create review tasks");
    sample->add_option("--manifest", cons_manifest)->required();
    sample->add_option("--results", cons_results, "re-annotation results JSONL")->required();
    sample->add_option("--review-dir", review_dir)->required();
    sample->add_option("--seed", sample_seed);

    auto* merge = construct->add_subcommand("merge", "merge model annotations with review verdicts");
    merge->add_option("--manifest", cons_manifest)->required();
    merge->add_option("--results", cons_results, "re-annotation results JSONL")->required();
    merge->add_option("--review-dir", review_dir)->required();
    merge->add_option("-o,--output", merge_out, "Test manifest path")->required();

    auto* serve = construct->add_subcommand("serve-review", "serve the review HTTP API");
    std::string serve_host = "127.0.0.1";
    int serve_port = 8787;
    serve->add_option("--review-dir", review_dir)->required();
    serve->add_option("--host", serve_host);
    serve->add_option("--port", serve_port);

    // stub-serve
    auto* stub = app.add_subcommand("stub-serve", "serve deterministic stub model endpoints");
    std::string stub_host = "127.0.0.1";
    int stub_port = 8788;
    std::size_t stub_dim = 16;
    stub->add_option("--host", stub_host);
    stub->add_option("--port", stub_port);
    stub->add_option("--embed-dim", stub_dim)->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            std::vector<fs::path> paths(ingest_paths.begin(), ingest_paths.end());
            auto result = corpus::ingest_images(paths, corpus::parse_manifest_kind(ingest_kind));
            for (const auto& w : result.warnings) std::cerr << "warning " << w << "\n";
            corpus::save_manifest(result.manifest, ingest_out);
            std::cout << result.manifest.records.size() << " images -> " << ingest_out << "\n";
        } else if (*validate) {
            const auto r = corpus::validate_manifest(corpus::load_manifest(validate_path),
                                                     corpus::ValidateOptions{.check_uris = !no_uri_check});
            print_validation(r);
            return r.valid ? 0 : 1;
        } else if (*run) {
            auto cfg = pipeline::load_run_config(config_path);
            if (run_workers > 0) cfg.workers = run_workers;
            print_summary(pipeline::run(cfg));
        } else if (*resume) {
            print_summary(pipeline::resume(resume_dir));
        } else if (*score) {
            const auto r = pipeline::score_only(score_dir);
            std::cout << report::render({r}, report::Format::Markdown);
        } else if (*rep) {
            std::vector<pipeline::ScoreReport> reports;
            for (const auto& d : rep_dirs) reports.push_back(pipeline::load_report(fs::path(d) / pipeline::layout::kReport));
            const auto fmt = report::parse_format(rep_fmt);
            const std::string text = report::render(reports, fmt);
            std::cout << text;
            const fs::path out_dir = fs::path(rep_dirs.front()) / "report";
            fs::create_directories(out_dir);
            const char* ext = fmt == report::Format::Json ? "json" : fmt == report::Format::Csv ? "csv" : "md";
            fsutil::atomic_write(out_dir / (std::string("leaderboard.") + ext), text);
            std::set<std::string> gens;
            for (const auto& r : reports) gens.insert(r.generators.begin(), r.generators.end());
            if (gens.size() >= 2) {
                for (const auto& p : report::write_consistency_series(rep_dirs.front(), reports)) {
                    std::cerr << "wrote " << p.string() << "\n";
                }
            }
        } else if (*gc) {
            clients::ContentStore store(gc_dir);
            const auto s = store.gc(std::chrono::seconds(static_cast<long long>(gc_days * 86400)), gc_dry);
            std::cout << (gc_dry ? "would remove " : "removed ") << s.removed << " entries (" << s.bytes_freed
                      << " bytes), kept " << s.kept << "\n";
        } else if (*extract || *reannot) {
            const auto& flags = *extract ? extract_lmm : reannot_lmm;
            const auto manifest = corpus::load_manifest(cons_manifest);
            auto lmm = flags.client();
            const auto results = *extract ? benchcons::extract_patterns(manifest, *lmm, flags.options())
                                          : benchcons::reannotate(manifest, *lmm, flags.options());
            fsutil::atomic_write(cons_out, benchcons::serialize_results(results));
            std::size_t ok = 0;
            for (const auto& r : results) ok += r.ok() ? 1 : 0;
            std::cout << ok << "/" << results.size() << " images annotated -> " << cons_out << "\n";
            if (*extract) {
                const auto t = benchcons::tally(results);
                std::cout << t.distinct_names() << " distinct pattern names, " << t.occurrences() << " occurrences\n";
            }
        } else if (*summarize) {
            const auto freq = benchcons::tally(load_results(cons_results));
            auto lmm = summary_lmm.client();
            const auto proposal = benchcons::summarize(freq, *lmm, top_k, summary_lmm.options());
            const json out{{"frequency", freq.to_json()},
                           {"proposal", {{"image_pattern", proposal.image_pattern},
                                         {"pattern_detail", proposal.pattern_detail}}},
                           {"raw", proposal.raw}};
            if (!cons_out.empty()) fsutil::atomic_write(cons_out, out.dump(2) + "\n");
            std::cout << out.dump(2) << "\n";
        } else if (*sample) {
            const auto manifest = corpus::load_manifest(cons_manifest);
            const auto results = load_results(cons_results);
            const auto annotated = benchcons::annotated_manifest(manifest, results);
            const auto picked = corpus::sample_per_pattern(annotated.records, sample_seed);
            benchcons::ReviewStore::create(review_dir, benchcons::make_review_tasks(picked, results));
            std::cout << picked.size() << " of " << annotated.records.size() << " annotated images sampled -> "
                      << review_dir << "\n";
        } else if (*merge) {
            const auto manifest = corpus::load_manifest(cons_manifest);
            const benchcons::ReviewStore store(review_dir);
            std::vector<benchcons::ReviewVerdict> verdicts;
            for (const auto& [_, v] : store.snapshot()->verdicts) verdicts.push_back(v);
            const auto merged = benchcons::merge_votes(manifest, load_results(cons_results), verdicts);
            corpus::save_manifest(merged, merge_out);
            const auto r = corpus::validate_manifest(merged);
            print_validation(r);
            return r.valid ? 0 : 1;
        } else if (*serve) {
            auto store = std::make_shared<benchcons::ReviewStore>(review_dir);
            benchcons::ReviewService service(store, serve_host, serve_port);
            std::cout << "review API on " << service.base_url() << "\n" << std::flush;
            service.wait();
        } else if (*stub) {
            // Block before the server threads start so the signal reaches sigwait.
            sigset_t set;
            sigemptyset(&set);
            sigaddset(&set, SIGINT);
            sigaddset(&set, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &set, nullptr);
            auto provider = std::make_shared<clients::StubProvider>(clients::StubProvider::Options{stub_dim});
            clients::StubServer server(provider, stub_host, stub_port);
            std::cout << "stub endpoints on " << server.base_url() << "\n" << std::flush;
            int sig = 0;
            sigwait(&set, &sig);
            server.stop();
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
