#include "mmgen/pipeline/run.hpp"

#include "mmgen/clients/stub_provider.hpp"
#include "mmgen/common/error.hpp"
#include "mmgen/common/fsutil.hpp"
#include "mmgen/prompts/caption.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

namespace mmgen::pipeline {

namespace fs = std::filesystem;

std::shared_ptr<clients::StubProvider> process_stub() {
    static auto stub = std::make_shared<clients::StubProvider>();
    return stub;
}

TransportFactory default_transport_factory() {
    return [](const clients::ServiceConfig& c) -> std::shared_ptr<clients::Transport> {
        if (c.endpoint.starts_with("stub:")) return process_stub();
        return std::make_shared<clients::HttpTransport>(c.endpoint, c.timeout_s);
    };
}

namespace {

bool is_fatal(const std::string& kind) {
    static const std::set<std::string> fatal{"AuthError", "ConfigError", "DimensionMismatch", "Interrupted",
                                             "IntegrityError"};
    return fatal.contains(kind);
}

/// Runs fn(0..n-1) on up to `workers` threads. Item-level failures are the
/// callee's business; any exception that escapes stops new work and is
/// rethrown once in-flight tasks finish.
template <class F> void run_pool(std::size_t n, int workers, F&& fn) {
    if (n == 0) return;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr fatal;
    std::mutex mu;
    auto body = [&] {
        while (!stop.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!fatal) fatal = std::current_exception();
                stop = true;
            }
        }
    };
    const auto k = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    if (k == 1) {
        body();
    } else {
        std::vector<std::jthread> threads;
        threads.reserve(k);
        for (std::size_t t = 0; t < k; ++t) threads.emplace_back(body);
    }
    if (fatal) std::rethrow_exception(fatal);
}

fs::path uri_path(const std::string& uri) {
    if (uri.starts_with("file://")) return uri.substr(7);
    if (uri.find("://") != std::string::npos) throw Error("UnsupportedUri", "only local image URIs are supported: " + uri);
    return uri;
}

struct Services {
    std::map<std::string, std::unique_ptr<clients::LmmClient>> lmms;
    std::map<std::string, std::unique_ptr<clients::T2iClient>> generators;
    std::unique_ptr<clients::EmbedClient> embedder;
};

Services connect(const RunConfig& config, const TransportFactory& factory, const clients::ClientOptions& opts) {
    auto cache = std::make_shared<clients::ContentStore>(config.effective_cache_dir());
    Services s;
    std::vector<std::shared_ptr<clients::Transport>> transports;
    auto make = [&](const clients::ServiceConfig& c) {
        auto t = factory(c);
        if (!t) throw ConfigError("no transport for endpoint " + c.endpoint);
        transports.push_back(t);
        return t;
    };
    for (const auto& l : config.lmms) s.lmms[l.name] = std::make_unique<clients::LmmClient>(l, make(l), cache, opts);
    for (const auto& g : config.generators) {
        s.generators[g.service.name] = std::make_unique<clients::T2iClient>(g.service, make(g.service), cache, opts);
    }
    s.embedder = std::make_unique<clients::EmbedClient>(config.embedder, make(config.embedder), cache, opts);

    std::set<const clients::Transport*> probed;
    for (const auto& t : transports) {
        if (probed.insert(t.get()).second) t->probe();
    }
    return s;
}

class Executor {
  public:
    Executor(fs::path run_dir, const RunConfig& config, const corpus::Manifest& manifest,
             std::map<StageKey, JournalEvent> done, Services services, const RunHooks& hooks)
        : dir_(std::move(run_dir)), cfg_(config), manifest_(manifest), done_(std::move(done)),
          services_(std::move(services)), journal_(dir_ / layout::kJournal, hooks.after_append) {
        replayed_ = done_.size();
        prompt_ = prompts::render(cfg_.prompt);
        for (const auto& [key, e] : done_) {
            if (e.ok && (key.stage == Stage::EmbedInput || key.stage == Stage::EmbedGenerated)) {
                services_.embedder->lock_dimension(fs::file_size(layout::embedding(dir_, e.output)) / 8);
                break;
            }
        }
    }

    RunSummary execute() {
        describe_wave();
        embed_input_wave();
        generate_wave();
        embed_generated_wave();
        return finalize();
    }

  private:
    const JournalEvent* find(const StageKey& k) const {
        auto it = done_.find(k);
        return it == done_.end() ? nullptr : &it->second;
    }
    bool ok(const StageKey& k) const {
        const auto* e = find(k);
        return e && e->ok;
    }

    /// Runs one stage task and journals its outcome.
    template <class F> void attempt(const StageKey& key, F&& work) {
        JournalEvent e;
        e.key = key;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            work(e);
            e.ok = true;
        } catch (const Error& err) {
            if (is_fatal(err.kind())) throw;
            e.ok = false;
            e.output.clear();
            e.error_kind = err.kind();
            e.reason = err.what();
        }
        e.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        journal_.append(e);
        std::lock_guard lock(mu_);
        fresh_.push_back(std::move(e));
    }

    /// Workers only read `done_`; their results land in `fresh_` and are
    /// merged once the wave drains.
    template <class F> void wave(const std::vector<StageKey>& keys, F&& work) {
        run_pool(keys.size(), cfg_.workers, [&](std::size_t i) { attempt(keys[i], [&](JournalEvent& e) { work(keys[i], e); }); });
        executed_ += fresh_.size();
        for (auto& e : fresh_) done_[e.key] = std::move(e);
        fresh_.clear();
    }

    Bytes input_image(const std::string& id) const {
        const auto* r = manifest_.find(id);
        Bytes bytes = fsutil::read_bytes(uri_path(r->uri));
        if (sha256_hex(bytes) != r->hash) throw Error("HashMismatch", "image bytes changed since ingest: " + r->uri);
        return bytes;
    }

    Bytes stored(const fs::path& path, const std::string& sha) const {
        Bytes bytes = fsutil::read_bytes(path);
        if (sha256_hex(bytes) != sha) throw IntegrityError("hash mismatch in " + path.string());
        return bytes;
    }

    void describe_wave() {
        std::vector<StageKey> keys;
        for (const auto& r : manifest_.records) {
            for (const auto& l : cfg_.lmms) {
                StageKey k{Stage::Describe, r.id, l.name, ""};
                if (!find(k)) keys.push_back(k);
            }
        }
        wave(keys, [&](const StageKey& k, JournalEvent& e) {
            clients::LmmRequest req;
            req.image = input_image(k.image);
            req.prompt = prompt_;
            req.temperature = cfg_.temperature;
            req.max_tokens = cfg_.max_tokens;
            const auto resp = services_.lmms.at(k.lmm)->describe(req);
            if (resp.text.find_first_not_of(" \t\r\n") == std::string::npos) {
                throw Error("EmptyCaption", "model returned an empty description");
            }
            e.output = sha256_hex(resp.text);
            const auto path = layout::caption(dir_, e.output);
            if (!fs::exists(path)) fsutil::atomic_write(path, resp.text);
        });
    }

    void embed_input_wave() {
        std::vector<StageKey> keys;
        for (const auto& r : manifest_.records) {
            bool needed = false;
            for (const auto& l : cfg_.lmms) needed = needed || ok({Stage::Describe, r.id, l.name, ""});
            StageKey k{Stage::EmbedInput, r.id, "", ""};
            if (needed && !find(k)) keys.push_back(k);
        }
        wave(keys, [&](const StageKey& k, JournalEvent& e) {
            const auto resp = services_.embedder->embed(input_image(k.image));
            e.output = write_embedding(dir_, resp.vector);
        });
    }

    void generate_wave() {
        std::vector<StageKey> keys;
        for (const auto& r : manifest_.records) {
            for (const auto& l : cfg_.lmms) {
                if (!ok({Stage::Describe, r.id, l.name, ""})) continue;
                for (const auto& g : cfg_.generators) {
                    StageKey k{Stage::Generate, r.id, l.name, g.service.name};
                    if (!find(k)) keys.push_back(k);
                }
            }
        }
        wave(keys, [&](const StageKey& k, JournalEvent& e) {
            const auto& caption_sha = find({Stage::Describe, k.image, k.lmm, ""})->output;
            const Bytes caption = stored(layout::caption(dir_, caption_sha), caption_sha);
            const auto& gen = generator_config(k.generator);
            clients::T2iRequest req;
            req.prompt = std::string(as_chars(caption));
            req.seed = derive_seed(cfg_.base_seed, k.image, k.generator);
            req.steps = gen.steps;
            req.width = gen.width;
            req.height = gen.height;
            e.seed = req.seed;
            const auto resp = services_.generators.at(k.generator)->generate(req);
            e.output = resp.image_hash;
            const auto path = layout::image(dir_, e.output);
            if (!fs::exists(path)) fsutil::atomic_write(path, resp.image);
        });
    }

    void embed_generated_wave() {
        std::vector<StageKey> keys;
        for (const auto& r : manifest_.records) {
            if (!ok({Stage::EmbedInput, r.id, "", ""})) continue;
            for (const auto& l : cfg_.lmms) {
                for (const auto& g : cfg_.generators) {
                    if (!ok({Stage::Generate, r.id, l.name, g.service.name})) continue;
                    StageKey k{Stage::EmbedGenerated, r.id, l.name, g.service.name};
                    if (!find(k)) keys.push_back(k);
                }
            }
        }
        wave(keys, [&](const StageKey& k, JournalEvent& e) {
            const auto& image_sha = find({Stage::Generate, k.image, k.lmm, k.generator})->output;
            const auto resp = services_.embedder->embed(stored(layout::image(dir_, image_sha), image_sha));
            e.output = write_embedding(dir_, resp.vector);
        });
    }

    const GeneratorConfig& generator_config(const std::string& name) const {
        for (const auto& g : cfg_.generators) {
            if (g.service.name == name) return g;
        }
        throw ConfigError("unknown generator " + name);
    }

    static void settle(StageState& s, const JournalEvent* e) {
        if (!e) return;
        s.status = e->ok ? StageStatus::Ok : StageStatus::Failed;
        s.error_kind = e->error_kind;
        s.reason = e->reason;
        s.elapsed_ms = e->elapsed_ms;
    }

    RunSummary finalize() {
        std::vector<EvalRecord> records;
        for (const auto& img : manifest_.records) {
            const auto* input = find({Stage::EmbedInput, img.id, "", ""});
            for (const auto& l : cfg_.lmms) {
                const auto* desc = find({Stage::Describe, img.id, l.name, ""});
                for (const auto& g : cfg_.generators) {
                    EvalRecord r;
                    r.image_id = img.id;
                    r.lmm = l.name;
                    r.generator = g.service.name;
                    r.seed = derive_seed(cfg_.base_seed, img.id, g.service.name);
                    settle(r.stage(RecordStage::Describe), desc);
                    if (!desc || !desc->ok) {
                        records.push_back(std::move(r));
                        continue;
                    }
                    const Bytes caption = stored(layout::caption(dir_, desc->output), desc->output);
                    r.caption = std::string(as_chars(caption));
                    r.caption_hash = desc->output;
                    r.caption_quality = prompts::check_caption(*r.caption);

                    const auto* gen = find({Stage::Generate, img.id, l.name, g.service.name});
                    settle(r.stage(RecordStage::Generate), gen);
                    if (!gen || !gen->ok) {
                        records.push_back(std::move(r));
                        continue;
                    }
                    r.generated_image = gen->output;

                    const auto* out = find({Stage::EmbedGenerated, img.id, l.name, g.service.name});
                    auto& embed = r.stage(RecordStage::Embed);
                    if (input && !input->ok) {
                        settle(embed, input);
                    } else if (input && out) {
                        settle(embed, out);
                        embed.elapsed_ms += input->elapsed_ms;
                        if (out->ok) {
                            r.input_embedding = input->output;
                            r.generated_embedding = out->output;
                        }
                    }
                    records.push_back(std::move(r));
                }
            }
        }

        ScoreReport rep = score_records(dir_, cfg_, manifest_, records);
        save_records(dir_, records);
        fsutil::atomic_write(dir_ / layout::kReport, rep.serialize());

        RunSummary s;
        s.run_dir = dir_;
        s.items = rep.items;
        s.failed = rep.failed;
        s.coverage = rep.coverage;
        for (const auto& r : records) s.scored += r.sim ? 1 : 0;
        s.executed = executed_;
        s.replayed = replayed_;
        return s;
    }

    fs::path dir_;
    const RunConfig& cfg_;
    const corpus::Manifest& manifest_;
    std::map<StageKey, JournalEvent> done_;
    Services services_;
    Journal journal_;
    std::string prompt_;
    std::mutex mu_;
    std::vector<JournalEvent> fresh_;
    std::size_t executed_ = 0;
    std::size_t replayed_ = 0;
};

RunSummary execute(const fs::path& run_dir, const RunConfig& config, const corpus::Manifest& manifest,
                   std::map<StageKey, JournalEvent> done, const TransportFactory& factory, const RunHooks& hooks) {
    for (const char* sub : {"captions", "images", "embeddings"}) fs::create_directories(run_dir / sub);
    Services services = connect(config, factory, hooks.client_options);
    Executor ex(run_dir, config, manifest, std::move(done), std::move(services), hooks);
    return ex.execute();
}

} // namespace

RunSummary run(const RunConfig& config, const TransportFactory& factory, const RunHooks& hooks) {
    config.validate();
    const fs::path dir = config.output_dir;
    if (fs::exists(dir / layout::kJournal)) {
        throw ConfigError(dir.string() + " already holds a run; use resume");
    }
    corpus::Manifest manifest = corpus::load_manifest(config.manifest);
    if (manifest.records.empty()) throw EmptyCorpus("manifest " + config.manifest.string() + " has no images");
    std::set<std::string> ids;
    for (auto& r : manifest.records) {
        if (!ids.insert(r.id).second) throw ConfigError("duplicate image id in manifest: " + r.id);
        if (r.uri.find("://") == std::string::npos) {
            fs::path p(r.uri);
            if (p.is_relative()) r.uri = (fs::absolute(config.manifest).parent_path() / p).lexically_normal().string();
        }
    }

    fs::create_directories(dir);
    RunConfig stored = config;
    stored.output_dir = fs::absolute(dir);
    stored.manifest = fs::absolute(config.manifest);
    fsutil::atomic_write(dir / layout::kConfig, stored.to_json().dump(2) + "\n");
    corpus::save_manifest(manifest, dir / layout::kManifest);
    return execute(dir, stored, manifest, {}, factory, hooks);
}

RunSummary resume(const fs::path& run_dir, const TransportFactory& factory, const RunHooks& hooks) {
    if (!fs::exists(run_dir / layout::kConfig) || !fs::exists(run_dir / layout::kJournal)) {
        throw ConfigError(run_dir.string() + " is not a run directory (config.json and journal.jsonl required)");
    }
    auto done = Journal::completed(Journal::replay(run_dir / layout::kJournal));
    RunConfig config = load_run_config(run_dir / layout::kConfig);
    config.output_dir = run_dir;
    config.validate();
    const corpus::Manifest manifest = corpus::load_manifest(run_dir / layout::kManifest);
    return execute(run_dir, config, manifest, std::move(done), factory, hooks);
}

} // namespace mmgen::pipeline
