#pragma once

#include "mmgen/clients/png.hpp"
#include "mmgen/clients/stub_provider.hpp"
#include "mmgen/common/fsutil.hpp"
#include "mmgen/corpus/manifest.hpp"
#include "mmgen/pipeline/run.hpp"

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testkit {

namespace fs = std::filesystem;

/// Unique scratch directory, removed on destruction.
class TempDir {
  public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "mmgen-test-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& s) const { return path_ / s; }

  private:
    fs::path path_;
};

/// Writes `n` distinct small PNGs named img00.png, img01.png, ...
inline std::vector<fs::path> write_png_corpus(const fs::path& dir, std::size_t n, std::uint8_t salt = 0) {
    fs::create_directories(dir);
    std::vector<fs::path> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto png = mmgen::clients::solid_png(8 + static_cast<std::uint32_t>(i % 3), 8,
                                                   static_cast<std::uint8_t>(17 * i + salt),
                                                   static_cast<std::uint8_t>(101 + 7 * i), salt);
        char name[32];
        std::snprintf(name, sizeof name, "img%02zu.png", i);
        const fs::path p = dir / name;
        mmgen::fsutil::atomic_write(p, png);
        out.push_back(p);
    }
    return out;
}

/// Test manifest over a fresh PNG corpus, saved to dir/manifest.jsonl.
inline fs::path write_manifest(const fs::path& dir, std::size_t n) {
    write_png_corpus(dir / "images", n);
    auto m = mmgen::corpus::ingest_images({dir / "images"}, mmgen::corpus::ManifestKind::Domain).manifest;
    // Spread the images over patterns so per-pattern tables are non-trivial.
    const auto& all = mmgen::corpus::all_patterns();
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        m.records[i].patterns = {all[i % all.size()], all[(i * 5 + 3) % all.size()]};
    }
    m.kind = mmgen::corpus::ManifestKind::Test;
    const fs::path path = dir / "manifest.jsonl";
    mmgen::corpus::save_manifest(m, path);
    return path;
}

inline mmgen::clients::ServiceConfig service(const std::string& name, const std::string& endpoint = "stub:") {
    mmgen::clients::ServiceConfig c;
    c.name = name;
    c.endpoint = endpoint;
    c.model = name;
    c.max_attempts = 3;
    return c;
}

/// 1 LMM x `gens` generators, all on the stub.
inline mmgen::pipeline::RunConfig stub_config(const fs::path& manifest, const fs::path& out, std::size_t gens = 2,
                                              int workers = 1) {
    mmgen::pipeline::RunConfig c;
    c.manifest = manifest;
    c.output_dir = out;
    c.lmms = {service("lmm-a")};
    for (std::size_t g = 0; g < gens; ++g) {
        mmgen::pipeline::GeneratorConfig gc;
        gc.service = service("gen-" + std::to_string(g));
        gc.width = 16;
        gc.height = 16;
        c.generators.push_back(gc);
    }
    c.embedder = service("embedder");
    c.base_seed = 7;
    c.workers = workers;
    return c;
}

/// Every service talks to the same provider, so its counters see all calls.
inline mmgen::pipeline::TransportFactory factory_for(std::shared_ptr<mmgen::clients::StubProvider> stub) {
    return [stub](const mmgen::clients::ServiceConfig&) -> std::shared_ptr<mmgen::clients::Transport> { return stub; };
}

/// Retries without real sleeping.
inline mmgen::pipeline::RunHooks instant_retries() {
    mmgen::pipeline::RunHooks h;
    h.client_options.sleeper = [](mmgen::clients::Millis) {};
    h.client_options.jitter = [] { return 0.0; };
    return h;
}

inline std::string slurp(const fs::path& p) { return mmgen::fsutil::read_text(p); }

} // namespace testkit
