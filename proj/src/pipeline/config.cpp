#include "mmgen/pipeline/config.hpp"

#include "mmgen/common/error.hpp"
#include "mmgen/common/fsutil.hpp"

#include <set>

namespace mmgen::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return (base / p).lexically_normal();
}

} // namespace

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
    RunConfig c;
    try {
        c.manifest = resolve(j.at("manifest").get<std::string>(), base_dir);
        c.output_dir = resolve(j.at("output_dir").get<std::string>(), base_dir);
        for (const auto& l : j.value("lmms", json::array())) c.lmms.push_back(clients::ServiceConfig::from_json(l));
        for (const auto& g : j.value("generators", json::array())) {
            GeneratorConfig gc;
            gc.service = clients::ServiceConfig::from_json(g);
            gc.steps = g.value("steps", gc.steps);
            gc.width = g.value("width", gc.width);
            gc.height = g.value("height", gc.height);
            c.generators.push_back(std::move(gc));
        }
        if (!j.contains("embedder")) throw ConfigError("config has no embedder");
        c.embedder = clients::ServiceConfig::from_json(j.at("embedder"));
        c.base_seed = j.value("base_seed", c.base_seed);
        if (j.contains("decoding")) {
            c.temperature = j["decoding"].value("temperature", c.temperature);
            c.max_tokens = j["decoding"].value("max_tokens", c.max_tokens);
        }
        c.prompt = prompts::parse_prompt_id(j.value("prompt", "eval_pipeline"));
        c.workers = j.value("workers", c.workers);
        if (j.contains("cache_dir") && !j["cache_dir"].is_null()) {
            c.cache_dir = resolve(j["cache_dir"].get<std::string>(), base_dir);
        }
        c.fid_normalize = j.value("fid_normalize", c.fid_normalize);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad run config: ") + e.what());
    }
    return c;
}

json RunConfig::to_json() const {
    json lmm_list = json::array();
    for (const auto& l : lmms) lmm_list.push_back(l.to_json());
    json gen_list = json::array();
    for (const auto& g : generators) {
        json gj = g.service.to_json();
        gj["steps"] = g.steps;
        gj["width"] = g.width;
        gj["height"] = g.height;
        gen_list.push_back(std::move(gj));
    }
    json j{{"manifest", manifest.string()},
           {"output_dir", output_dir.string()},
           {"lmms", lmm_list},
           {"generators", gen_list},
           {"embedder", embedder.to_json()},
           {"base_seed", base_seed},
           {"decoding", {{"temperature", temperature}, {"max_tokens", max_tokens}}},
           {"prompt", std::string(prompts::to_string(prompt))},
           {"workers", workers},
           {"fid_normalize", fid_normalize}};
    j["cache_dir"] = cache_dir ? json(cache_dir->string()) : json(nullptr);
    return j;
}

void RunConfig::validate() const {
    if (lmms.empty()) throw ConfigError("config must list at least one LMM");
    if (generators.empty()) throw ConfigError("config must list at least one generator");
    if (generators.size() > kMaxGenerators) {
        throw ConfigError("config lists " + std::to_string(generators.size()) + " generators; at most " +
                          std::to_string(kMaxGenerators) + " are supported");
    }
    if (embedder.endpoint.empty() || embedder.model.empty()) throw ConfigError("embedder needs endpoint and model");
    if (manifest.empty()) throw ConfigError("config has no manifest path");
    if (output_dir.empty()) throw ConfigError("config has no output_dir");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (max_tokens < 1) throw ConfigError("decoding.max_tokens must be >= 1");
    std::set<std::string> names;
    for (const auto& l : lmms) {
        if (l.name.empty() || !names.insert(l.name).second) throw ConfigError("duplicate or empty LMM name: " + l.name);
    }
    names.clear();
    for (const auto& g : generators) {
        if (g.service.name.empty() || !names.insert(g.service.name).second) {
            throw ConfigError("duplicate or empty generator name: " + g.service.name);
        }
        if (g.width < 1 || g.height < 1 || g.steps < 1) throw ConfigError("generator steps/width/height must be positive");
    }
}

fs::path RunConfig::effective_cache_dir() const { return cache_dir ? *cache_dir : output_dir / "cache"; }

RunConfig load_run_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(fsutil::read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return RunConfig::from_json(j, fs::absolute(path).parent_path());
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view image_id, std::string_view generator) {
    std::string material = std::to_string(base_seed);
    material.push_back('\0');
    material.append(image_id);
    material.push_back('\0');
    material.append(generator);
    const Sha256 d = sha256(material);
    std::uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) seed = (seed << 8) | d[static_cast<std::size_t>(i)];
    return seed;
}

} // namespace mmgen::pipeline
