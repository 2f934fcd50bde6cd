#pragma once

#include "mmgen/clients/clients.hpp"
#include "mmgen/prompts/prompts.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mmgen::pipeline {

struct GeneratorConfig {
    clients::ServiceConfig service;
    int steps = 28;
    int width = 1024;
    int height = 1024;
};

inline constexpr std::size_t kMaxGenerators = 4;

struct RunConfig {
    std::filesystem::path manifest;
    std::filesystem::path output_dir;
    std::vector<clients::ServiceConfig> lmms;
    std::vector<GeneratorConfig> generators;
    clients::ServiceConfig embedder;
    std::uint64_t base_seed = 0;
    double temperature = 0.0;
    int max_tokens = 512;
    prompts::PromptId prompt = prompts::PromptId::EvalPipeline;
    int workers = 4;
    std::optional<std::filesystem::path> cache_dir; // default: <output_dir>/cache
    bool fid_normalize = false;

    /// Relative paths resolve against `base_dir`. Throws ConfigError.
    static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    [[nodiscard]] nlohmann::json to_json() const;

    /// Throws ConfigError: >= 1 lmm, 1..4 generators, an embedder, unique
    /// names per role.
    void validate() const;

    [[nodiscard]] std::filesystem::path effective_cache_dir() const;
    [[nodiscard]] const std::string& headline_generator() const { return generators.front().service.name; }
};

RunConfig load_run_config(const std::filesystem::path& path);

/// Seed for one (image, generator): first 8 bytes (big-endian) of
/// SHA-256(base_seed || 0x00 || image_id || 0x00 || generator).
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view image_id, std::string_view generator);

} // namespace mmgen::pipeline
