#include "mmgen/clients/clients.hpp"

#include "mmgen/common/error.hpp"
#include "mmgen/corpus/image_probe.hpp"
#include "mmgen/corpus/sampling.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <random>

namespace mmgen::clients {

using nlohmann::json;

ServiceConfig ServiceConfig::from_json(const json& j) {
    ServiceConfig c;
    try {
        c.endpoint = j.at("endpoint").get<std::string>();
        c.model = j.at("model").get<std::string>();
        c.name = j.value("name", c.model);
        c.api_key_env = j.value("api_key_env", "");
        c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
        c.rate_limit_rps = j.value("rate_limit_rps", c.rate_limit_rps);
        c.max_attempts = j.value("max_attempts", c.max_attempts);
        c.timeout_s = j.value("timeout_s", c.timeout_s);
        c.max_payload_bytes = j.value("max_payload_bytes", c.max_payload_bytes);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad service config: ") + e.what());
    }
    if (c.max_concurrency < 1 || c.max_concurrency > 1024) {
        throw ConfigError("max_concurrency must be in [1, 1024]");
    }
    if (c.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
    return c;
}

json ServiceConfig::to_json() const {
    return json{{"name", name},
                {"endpoint", endpoint},
                {"model", model},
                {"api_key_env", api_key_env},
                {"max_concurrency", max_concurrency},
                {"rate_limit_rps", rate_limit_rps},
                {"max_attempts", max_attempts},
                {"timeout_s", timeout_s},
                {"max_payload_bytes", max_payload_bytes}};
}

namespace {

thread_local std::vector<Millis> t_last_delays;

std::uint64_t fresh_seed() {
    std::random_device rd;
    return (std::uint64_t{rd()} << 32) ^ rd();
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

std::string body_excerpt(const std::string& body) { return body.substr(0, 500); }

} // namespace

bool is_safety_refusal(const HttpResponse& r) {
    if (r.status < 400 || r.status >= 500) return false;
    const json j = json::parse(r.body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("error")) return false;
    const auto& e = j["error"];
    const std::string code = e.is_object() ? e.value("code", "") : "";
    return code == "content_policy_violation" || code == "safety_refusal";
}

ServiceGateway::ServiceGateway(ServiceConfig cfg, std::shared_ptr<Transport> transport,
                               std::shared_ptr<ContentStore> cache, ClientOptions opts)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), cache_(std::move(cache)),
      opts_(std::move(opts)), limiter_(cfg_.rate_limit_rps, 1.0, opts_.clock),
      slots_(cfg_.max_concurrency) {
    if (cfg_.name.empty()) cfg_.name = cfg_.model;
    if (!opts_.sleeper) {
        auto clock = opts_.clock;
        opts_.sleeper = [clock](Millis d) { clock->sleep_until(clock->now() + d); };
    }
    if (!opts_.jitter) {
        auto rng = std::make_shared<corpus::SplitMix64>(fresh_seed());
        auto mu = std::make_shared<std::mutex>();
        opts_.jitter = [rng, mu] {
            std::lock_guard lock(*mu);
            return rng->uniform();
        };
    }
}

const std::vector<Millis>& ServiceGateway::last_backoff_delays() { return t_last_delays; }

ServiceGateway::Exchange ServiceGateway::exchange(const std::string& path, const std::string& body,
                                                  const std::string& content_type,
                                                  bool (*refusal)(const HttpResponse&)) {
    if (body.size() > cfg_.max_payload_bytes) {
        throw PayloadTooLarge("request of " + std::to_string(body.size()) + " bytes exceeds limit of " +
                              std::to_string(cfg_.max_payload_bytes));
    }
    Headers headers;
    if (!cfg_.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
            headers.emplace_back("Authorization", std::string("Bearer ") + key);
        }
    }

    RetryPolicy policy;
    policy.max_attempts = cfg_.max_attempts;
    policy.base_delay = opts_.base_delay;
    policy.max_delay = opts_.max_delay;

    const auto start = std::chrono::steady_clock::now();
    RetryOutcome outcome;
    {
        slots_.acquire();
        struct Release {
            std::counting_semaphore<1024>& s;
            ~Release() { s.release(); }
        } release{slots_};
        outcome = send_with_retry(
            [&] {
                limiter_.acquire();
                ++stats_.network_calls;
                return transport_->post(path, body, content_type, headers);
            },
            policy, opts_.sleeper, opts_.jitter);
    }
    stats_.retries += static_cast<std::uint64_t>(outcome.attempts - 1);
    t_last_delays = outcome.delays;

    const HttpResponse& r = outcome.response;
    if (r.ok()) return {r, outcome.attempts, elapsed_ms(start)};
    if (r.status == 401 || r.status == 403) {
        throw AuthError(cfg_.name + ": HTTP " + std::to_string(r.status) + ": " + body_excerpt(r.body));
    }
    if (r.status == 413) throw PayloadTooLarge(cfg_.name + ": provider rejected payload size");
    if (refusal && refusal(r)) {
        const json j = json::parse(r.body, nullptr, false);
        std::string msg = r.body;
        if (!j.is_discarded() && j["error"].is_object()) msg = j["error"].value("message", r.body);
        throw SafetyRefusal(msg);
    }
    throw ProviderError(r.status, r.body);
}

std::optional<Bytes> ServiceGateway::cache_get(const CacheKey& key) {
    if (!cache_) return std::nullopt;
    auto hit = cache_->get(key);
    if (hit) ++stats_.cache_hits;
    return hit;
}

void ServiceGateway::cache_put(const CacheKey& key, std::span<const std::uint8_t> value) {
    if (cache_) cache_->put(key, value);
}

// ---------------------------------------------------------------------------

json LmmClient::wire_request(const LmmRequest& req, const std::string& model) {
    json content = json::array();
    if (!req.image.empty()) {
        std::string mime = "image/png";
        try {
            mime = std::string(corpus::mime_type(corpus::probe_image(req.image).format));
        } catch (const UndecodableImage&) {
            // left to the provider to reject
        }
        content.push_back({{"type", "image_url"},
                           {"image_url", {{"url", "data:" + mime + ";base64," + base64_encode(req.image)}}}});
    }
    content.push_back({{"type", "text"}, {"text", req.prompt}});
    return json{{"model", model},
                {"messages", json::array({{{"role", "user"}, {"content", content}}})},
                {"temperature", req.temperature},
                {"max_tokens", req.max_tokens}};
}

LmmResponse LmmClient::describe(const LmmRequest& req) {
    if (req.prompt.empty()) throw ConfigError("LMM prompt must be non-empty");
    if (!req.image.empty()) corpus::probe_image(req.image);
    ++stats_.requests;
    const std::string model = req.model.empty() ? cfg_.model : req.model;
    const CacheKey key = make_cache_key("lmm", json{{"model", model},
                                                    {"endpoint", cfg_.endpoint},
                                                    {"image_sha256", sha256_hex(req.image)},
                                                    {"prompt_sha256", sha256_hex(req.prompt)},
                                                    {"temperature", req.temperature},
                                                    {"max_tokens", req.max_tokens},
                                                    {"salt", req.cache_salt}});
    auto parse_cached = [](std::string_view raw) {
        const json j = json::parse(raw);
        LmmResponse r;
        r.text = j.at("text").get<std::string>();
        r.usage = {j["usage"].value("prompt_tokens", 0), j["usage"].value("completion_tokens", 0),
                   j["usage"].value("total_tokens", 0)};
        return r;
    };
    if (auto hit = cache_get(key)) {
        LmmResponse r = parse_cached(as_chars(*hit));
        r.from_cache = true;
        return r;
    }

    const auto ex = exchange(kChatPath, wire_request(req, model).dump(), "application/json");
    const json j = json::parse(ex.response.body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
        throw ProviderError(ex.response.status, "malformed chat completion: " + body_excerpt(ex.response.body));
    }
    const auto& msg = j["choices"][0]["message"];
    if (!msg.is_object() || !msg.contains("content") || !msg["content"].is_string()) {
        throw ProviderError(ex.response.status, "chat completion without text content");
    }
    LmmResponse r;
    r.text = msg["content"].get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
        r.usage = {j["usage"].value("prompt_tokens", 0), j["usage"].value("completion_tokens", 0),
                   j["usage"].value("total_tokens", 0)};
    }
    r.latency_ms = ex.latency_ms;
    r.attempts = ex.attempts;
    const json stored{{"text", r.text},
                      {"usage",
                       {{"prompt_tokens", r.usage.prompt_tokens},
                        {"completion_tokens", r.usage.completion_tokens},
                        {"total_tokens", r.usage.total_tokens}}}};
    cache_put(key, to_bytes(stored.dump()));
    return r;
}

T2iResponse T2iClient::generate(const T2iRequest& req) {
    if (req.prompt.empty()) throw ConfigError("generation prompt must be non-empty");
    ++stats_.requests;
    const std::string model = req.generator.empty() ? cfg_.model : req.generator;
    const json wire{{"model", model},     {"prompt", req.prompt}, {"seed", req.seed},
                    {"steps", req.steps}, {"width", req.width},   {"height", req.height}};
    json key_material = wire;
    key_material["endpoint"] = cfg_.endpoint;
    const CacheKey key = make_cache_key("t2i", key_material);
    if (auto hit = cache_get(key)) {
        T2iResponse r;
        r.image = std::move(*hit);
        r.image_hash = sha256_hex(r.image);
        r.from_cache = true;
        return r;
    }
    const auto ex = exchange(kGeneratePath, wire.dump(), "application/json", &is_safety_refusal);
    T2iResponse r;
    r.image = to_bytes(ex.response.body);
    try {
        corpus::probe_image(r.image);
    } catch (const UndecodableImage& e) {
        throw ProviderError(ex.response.status, std::string("generator returned a non-image body: ") + e.what());
    }
    r.image_hash = sha256_hex(r.image);
    r.latency_ms = ex.latency_ms;
    r.attempts = ex.attempts;
    cache_put(key, r.image);
    return r;
}

std::optional<std::size_t> EmbedClient::locked_dimension() const {
    const auto d = dim_.load();
    return d == 0 ? std::nullopt : std::optional<std::size_t>(d);
}

void EmbedClient::lock_dimension(std::size_t d) {
    std::size_t expected = 0;
    if (!dim_.compare_exchange_strong(expected, d) && expected != d) {
        throw DimensionMismatch("embedding dimension " + std::to_string(d) + " does not match locked " +
                                std::to_string(expected));
    }
}

EmbedResponse EmbedClient::embed(std::span<const std::uint8_t> image) {
    corpus::probe_image(image);
    ++stats_.requests;
    const std::string image_sha = sha256_hex(image);
    const CacheKey key =
        make_cache_key("embed", json{{"model", cfg_.model}, {"endpoint", cfg_.endpoint}, {"image_sha256", image_sha}});
    EmbedResponse r;
    r.model = cfg_.model;
    if (auto hit = cache_get(key)) {
        r.vector = json::parse(as_chars(*hit)).get<std::vector<double>>();
        r.from_cache = true;
    } else {
        const json wire{{"model", cfg_.model}, {"image_b64", base64_encode(image)}};
        const auto ex = exchange(kEmbedPath, wire.dump(), "application/json");
        const json j = json::parse(ex.response.body, nullptr, false);
        if (j.is_discarded() || !j.contains("embedding") || !j["embedding"].is_array()) {
            throw ProviderError(ex.response.status, "malformed embedding response: " + body_excerpt(ex.response.body));
        }
        for (const auto& v : j["embedding"]) {
            if (!v.is_number()) throw ProviderError(ex.response.status, "non-numeric embedding component");
            r.vector.push_back(v.get<double>());
        }
        r.latency_ms = ex.latency_ms;
    }
    if (r.vector.empty()) throw ProviderError(200, "empty embedding");
    for (double v : r.vector) {
        if (!std::isfinite(v)) throw ProviderError(200, "non-finite embedding component");
    }
    lock_dimension(r.vector.size());
    if (!r.from_cache) cache_put(key, to_bytes(json(r.vector).dump()));
    return r;
}

} // namespace mmgen::clients
