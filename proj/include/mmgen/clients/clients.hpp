#pragma once

#include "mmgen/clients/cache.hpp"
#include "mmgen/clients/rate_limit.hpp"
#include "mmgen/clients/retry.hpp"
#include "mmgen/clients/transport.hpp"
#include "mmgen/common/digest.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

namespace mmgen::clients {

/// Per-service configuration block (`lmms[]`, `generators[]`, `embedder`).
struct ServiceConfig {
    std::string name; // defaults to `model`
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    int max_concurrency = 4;
    double rate_limit_rps = 0.0;
    int max_attempts = 4;
    double timeout_s = 120.0;
    std::size_t max_payload_bytes = 20u << 20;

    static ServiceConfig from_json(const nlohmann::json& j);
    [[nodiscard]] nlohmann::json to_json() const;
};

struct ClientOptions {
    std::shared_ptr<Clock> clock = system_clock();
    Sleeper sleeper;       // defaults to clock-based sleep
    JitterSource jitter;   // defaults to a per-client PRNG
    Millis base_delay{500};
    Millis max_delay{30'000};
};

struct CallStats {
    std::atomic<std::uint64_t> requests{0};      // logical calls
    std::atomic<std::uint64_t> network_calls{0}; // transport attempts
    std::atomic<std::uint64_t> cache_hits{0};
    std::atomic<std::uint64_t> retries{0};
};

/// Shared machinery: concurrency cap, rate limit, retries, auth, cache and
/// error mapping. Handles are safe to share across threads.
class ServiceGateway {
  public:
    ServiceGateway(ServiceConfig cfg, std::shared_ptr<Transport> transport,
                   std::shared_ptr<ContentStore> cache, ClientOptions opts);
    virtual ~ServiceGateway() = default;

    [[nodiscard]] const ServiceConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const CallStats& stats() const noexcept { return stats_; }
    [[nodiscard]] Transport& transport() noexcept { return *transport_; }
    /// Delays slept between attempts of the most recent call on this thread.
    [[nodiscard]] static const std::vector<Millis>& last_backoff_delays();

  protected:
    struct Exchange {
        HttpResponse response;
        int attempts = 0;
        double latency_ms = 0;
    };
    /// Sends with retries; returns a 2xx response or throws AuthError,
    /// PayloadTooLarge, SafetyRefusal (when `refusal` matches) or ProviderError.
    Exchange exchange(const std::string& path, const std::string& body, const std::string& content_type,
                      bool (*refusal)(const HttpResponse&) = nullptr);

    std::optional<Bytes> cache_get(const CacheKey& key);
    void cache_put(const CacheKey& key, std::span<const std::uint8_t> value);

    ServiceConfig cfg_;
    CallStats stats_;

  private:
    std::shared_ptr<Transport> transport_;
    std::shared_ptr<ContentStore> cache_;
    ClientOptions opts_;
    TokenBucket limiter_;
    std::counting_semaphore<1024> slots_;
};

struct LmmRequest {
    Bytes image; // empty: text-only request
    std::string prompt;
    std::string model; // empty: the configured model
    double temperature = 0.0;
    int max_tokens = 512;
    std::string cache_salt; // distinguishes deliberate re-asks of the same request
};

struct TokenUsage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
    int total_tokens = 0;
};

struct LmmResponse {
    std::string text; // verbatim provider output
    TokenUsage usage;
    double latency_ms = 0;
    bool from_cache = false;
    int attempts = 0;
};

/// OpenAI-compatible chat-completions client (image part + text part).
class LmmClient : public ServiceGateway {
  public:
    using ServiceGateway::ServiceGateway;
    LmmResponse describe(const LmmRequest& req);
    [[nodiscard]] static nlohmann::json wire_request(const LmmRequest& req, const std::string& model);
};

struct T2iRequest {
    std::string prompt;
    std::string generator; // empty: the configured model
    std::uint64_t seed = 0;
    int steps = 28;
    int width = 1024;
    int height = 1024;
};

struct T2iResponse {
    Bytes image;
    std::string image_hash;
    double latency_ms = 0;
    bool from_cache = false;
    int attempts = 0;
};

/// `{prompt, seed, steps, width, height, model}` -> image/png.
class T2iClient : public ServiceGateway {
  public:
    using ServiceGateway::ServiceGateway;
    T2iResponse generate(const T2iRequest& req);
};

struct EmbedResponse {
    std::vector<double> vector;
    std::string model;
    double latency_ms = 0;
    bool from_cache = false;
};

/// `{image_b64, model}` -> `{embedding:[...]}`. The first successful call
/// locks the dimension for the lifetime of the client.
class EmbedClient : public ServiceGateway {
  public:
    using ServiceGateway::ServiceGateway;
    EmbedResponse embed(std::span<const std::uint8_t> image);

    [[nodiscard]] std::optional<std::size_t> locked_dimension() const;
    /// Throws DimensionMismatch if a different dimension is already locked.
    void lock_dimension(std::size_t d);

  private:
    std::atomic<std::size_t> dim_{0};
};

inline constexpr const char* kChatPath = "/chat/completions";
inline constexpr const char* kGeneratePath = "/images/generate";
inline constexpr const char* kEmbedPath = "/embed";

/// True for a 4xx whose JSON body has error.code "content_policy_violation"
/// or "safety_refusal".
bool is_safety_refusal(const HttpResponse& r);

} // namespace mmgen::clients
