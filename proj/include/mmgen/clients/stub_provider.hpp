#pragma once

#include "mmgen/clients/transport.hpp"
#include "mmgen/common/digest.hpp"

#include <json.hpp>

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace mmgen::clients {

/// Deterministic stand-in for all three model services, speaking the same
/// wire protocol as the real clients:
///  - chat completions: "caption: <sha256 of image>" (or a custom responder)
///  - image generation: solid-color PNG whose color is digest(prompt, seed)
///  - embed: first d bytes of digest(image) mapped to [-1, 1]
/// Faults can be scripted per path or injected with a predicate.
class StubProvider : public Transport {
  public:
    struct Options {
        std::size_t embed_dim = 16;
    };

    StubProvider();
    explicit StubProvider(Options opts);

    HttpResponse post(const std::string& path, const std::string& body, const std::string& content_type,
                      const Headers& headers) override;

    /// (prompt, image bytes) -> caption text.
    using LmmResponder = std::function<std::string(const std::string& prompt, const Bytes& image)>;
    void set_lmm_responder(LmmResponder r);

    /// Responses consumed in order before normal handling of `path`.
    void script(const std::string& path, std::vector<HttpResponse> responses);

    /// Called with (path, parsed request); a returned response replaces the
    /// normal one. Evaluated after scripted responses.
    using Fault = std::function<std::optional<HttpResponse>(const std::string&, const nlohmann::json&)>;
    void add_fault(Fault f);

    void set_embed_dim(std::size_t d);

    [[nodiscard]] std::size_t calls(const std::string& path) const;
    [[nodiscard]] std::size_t total_calls() const;
    void reset_counters();

    static std::vector<double> digest_embedding(std::span<const std::uint8_t> image, std::size_t dim);
    static Bytes color_png(const std::string& prompt, std::uint64_t seed, int width, int height);
    static HttpResponse refusal(const std::string& message);

  private:
    HttpResponse handle(const std::string& path, const nlohmann::json& req);

    Options opts_;
    mutable std::mutex mu_;
    std::map<std::string, std::size_t> counts_;
    std::map<std::string, std::deque<HttpResponse>> scripted_;
    std::vector<Fault> faults_;
    LmmResponder responder_;
};

/// Serves a StubProvider over HTTP on a background thread (loopback only).
class StubServer {
  public:
    explicit StubServer(std::shared_ptr<Transport> provider, std::string host = "127.0.0.1", int port = 0);
    ~StubServer();
    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;

    [[nodiscard]] int port() const noexcept { return port_; }
    [[nodiscard]] std::string base_url() const;
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string host_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace mmgen::clients
