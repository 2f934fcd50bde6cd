#include "mmgen/clients/stub_provider.hpp"

#include "mmgen/clients/clients.hpp"
#include "mmgen/clients/png.hpp"
#include "mmgen/common/error.hpp"

#include "httplib.h"

namespace mmgen::clients {

using nlohmann::json;

StubProvider::StubProvider() : StubProvider(Options{}) {}
StubProvider::StubProvider(Options opts) : opts_(opts) {}

void StubProvider::set_lmm_responder(LmmResponder r) {
    std::lock_guard lock(mu_);
    responder_ = std::move(r);
}

void StubProvider::script(const std::string& path, std::vector<HttpResponse> responses) {
    std::lock_guard lock(mu_);
    auto& q = scripted_[path];
    for (auto& r : responses) q.push_back(std::move(r));
}

void StubProvider::add_fault(Fault f) {
    std::lock_guard lock(mu_);
    faults_.push_back(std::move(f));
}

void StubProvider::set_embed_dim(std::size_t d) {
    std::lock_guard lock(mu_);
    opts_.embed_dim = d;
}

std::size_t StubProvider::calls(const std::string& path) const {
    std::lock_guard lock(mu_);
    auto it = counts_.find(path);
    return it == counts_.end() ? 0 : it->second;
}

std::size_t StubProvider::total_calls() const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& [p, c] : counts_) n += c;
    return n;
}

void StubProvider::reset_counters() {
    std::lock_guard lock(mu_);
    counts_.clear();
}

std::vector<double> StubProvider::digest_embedding(std::span<const std::uint8_t> image, std::size_t dim) {
    std::vector<double> v;
    v.reserve(dim);
    Sha256 block = sha256(image);
    while (v.size() < dim) {
        for (auto b : block) {
            if (v.size() == dim) break;
            v.push_back(static_cast<double>(b) / 127.5 - 1.0);
        }
        block = sha256(std::span<const std::uint8_t>(block));
    }
    return v;
}

Bytes StubProvider::color_png(const std::string& prompt, std::uint64_t seed, int width, int height) {
    const Sha256 d = sha256(prompt + "\n" + std::to_string(seed));
    return solid_png(static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height), d[0], d[1], d[2]);
}

HttpResponse StubProvider::refusal(const std::string& message) {
    return {400,
            json{{"error", {{"code", "content_policy_violation"}, {"message", message}}}}.dump(),
            "application/json"};
}

HttpResponse StubProvider::post(const std::string& path, const std::string& body, const std::string&,
                                const Headers&) {
    json req = json::parse(body, nullptr, false);
    std::vector<Fault> faults;
    {
        std::lock_guard lock(mu_);
        ++counts_[path];
        auto it = scripted_.find(path);
        if (it != scripted_.end() && !it->second.empty()) {
            HttpResponse r = std::move(it->second.front());
            it->second.pop_front();
            return r;
        }
        faults = faults_;
    }
    if (req.is_discarded()) return {400, R"({"error":{"code":"bad_json"}})", "application/json"};
    for (const auto& f : faults) {
        if (auto r = f(path, req)) return *r;
    }
    return handle(path, req);
}

HttpResponse StubProvider::handle(const std::string& path, const json& req) {
    try {
        if (path == kChatPath) {
            std::string prompt;
            Bytes image;
            for (const auto& part : req.at("messages").at(0).at("content")) {
                if (part.at("type") == "text") prompt = part.at("text").get<std::string>();
                if (part.at("type") == "image_url") {
                    const auto url = part.at("image_url").at("url").get<std::string>();
                    image = base64_decode(url.substr(url.find(',') + 1));
                }
            }
            LmmResponder responder;
            {
                std::lock_guard lock(mu_);
                responder = responder_;
            }
            const std::string text = responder ? responder(prompt, image) : "caption: " + sha256_hex(image);
            const json out{{"id", "stub"},
                           {"object", "chat.completion"},
                           {"model", req.value("model", "")},
                           {"choices", json::array({{{"index", 0},
                                                     {"message", {{"role", "assistant"}, {"content", text}}},
                                                     {"finish_reason", "stop"}}})},
                           {"usage", {{"prompt_tokens", 0}, {"completion_tokens", 0}, {"total_tokens", 0}}}};
            return {200, out.dump(), "application/json"};
        }
        if (path == kGeneratePath) {
            const Bytes png = color_png(req.at("prompt").get<std::string>(), req.at("seed").get<std::uint64_t>(),
                                        req.value("width", 64), req.value("height", 64));
            return {200, std::string(as_chars(png)), "image/png"};
        }
        if (path == kEmbedPath) {
            std::size_t dim;
            {
                std::lock_guard lock(mu_);
                dim = opts_.embed_dim;
            }
            const Bytes image = base64_decode(req.at("image_b64").get<std::string>());
            return {200, json{{"embedding", digest_embedding(image, dim)}}.dump(), "application/json"};
        }
    } catch (const std::exception& e) {
        return {400, json{{"error", {{"code", "bad_request"}, {"message", e.what()}}}}.dump(), "application/json"};
    }
    return {404, R"({"error":{"code":"not_found"}})", "application/json"};
}

// ---------------------------------------------------------------------------

struct StubServer::Impl {
    httplib::Server server;
};

StubServer::StubServer(std::shared_ptr<Transport> provider, std::string host, int port)
    : impl_(std::make_unique<Impl>()), host_(std::move(host)) {
    auto handler = [provider](const httplib::Request& req, httplib::Response& res) {
        Headers headers;
        for (const auto& [k, v] : req.headers) headers.emplace_back(k, v);
        // Paths arrive with any base prefix (e.g. /v1) still attached.
        std::string path = req.path;
        for (const char* p : {kChatPath, kGeneratePath, kEmbedPath}) {
            const std::string_view sv(p);
            if (path.size() >= sv.size() && path.compare(path.size() - sv.size(), sv.size(), sv) == 0) {
                path = p;
            }
        }
        const HttpResponse r = provider->post(path, req.body, req.get_header_value("Content-Type"), headers);
        res.status = r.status;
        res.set_content(r.body, r.content_type.empty() ? "application/octet-stream" : r.content_type);
    };
    impl_->server.Post(R"(/.*)", handler);
    impl_->server.Get(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok"})", "application/json");
    });
    port_ = port == 0 ? impl_->server.bind_to_any_port(host_) : (impl_->server.bind_to_port(host_, port) ? port : -1);
    if (port_ < 0) throw NetworkError("cannot bind stub server on " + host_ + ":" + std::to_string(port));
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

StubServer::~StubServer() { stop(); }

void StubServer::stop() {
    if (thread_.joinable()) {
        impl_->server.stop();
        thread_.join();
    }
}

std::string StubServer::base_url() const { return "http://" + host_ + ":" + std::to_string(port_) + "/v1"; }

} // namespace mmgen::clients
