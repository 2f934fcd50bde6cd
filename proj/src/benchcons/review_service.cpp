#include "mmgen/benchcons/review_service.hpp"

#include "mmgen/common/digest.hpp"
#include "mmgen/common/error.hpp"
#include "mmgen/common/fsutil.hpp"
#include "mmgen/corpus/image_probe.hpp"

#include <httplib.h>

#include <charconv>

namespace mmgen::benchcons {

using nlohmann::json;

struct ReviewService::Impl {
    httplib::Server server;
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, status, json{{"error", {{"code", code}, {"message", message}}}});
}

std::optional<std::size_t> size_param(const httplib::Request& req, const char* name, std::size_t fallback) {
    if (!req.has_param(name)) return fallback;
    const std::string v = req.get_param_value(name);
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) return std::nullopt;
    return out;
}

json task_json(const ReviewSnapshot& s, const ReviewTask& t) {
    json j = t.to_json();
    j["status"] = std::string(to_string(s.status(t.image_id)));
    auto it = s.verdicts.find(t.image_id);
    j["verdict"] = it == s.verdicts.end() ? json(nullptr) : it->second.to_json();
    return j;
}

json progress_json(const ReviewSnapshot& s) {
    return json{{"done", s.done()}, {"open", s.tasks.size() - s.done()}, {"total", s.tasks.size()}};
}

} // namespace

ReviewService::ReviewService(std::shared_ptr<ReviewStore> store, std::string host, int port)
    : impl_(std::make_unique<Impl>()), store_(std::move(store)), host_(std::move(host)) {
    auto& srv = impl_->server;
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                             {"Access-Control-Allow-Headers", "Content-Type"}});
    srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"status", "ok"}}); });

    srv.Get("/progress", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, progress_json(*store_->snapshot()));
    });

    srv.Get("/tasks", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string status = req.has_param("status") ? req.get_param_value("status") : "all";
        if (status != "open" && status != "done" && status != "all") {
            return send_error(res, 422, "bad_parameter", "status must be open, done or all");
        }
        const auto offset = size_param(req, "offset", 0);
        const auto limit = size_param(req, "limit", kDefaultPageSize);
        if (!offset || !limit || *limit == 0 || *limit > kMaxPageSize) {
            return send_error(res, 422, "bad_parameter", "offset must be >= 0 and limit in [1, 500]");
        }
        const auto snap = store_->snapshot();
        json page = json::array();
        std::size_t matched = 0;
        for (const auto& t : snap->tasks) {
            if (status != "all" && to_string(snap->status(t.image_id)) != status) continue;
            if (matched >= *offset && page.size() < *limit) page.push_back(task_json(*snap, t));
            ++matched;
        }
        send_json(res, 200, json{{"tasks", page}, {"total", matched}, {"offset", *offset}, {"limit", *limit}});
    });

    srv.Get(R"(/tasks/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto snap = store_->snapshot();
        const auto* t = snap->find(req.matches[1]);
        if (!t) return send_error(res, 404, "not_found", "unknown task " + std::string(req.matches[1]));
        json j = task_json(*snap, *t);
        try {
            const Bytes bytes = fsutil::read_bytes(t->uri.starts_with("file://") ? t->uri.substr(7) : t->uri);
            j["mime"] = std::string(corpus::mime_type(corpus::probe_image(bytes).format));
            j["image_b64"] = base64_encode(bytes);
        } catch (const Error& e) {
            j["mime"] = nullptr;
            j["image_b64"] = nullptr;
            j["image_error"] = e.what();
        }
        send_json(res, 200, j);
    });

    srv.Post(R"(/tasks/([^/]+)/verdict)", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        if (!store_->snapshot()->find(id)) return send_error(res, 404, "not_found", "unknown task " + id);
        const json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded()) return send_error(res, 422, "schema", "body is not JSON");
        ReviewVerdict v;
        bool amend = false;
        try {
            v = ReviewVerdict::from_json(body);
            if (body.contains("amend")) {
                if (!body["amend"].is_boolean()) throw SchemaMismatch("amend must be a boolean");
                amend = body["amend"].get<bool>();
            }
            if (!v.image_id.empty() && v.image_id != id) throw SchemaMismatch("image does not match the task id");
        } catch (const Error& e) {
            return send_error(res, 422, "schema", e.what());
        }
        switch (store_->submit(id, std::move(v), amend)) {
        case ReviewStore::Outcome::NotFound: return send_error(res, 404, "not_found", "unknown task " + id);
        case ReviewStore::Outcome::Conflict:
            return send_error(res, 409, "task_closed", "task already has a different verdict; resend with amend=true");
        case ReviewStore::Outcome::Unchanged:
        case ReviewStore::Outcome::Accepted: {
            const auto snap = store_->snapshot();
            send_json(res, 200, json{{"task", task_json(*snap, *snap->find(id))}, {"progress", progress_json(*snap)}});
            return;
        }
        }
    });

    port_ = port == 0 ? srv.bind_to_any_port(host_) : (srv.bind_to_port(host_, port) ? port : -1);
    if (port_ < 0) throw NetworkError("cannot bind review service on " + host_ + ":" + std::to_string(port));
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

ReviewService::~ReviewService() { stop(); }

std::string ReviewService::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

void ReviewService::stop() {
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

void ReviewService::wait() {
    if (thread_.joinable()) thread_.join();
}

} // namespace mmgen::benchcons
