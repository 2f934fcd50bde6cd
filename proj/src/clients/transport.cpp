#include "mmgen/clients/transport.hpp"

#include "mmgen/common/error.hpp"

#include "httplib.h"

namespace mmgen::clients {

HttpTransport::HttpTransport(std::string base_url, double timeout_s) : timeout_s_(timeout_s) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint must be an absolute URL: " + base_url);
    }
    const auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        scheme_host_port_ = base_url;
    } else {
        scheme_host_port_ = base_url.substr(0, path_start);
        prefix_ = base_url.substr(path_start);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
}

HttpResponse HttpTransport::post(const std::string& path, const std::string& body,
                                 const std::string& content_type, const Headers& headers) {
    httplib::Client cli(scheme_host_port_);
    const auto secs = static_cast<time_t>(timeout_s_);
    const auto usecs = static_cast<time_t>((timeout_s_ - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = cli.Post(prefix_ + path, h, body, content_type);
    if (!res) {
        return {0, "transport error: " + httplib::to_string(res.error()), ""};
    }
    return {res->status, res->body, res->get_header_value("Content-Type")};
}

void HttpTransport::probe() {
    httplib::Client cli(scheme_host_port_);
    cli.set_connection_timeout(static_cast<time_t>(std::max(1.0, std::min(timeout_s_, 10.0))), 0);
    auto res = cli.Get(prefix_.empty() ? "/" : prefix_);
    if (!res) {
        throw NetworkError("cannot reach " + scheme_host_port_ + prefix_ + ": " +
                           httplib::to_string(res.error()));
    }
}

} // namespace mmgen::clients
