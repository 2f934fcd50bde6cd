#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace mmgen::clients {

using Headers = std::vector<std::pair<std::string, std::string>>;

/// status 0 means the request never produced an HTTP response (connect
/// failure, timeout); `body` then carries the transport error text.
struct HttpResponse {
    int status = 0;
    std::string body;
    std::string content_type;

    [[nodiscard]] bool ok() const noexcept { return status >= 200 && status < 300; }
};

/// Request/response seam under every client. HTTP in production, an
/// in-process stub in tests.
class Transport {
  public:
    virtual ~Transport() = default;

    virtual HttpResponse post(const std::string& path, const std::string& body,
                              const std::string& content_type, const Headers& headers) = 0;

    /// Reachability check; throws NetworkError when the service cannot be
    /// contacted. Any HTTP status counts as reachable.
    virtual void probe() {}
};

/// `base_url` is scheme://host[:port][/prefix]; request paths are appended to
/// the prefix. A fresh connection is used per request, so instances are safe
/// to share across threads.
class HttpTransport : public Transport {
  public:
    HttpTransport(std::string base_url, double timeout_s);

    HttpResponse post(const std::string& path, const std::string& body,
                      const std::string& content_type, const Headers& headers) override;
    void probe() override;

  private:
    std::string scheme_host_port_;
    std::string prefix_;
    double timeout_s_;
};

} // namespace mmgen::clients
