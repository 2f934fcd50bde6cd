#pragma once

#include "mmgen/benchcons/review_store.hpp"

#include <memory>
#include <string>
#include <thread>

namespace mmgen::benchcons {

/// HTTP/JSON front end for a ReviewStore; endpoints are listed in docs/api.md.
/// Serves on a background thread until stop() or destruction.
class ReviewService {
  public:
    ReviewService(std::shared_ptr<ReviewStore> store, std::string host = "127.0.0.1", int port = 0);
    ~ReviewService();
    ReviewService(const ReviewService&) = delete;
    ReviewService& operator=(const ReviewService&) = delete;

    [[nodiscard]] int port() const noexcept { return port_; }
    [[nodiscard]] std::string base_url() const;
    void stop();
    /// Blocks until the server stops.
    void wait();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::shared_ptr<ReviewStore> store_;
    std::string host_;
    int port_ = 0;
    std::thread thread_;
};

inline constexpr std::size_t kDefaultPageSize = 50;
inline constexpr std::size_t kMaxPageSize = 500;

} // namespace mmgen::benchcons
