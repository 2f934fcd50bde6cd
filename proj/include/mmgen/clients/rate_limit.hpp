#pragma once

#include <chrono>
#include <memory>
#include <mutex>

namespace mmgen::clients {

class Clock {
  public:
    using time_point = std::chrono::steady_clock::time_point;
    virtual ~Clock() = default;
    virtual time_point now() = 0;
    virtual void sleep_until(time_point t) = 0;
};

class SystemClock final : public Clock {
  public:
    time_point now() override { return std::chrono::steady_clock::now(); }
    void sleep_until(time_point t) override;
};

std::shared_ptr<Clock> system_clock();

/// Token bucket in GCRA form that starts empty: up to `burst - 1` requests
/// back to back after an idle period, then one every 1/rate seconds.
/// A non-positive rate disables limiting.
class TokenBucket {
  public:
    TokenBucket(double rate_per_s, double burst, std::shared_ptr<Clock> clock);

    /// Blocks (via the clock) until a token is available.
    void acquire();

  private:
    std::chrono::nanoseconds interval_{0};
    std::chrono::nanoseconds tolerance_{0};
    std::shared_ptr<Clock> clock_;
    std::mutex mu_;
    Clock::time_point tat_{}; // theoretical arrival time of the next request
    bool started_ = false;
};

} // namespace mmgen::clients
