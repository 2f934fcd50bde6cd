#include "mmgen/clients/rate_limit.hpp"

#include <algorithm>
#include <thread>

namespace mmgen::clients {

void SystemClock::sleep_until(time_point t) { std::this_thread::sleep_until(t); }

std::shared_ptr<Clock> system_clock() {
    static auto clock = std::make_shared<SystemClock>();
    return clock;
}

TokenBucket::TokenBucket(double rate_per_s, double burst, std::shared_ptr<Clock> clock)
    : clock_(std::move(clock)) {
    if (rate_per_s > 0) {
        interval_ = std::chrono::nanoseconds(static_cast<long long>(1e9 / rate_per_s));
        tolerance_ = interval_ * static_cast<long long>(std::max(0.0, burst - 1.0));
    }
}

void TokenBucket::acquire() {
    if (interval_.count() == 0) return;
    Clock::time_point allowed_at;
    {
        std::lock_guard lock(mu_);
        const auto now = clock_->now();
        // The bucket refills from empty: each request is released at the end
        // of its own interval, so n requests span n intervals.
        if (!started_ || tat_ < now) {
            tat_ = now;
            started_ = true;
        }
        tat_ += interval_;
        allowed_at = tat_ - tolerance_;
        if (allowed_at < now) allowed_at = now;
    }
    if (allowed_at > clock_->now()) clock_->sleep_until(allowed_at);
}

} // namespace mmgen::clients
