#pragma once

#include "mmgen/clients/transport.hpp"

#include <chrono>
#include <functional>
#include <vector>

namespace mmgen::clients {

using Millis = std::chrono::milliseconds;

struct RetryPolicy {
    int max_attempts = 4; // total, including the first
    Millis base_delay{500};
    Millis max_delay{30'000};
    double jitter = 0.5; // delay is scaled by (1 - jitter * u), u ~ U[0,1)
};

enum class Disposition { Success, Retry, Fatal };

/// 2xx success; 429, 5xx and transport failures (status 0) retry;
/// everything else is fatal for the attempt loop.
Disposition classify(int status) noexcept;

/// Exponential backoff: min(max_delay, base_delay * 2^(attempt-1)) with
/// multiplicative jitter. `attempt` is the 1-based number of the attempt that
/// just failed.
Millis backoff_delay(const RetryPolicy& policy, int attempt, double u) noexcept;

struct RetryOutcome {
    HttpResponse response; // last response seen
    int attempts = 0;
    std::vector<Millis> delays;
};

using Sleeper = std::function<void(Millis)>;
using JitterSource = std::function<double()>;

RetryOutcome send_with_retry(const std::function<HttpResponse()>& send, const RetryPolicy& policy,
                             const Sleeper& sleep, const JitterSource& jitter);

} // namespace mmgen::clients
