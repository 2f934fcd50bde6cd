#include "mmgen/clients/retry.hpp"

#include <algorithm>
#include <cmath>

namespace mmgen::clients {

Disposition classify(int status) noexcept {
    if (status >= 200 && status < 300) return Disposition::Success;
    if (status == 0 || status == 408 || status == 429 || status >= 500) return Disposition::Retry;
    return Disposition::Fatal;
}

Millis backoff_delay(const RetryPolicy& policy, int attempt, double u) noexcept {
    const double exp = std::ldexp(static_cast<double>(policy.base_delay.count()), std::max(0, attempt - 1));
    const double capped = std::min(exp, static_cast<double>(policy.max_delay.count()));
    const double scaled = capped * (1.0 - policy.jitter * std::clamp(u, 0.0, 1.0));
    return Millis(static_cast<Millis::rep>(std::llround(scaled)));
}

RetryOutcome send_with_retry(const std::function<HttpResponse()>& send, const RetryPolicy& policy,
                             const Sleeper& sleep, const JitterSource& jitter) {
    RetryOutcome out;
    const int max_attempts = std::max(1, policy.max_attempts);
    for (int attempt = 1;; ++attempt) {
        out.response = send();
        out.attempts = attempt;
        if (classify(out.response.status) != Disposition::Retry || attempt >= max_attempts) {
            return out;
        }
        const Millis d = backoff_delay(policy, attempt, jitter ? jitter() : 0.0);
        out.delays.push_back(d);
        if (sleep) sleep(d);
    }
}

} // namespace mmgen::clients
