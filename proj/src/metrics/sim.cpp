#include "mmgen/metrics/sim.hpp"

#include "mmgen/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace mmgen::metrics {

double sim_score(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("sim_score: dimensions " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()));
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw ZeroVector("sim_score: zero-norm embedding");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<double> sim_scores(const std::vector<Embedding>& a, const std::vector<Embedding>& b) {
    if (a.size() != b.size()) throw DimensionMismatch("sim_scores: batch sizes differ");
    std::vector<double> out(a.size());
    std::exception_ptr error;
    const auto n = static_cast<long long>(a.size());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = sim_score(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(i)]);
        } catch (...) {
#pragma omp critical(mmgen_sim_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

std::vector<double> sim_scores_reference(const std::vector<Embedding>& a, const std::vector<Embedding>& b) {
    if (a.size() != b.size()) throw DimensionMismatch("sim_scores: batch sizes differ");
    std::vector<double> out;
    out.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(sim_score(a[i], b[i]));
    return out;
}

} // namespace mmgen::metrics
