#include "mmgen/metrics/consistency.hpp"

#include "mmgen/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace mmgen::metrics {

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    if (a.size() != b.size()) throw ModelSetMismatch("spearman: series lengths differ");
    const std::size_t n = a.size();
    if (n < 2) return nan;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(a[i]) || !std::isfinite(b[i])) return nan;
    }
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const bool ties = std::set<double>(a.begin(), a.end()).size() != n || std::set<double>(b.begin(), b.end()).size() != n;
    if (!ties) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
        const double nn = static_cast<double>(n);
        return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
    }
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(n);
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return nan;
    return sab / std::sqrt(saa * sbb);
}

ConsistencyReport consistency(const std::map<std::string, std::vector<ModelScore>>& tables) {
    if (tables.size() < 2) throw ModelSetMismatch("consistency needs at least two generators");
    ConsistencyReport rep;
    std::set<std::string> reference;
    for (const auto& [gen, rows] : tables) {
        std::set<std::string> models;
        for (const auto& r : rows) {
            if (!models.insert(r.model).second) throw ModelSetMismatch("duplicate model " + r.model + " for " + gen);
        }
        if (rep.generators.empty()) {
            reference = models;
        } else if (models != reference) {
            throw ModelSetMismatch("generator " + gen + " evaluated a different model set");
        }
        rep.generators.push_back(gen);
    }
    rep.models.assign(reference.begin(), reference.end());

    for (const auto& [gen, rows] : tables) {
        std::vector<double> sims(rep.models.size()), fids(rep.models.size());
        for (const auto& r : rows) {
            const auto pos = static_cast<std::size_t>(
                std::lower_bound(rep.models.begin(), rep.models.end(), r.model) - rep.models.begin());
            sims[pos] = r.sim;
            fids[pos] = r.fid;
        }
        rep.sim_series[gen] = std::move(sims);
        rep.fid_series[gen] = std::move(fids);
    }

    const std::size_t g = rep.generators.size();
    rep.sim_rho.assign(g, std::vector<double>(g, 1.0));
    rep.fid_rho.assign(g, std::vector<double>(g, 1.0));
    for (std::size_t i = 0; i < g; ++i) {
        for (std::size_t j = 0; j < g; ++j) {
            const auto& gi = rep.generators[i];
            const auto& gj = rep.generators[j];
            rep.sim_rho[i][j] = spearman(rep.sim_series[gi], rep.sim_series[gj]);
            rep.fid_rho[i][j] = spearman(rep.fid_series[gi], rep.fid_series[gj]);
        }
    }
    return rep;
}

} // namespace mmgen::metrics
