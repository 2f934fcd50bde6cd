#include "mmgen/common/error.hpp"
#include "mmgen/metrics/aggregate.hpp"
#include "mmgen/metrics/consistency.hpp"
#include "mmgen/metrics/fid.hpp"
#include "mmgen/metrics/gaussian.hpp"
#include "mmgen/metrics/sim.hpp"

#include <doctest.h>

#include <Eigen/QR>
#include <omp.h>

#include <cmath>
#include <limits>
#include <random>

using namespace mmgen;
using namespace mmgen::metrics;

namespace {

std::vector<Embedding> random_set(std::mt19937_64& rng, std::size_t n, std::size_t d, double shift = 0.0) {
    std::normal_distribution<double> g(shift, 1.0);
    std::vector<Embedding> out(n, Embedding(d));
    for (auto& v : out) {
        for (auto& x : v) x = g(rng);
    }
    return out;
}

/// Textbook sample mean and (n-1) covariance, summed in row order.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> naive_moments(const std::vector<Embedding>& xs) {
    const auto d = static_cast<Eigen::Index>(xs[0].size());
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
    for (const auto& x : xs) mu += Eigen::Map<const Eigen::VectorXd>(x.data(), d);
    mu /= static_cast<double>(xs.size());
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
    for (const auto& x : xs) {
        const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(x.data(), d) - mu;
        s += c * c.transpose();
    }
    return {mu, s / static_cast<double>(xs.size() - 1)};
}

Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, Eigen::Index d) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(d, d);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    return qr.householderQ();
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index d) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(d, d + 3);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
    return a * a.transpose() / static_cast<double>(d) + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

} // namespace

TEST_CASE("sim worked value and properties") {
    const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    CHECK(sim_score(a, b) == doctest::Approx(32.0 / (std::sqrt(14.0) * std::sqrt(77.0))).epsilon(1e-15));
    CHECK(sim_score(a, a) == doctest::Approx(1.0));
    const std::vector<double> neg{-1, -2, -3};
    CHECK(sim_score(a, neg) == doctest::Approx(-1.0));

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    for (int t = 0; t < 200; ++t) {
        const auto xs = random_set(rng, 2, 1 + static_cast<std::size_t>(t % 64));
        const double s = sim_score(xs[0], xs[1]);
        CHECK(s >= -1.0);
        CHECK(s <= 1.0);
        CHECK(s == sim_score(xs[1], xs[0]));
        auto x = xs[0], y = xs[1];
        const double alpha = scale(rng), beta = scale(rng);
        for (auto& v : x) v *= alpha;
        for (auto& v : y) v *= beta;
        CHECK(std::fabs(sim_score(x, y) - s) <= 1e-12);
    }
    // Parallel vectors whose rounded cosine would exceed 1.
    const std::vector<double> p{0.1, 0.2, 0.3}, q{0.30000000000000004, 0.6000000000000001, 0.9};
    CHECK(sim_score(p, q) <= 1.0);

    CHECK_THROWS_AS(sim_score(std::vector<double>{1, 2}, b), DimensionMismatch);
    CHECK_THROWS_AS(sim_score(std::vector<double>{0, 0, 0}, b), ZeroVector);
}

TEST_CASE("parallel sim matches the serial twin") {
    std::mt19937_64 rng(2);
    const auto xs = random_set(rng, 1000, 32), ys = random_set(rng, 1000, 32);
    CHECK(sim_scores(xs, ys) == sim_scores_reference(xs, ys));
}

TEST_CASE("gaussian fits agree with a naive oracle") {
    std::mt19937_64 rng(3);
    for (std::size_t n : {2u, 3u, 17u, 255u, 256u, 257u, 1000u}) {
        const auto xs = random_set(rng, n, 6, 0.5);
        const auto [mu, sigma] = naive_moments(xs);
        const auto fast = fit_gaussian(xs);
        const auto ref = fit_gaussian_reference(xs);
        CHECK(fast.n == n);
        CHECK((fast.mu - mu).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((fast.sigma - sigma).cwiseAbs().maxCoeff() < 1e-11);
        CHECK((ref.sigma - sigma).cwiseAbs().maxCoeff() < 1e-11);
        CHECK(fast.sigma.isApprox(fast.sigma.transpose(), 0.0));
    }
    CHECK_THROWS_AS(fit_gaussian(random_set(rng, 1, 4)), TooFewSamples);
    CHECK_THROWS_AS(fit_gaussian({}), TooFewSamples);
    auto ragged = random_set(rng, 3, 4);
    ragged[1].pop_back();
    CHECK_THROWS_AS(fit_gaussian(ragged), DimensionMismatch);
}

TEST_CASE("blocked fit does not depend on thread count") {
    std::mt19937_64 rng(4);
    const auto xs = random_set(rng, 3000, 12);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto one = fit_gaussian(xs);
    omp_set_num_threads(4);
    const auto four = fit_gaussian(xs);
    omp_set_num_threads(saved);
    CHECK(one.mu == four.mu);
    CHECK(one.sigma == four.sigma);
}

TEST_CASE("accumulator merge equals a single pass") {
    std::mt19937_64 rng(5);
    const auto xs = random_set(rng, 100, 5, 3.0);
    GaussianAccumulator whole(5), left(5), right(5);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        whole.add(xs[i]);
        (i < 37 ? left : right).add(xs[i]);
    }
    left.merge(right);
    const auto a = whole.summary(), b = left.summary();
    CHECK((a.mu - b.mu).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.sigma - b.sigma).cwiseAbs().maxCoeff() < 1e-12);
    GaussianAccumulator lonely(5);
    lonely.add(xs[0]);
    CHECK_THROWS_AS(lonely.summary(), TooFewSamples);
}

TEST_CASE("fid of a set with itself vanishes") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 100; ++t) {
        const std::size_t d = 1 + rng() % 16, n = 2 + rng() % 63;
        const auto fit = fit_gaussian(random_set(rng, n, d));
        CHECK(fid_score(fit, fit).value <= 1e-8);
    }
}

TEST_CASE("fid scalar closed form") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mu(-5, 5), sd(0.01, 4);
    for (int t = 0; t < 1000; ++t) {
        const double mx = mu(rng), my = mu(rng), sx = sd(rng), sy = sd(rng);
        const auto x = GaussianSummary::make(Eigen::VectorXd::Constant(1, mx), Eigen::MatrixXd::Constant(1, 1, sx * sx), 10);
        const auto y = GaussianSummary::make(Eigen::VectorXd::Constant(1, my), Eigen::MatrixXd::Constant(1, 1, sy * sy), 10);
        const double expected = (mx - my) * (mx - my) + (sx - sy) * (sx - sy);
        CHECK(std::fabs(fid_score(x, y).value - expected) <= 1e-9);
    }
}

TEST_CASE("fid with commuting diagonal covariances") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> var(0.05, 9), mean(-2, 2);
    for (int t = 0; t < 100; ++t) {
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 8);
        Eigen::VectorXd mx(d), my(d), vx(d), vy(d);
        double expected = 0;
        for (Eigen::Index i = 0; i < d; ++i) {
            mx[i] = mean(rng), my[i] = mean(rng), vx[i] = var(rng), vy[i] = var(rng);
            expected += (mx[i] - my[i]) * (mx[i] - my[i]) + (std::sqrt(vx[i]) - std::sqrt(vy[i])) * (std::sqrt(vx[i]) - std::sqrt(vy[i]));
        }
        const auto x = GaussianSummary::make(mx, vx.asDiagonal().toDenseMatrix(), 50);
        const auto y = GaussianSummary::make(my, vy.asDiagonal().toDenseMatrix(), 50);
        const auto r = fid_score(x, y);
        CHECK_FALSE(r.ridge_applied);
        CHECK(std::fabs(r.value - expected) <= 1e-8);
    }
}

TEST_CASE("fid is invariant under a shared rotation") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    for (int t = 0; t < 50; ++t) {
        const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng() % 15);
        Eigen::VectorXd mx(d), my(d);
        for (Eigen::Index i = 0; i < d; ++i) mx[i] = g(rng), my[i] = g(rng);
        const auto sx = random_spd(rng, d), sy = random_spd(rng, d);
        const auto q = random_orthogonal(rng, d);
        const auto base = fid_score(GaussianSummary::make(mx, sx, 100), GaussianSummary::make(my, sy, 100)).value;
        const auto rotated = fid_score(GaussianSummary::make(q * mx, q * sx * q.transpose(), 100),
                                       GaussianSummary::make(q * my, q * sy * q.transpose(), 100))
                                 .value;
        CHECK(std::fabs(base - rotated) < 1e-6);
        const auto swapped = fid_score(GaussianSummary::make(my, sy, 100), GaussianSummary::make(mx, sx, 100)).value;
        CHECK(std::fabs(base - swapped) < 1e-8);
        CHECK(base >= 0.0);
    }
}

TEST_CASE("fid ridge only on rank deficiency") {
    std::mt19937_64 rng(10);
    const auto full = fid_score(fit_gaussian(random_set(rng, 200, 4)), fit_gaussian(random_set(rng, 200, 4, 1.0)));
    CHECK_FALSE(full.ridge_applied);
    CHECK(full.ridge_epsilon == 0.0);
    const auto thin = fid_score(fit_gaussian(random_set(rng, 5, 16)), fit_gaussian(random_set(rng, 5, 16, 1.0)));
    CHECK(thin.ridge_applied);
    CHECK(thin.ridge_epsilon > 0.0);
    CHECK(thin.value >= 0.0);
    CHECK(std::isfinite(thin.value));

    const auto a = fit_gaussian(random_set(rng, 10, 3));
    const auto b = fit_gaussian(random_set(rng, 10, 4));
    CHECK_THROWS_AS(fid_score(a, b), DimensionMismatch);
}

TEST_CASE("psd square root") {
    std::mt19937_64 rng(11);
    const auto s = random_spd(rng, 6);
    const auto r = psd_sqrt(s);
    CHECK((r * r - s).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 3);
    z(0, 0) = 1;
    CHECK(rank_deficient(z));
    CHECK_FALSE(rank_deficient(Eigen::MatrixXd::Identity(3, 3)));
}

TEST_CASE("aggregation equals a brute-force group-by") {
    std::mt19937_64 rng(12);
    corpus::Manifest m;
    m.kind = corpus::ManifestKind::Test;
    const auto& all = corpus::all_patterns();
    for (int i = 0; i < 200; ++i) {
        corpus::ImageRecord r;
        r.id = "img" + std::to_string(1000 + (i * 7919) % 200);
        for (auto p : all) {
            if (rng() % 5 == 0) r.patterns.insert(p);
        }
        if (r.patterns.empty()) r.patterns.insert(all[static_cast<std::size_t>(i) % 13]);
        m.records.push_back(r);
    }
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<ScoredItem> items;
    for (const auto& r : m.records) {
        std::optional<double> s;
        if (rng() % 10 != 0) s = u(rng);
        items.push_back({r.id, s});
    }
    std::shuffle(items.begin(), items.end(), rng);

    // Oracle: ascending id order, plain left-to-right sums.
    auto sorted = items;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
    double total = 0;
    std::size_t scored = 0;
    std::map<corpus::Pattern, std::pair<double, std::size_t>> groups;
    for (const auto& it : sorted) {
        if (!it.sim) continue;
        total += *it.sim;
        ++scored;
        for (auto p : m.find(it.image_id)->patterns) {
            groups[p].first += *it.sim;
            ++groups[p].second;
        }
    }

    const auto table = aggregate(items, m);
    CHECK(table.total == 200);
    CHECK(table.scored == scored);
    CHECK(table.failed == 200 - scored);
    CHECK(table.overall_mean == total / static_cast<double>(scored));
    REQUIRE(table.per_pattern.size() == groups.size());
    for (const auto& [p, g] : groups) {
        CHECK(table.per_pattern.at(p).count == g.second);
        CHECK(table.per_pattern.at(p).mean == g.first / static_cast<double>(g.second));
    }

    items.push_back({"nope", 0.5});
    CHECK_THROWS_AS(aggregate(items, m), UnknownImageId);
}

TEST_CASE("ranks and spearman") {
    CHECK(average_ranks(std::vector<double>{10, 30, 20}) == std::vector<double>{1, 3, 2});
    CHECK(average_ranks(std::vector<double>{5, 5, 1, 9}) == std::vector<double>{2.5, 2.5, 1, 4});

    const std::vector<double> a{0.9, 0.8, 0.7, 0.6, 0.5};
    const std::vector<double> b{0.8, 0.9, 0.7, 0.6, 0.5};
    CHECK(spearman(a, b) == 0.9);
    CHECK(spearman(a, a) == 1.0);
    const std::vector<double> rev{0.5, 0.6, 0.7, 0.8, 0.9};
    CHECK(spearman(a, rev) == -1.0);

    // Ties: Pearson of average ranks, computed here directly.
    const std::vector<double> t1{1, 2, 2, 3, 5}, t2{2, 1, 4, 4, 3};
    const auto r1 = average_ranks(t1), r2 = average_ranks(t2);
    double m1 = 0, m2 = 0;
    for (int i = 0; i < 5; ++i) m1 += r1[i] / 5, m2 += r2[i] / 5;
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < 5; ++i) {
        sxy += (r1[i] - m1) * (r2[i] - m2);
        sxx += (r1[i] - m1) * (r1[i] - m1);
        syy += (r2[i] - m2) * (r2[i] - m2);
    }
    CHECK(spearman(t1, t2) == doctest::Approx(sxy / std::sqrt(sxx * syy)).epsilon(1e-14));

    const std::vector<double> withnan{1, std::numeric_limits<double>::quiet_NaN(), 3};
    CHECK(std::isnan(spearman(withnan, std::vector<double>{1, 2, 3})));
}

TEST_CASE("consistency across generators") {
    std::map<std::string, std::vector<ModelScore>> tables;
    tables["g1"] = {{"m1", 0.9, 1.0}, {"m2", 0.8, 2.0}, {"m3", 0.7, 3.0}};
    tables["g2"] = {{"m3", 0.6, 3.5}, {"m1", 0.85, 1.5}, {"m2", 0.75, 2.5}};
    const auto c = consistency(tables);
    CHECK(c.generators == std::vector<std::string>{"g1", "g2"});
    CHECK(c.models == std::vector<std::string>{"m1", "m2", "m3"});
    for (const auto& row : c.sim_rho) {
        for (double v : row) CHECK(v == 1.0);
    }
    CHECK(c.sim_series.at("g2") == std::vector<double>{0.85, 0.75, 0.6});

    auto missing = tables;
    missing["g2"].pop_back();
    CHECK_THROWS_AS(consistency(missing), ModelSetMismatch);
    std::map<std::string, std::vector<ModelScore>> single{{"g1", tables["g1"]}};
    CHECK_THROWS_AS(consistency(single), ModelSetMismatch);
}
