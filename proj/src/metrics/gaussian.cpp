#include "mmgen/metrics/gaussian.hpp"

#include "mmgen/common/error.hpp"

namespace mmgen::metrics {

namespace {

std::size_t check_samples(const std::vector<Embedding>& samples) {
    if (samples.size() < 2) {
        throw TooFewSamples("need at least 2 samples, got " + std::to_string(samples.size()));
    }
    const std::size_t d = samples.front().size();
    if (d == 0) throw DimensionMismatch("embeddings must have positive dimension");
    for (const auto& s : samples) {
        if (s.size() != d) {
            throw DimensionMismatch("sample of dimension " + std::to_string(s.size()) + " in a set of dimension " +
                                    std::to_string(d));
        }
    }
    return d;
}

} // namespace

GaussianSummary GaussianSummary::make(Eigen::VectorXd mu, Eigen::MatrixXd sigma, std::size_t n) {
    if (n < 2) throw TooFewSamples("a Gaussian summary needs n >= 2");
    if (sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
        throw DimensionMismatch("covariance shape does not match mean");
    }
    GaussianSummary g;
    g.mu = std::move(mu);
    g.sigma = 0.5 * (sigma + sigma.transpose());
    g.n = n;
    return g;
}

GaussianAccumulator::GaussianAccumulator(std::size_t dim)
    : mean_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))),
      comoment_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))) {}

void GaussianAccumulator::add(std::span<const double> x) {
    if (x.size() != dim()) throw DimensionMismatch("accumulator dimension mismatch");
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    ++n_;
    const Eigen::VectorXd delta = v - mean_;
    mean_ += delta / static_cast<double>(n_);
    comoment_.noalias() += delta * (v - mean_).transpose();
}

void GaussianAccumulator::add_block(const Eigen::MatrixXd& rows) {
    if (rows.rows() == 0) return;
    if (static_cast<std::size_t>(rows.cols()) != dim()) throw DimensionMismatch("accumulator dimension mismatch");
    GaussianAccumulator block(dim());
    block.n_ = static_cast<std::size_t>(rows.rows());
    block.mean_ = rows.colwise().mean().transpose();
    const Eigen::MatrixXd centered = rows.rowwise() - block.mean_.transpose();
    block.comoment_.noalias() = centered.transpose() * centered;
    merge(block);
}

void GaussianAccumulator::merge(const GaussianAccumulator& other) {
    if (other.dim() != dim()) throw DimensionMismatch("accumulator dimension mismatch");
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double n = na + nb;
    const Eigen::VectorXd delta = other.mean_ - mean_;
    mean_ += delta * (nb / n);
    comoment_ += other.comoment_;
    comoment_.noalias() += (na * nb / n) * (delta * delta.transpose());
    n_ += other.n_;
}

GaussianSummary GaussianAccumulator::summary() const {
    if (n_ < 2) throw TooFewSamples("need at least 2 samples, got " + std::to_string(n_));
    return GaussianSummary::make(mean_, comoment_ / static_cast<double>(n_ - 1), n_);
}

GaussianSummary fit_gaussian(const std::vector<Embedding>& samples) {
    const std::size_t d = check_samples(samples);
    const std::size_t n = samples.size();
    const std::size_t blocks = (n + kGaussianBlockRows - 1) / kGaussianBlockRows;
    std::vector<GaussianAccumulator> partial(blocks, GaussianAccumulator(d));

#pragma omp parallel for schedule(static)
    for (long long b = 0; b < static_cast<long long>(blocks); ++b) {
        const std::size_t begin = static_cast<std::size_t>(b) * kGaussianBlockRows;
        const std::size_t end = std::min(n, begin + kGaussianBlockRows);
        Eigen::MatrixXd rows(static_cast<Eigen::Index>(end - begin), static_cast<Eigen::Index>(d));
        for (std::size_t i = begin; i < end; ++i) {
            rows.row(static_cast<Eigen::Index>(i - begin)) =
                Eigen::Map<const Eigen::RowVectorXd>(samples[i].data(), static_cast<Eigen::Index>(d));
        }
        partial[static_cast<std::size_t>(b)].add_block(rows);
    }

    // Fixed pairwise tree: (0,1) (2,3) ... then the next level.
    for (std::size_t stride = 1; stride < blocks; stride *= 2) {
        for (std::size_t i = 0; i + stride < blocks; i += 2 * stride) partial[i].merge(partial[i + stride]);
    }
    return partial.front().summary();
}

GaussianSummary fit_gaussian_reference(const std::vector<Embedding>& samples) {
    const std::size_t d = check_samples(samples);
    const std::size_t n = samples.size();
    std::vector<double> mu(d, 0.0);
    for (const auto& s : samples) {
        for (std::size_t k = 0; k < d; ++k) mu[k] += s[k];
    }
    for (auto& m : mu) m /= static_cast<double>(n);

    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < d; ++i) {
            const double di = s[i] - mu[i];
            for (std::size_t j = 0; j < d; ++j) {
                sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += di * (s[j] - mu[j]);
            }
        }
    }
    sigma /= static_cast<double>(n - 1);
    return GaussianSummary::make(Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(d)), sigma, n);
}

} // namespace mmgen::metrics
