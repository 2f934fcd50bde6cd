#pragma once

#include "mmgen/metrics/sim.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace mmgen::metrics {

/// Mean and unbiased (n-1) covariance of a sample set.
struct GaussianSummary {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    std::size_t n = 0;

    /// Symmetrizes `sigma`; throws TooFewSamples if n < 2 and
    /// DimensionMismatch if shapes disagree.
    static GaussianSummary make(Eigen::VectorXd mu, Eigen::MatrixXd sigma, std::size_t n);
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(mu.size()); }
};

/// Streaming mean / co-moment accumulator. Partial accumulators combine with
/// the pairwise update of Chan et al., so blocks can be filled independently.
class GaussianAccumulator {
  public:
    explicit GaussianAccumulator(std::size_t dim);

    void add(std::span<const double> x);
    /// Adds a block of samples (one per row) using a centered two-pass
    /// product inside the block, then merges it.
    void add_block(const Eigen::MatrixXd& rows);
    void merge(const GaussianAccumulator& other);

    [[nodiscard]] std::size_t count() const noexcept { return n_; }
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
    [[nodiscard]] GaussianSummary summary() const;

  private:
    std::size_t n_ = 0;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd comoment_; // sum of (x - mean)(x - mean)^T
};

inline constexpr std::size_t kGaussianBlockRows = 256;

/// Blocked fit: fixed-size row blocks are reduced in parallel (OpenMP) and
/// merged in a fixed pairwise tree, so the result does not depend on the
/// thread count.
GaussianSummary fit_gaussian(const std::vector<Embedding>& samples);

/// Serial two-pass reference.
GaussianSummary fit_gaussian_reference(const std::vector<Embedding>& samples);

} // namespace mmgen::metrics
