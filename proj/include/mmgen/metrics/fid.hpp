#pragma once

#include "mmgen/metrics/gaussian.hpp"

namespace mmgen::metrics {

inline constexpr double kRankDeficiencyRatio = 1e-10;
inline constexpr double kRidgeScale = 1e-6;

struct FidResult {
    double value = 0.0;          // >= 0
    double trace_sqrt = 0.0;     // Tr((Sx Sy)^{1/2}) after any ridge
    bool ridge_applied = false;
    double ridge_epsilon = 0.0;
};

/// Frechet distance between two Gaussian fits:
///   |mu_x - mu_y|^2 + Tr(Sx + Sy - 2 (Sx Sy)^{1/2}).
/// The trace of the square root is Tr((Sx^{1/2} Sy Sx^{1/2})^{1/2}), taken as
/// the sum of singular values of Sy^{1/2} Sx^{1/2} (PSD roots with negative
/// roundoff eigenvalues clipped to zero). If either covariance is rank deficient (min eigenvalue
/// below 1e-10 * max), eps*I with eps = 1e-6 * mean diagonal is added to both.
FidResult fid_score(const GaussianSummary& x, const GaussianSummary& y);

/// Tr((A B)^{1/2}) for symmetric PSD A, B (no ridge).
double trace_sqrt_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Symmetric PSD square root; negative eigenvalues clipped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a);

bool rank_deficient(const Eigen::MatrixXd& sym);

} // namespace mmgen::metrics
