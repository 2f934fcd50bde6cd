#include "mmgen/metrics/fid.hpp"

#include "mmgen/common/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace mmgen::metrics {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    const Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

bool rank_deficient(const Eigen::MatrixXd& sym) {
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues();
    const double hi = ev.maxCoeff();
    return hi <= 0.0 || ev.minCoeff() < kRankDeficiencyRatio * hi;
}

double trace_sqrt_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    // Eigenvalues of (A^1/2 B A^1/2)^1/2 are the singular values of
    // B^1/2 A^1/2; the SVD keeps small ones accurate instead of taking
    // square roots of roundoff.
    const Eigen::MatrixXd m = psd_sqrt(b) * psd_sqrt(a);
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues().sum();
}

FidResult fid_score(const GaussianSummary& x, const GaussianSummary& y) {
    if (x.dim() != y.dim()) {
        throw DimensionMismatch("fid_score: dimensions " + std::to_string(x.dim()) + " and " +
                                std::to_string(y.dim()));
    }
    FidResult r;
    Eigen::MatrixXd sx = x.sigma;
    Eigen::MatrixXd sy = y.sigma;
    if (rank_deficient(sx) || rank_deficient(sy)) {
        const double mean_diag = (sx.trace() + sy.trace()) / (2.0 * static_cast<double>(x.dim()));
        r.ridge_applied = true;
        r.ridge_epsilon = kRidgeScale * mean_diag;
        sx.diagonal().array() += r.ridge_epsilon;
        sy.diagonal().array() += r.ridge_epsilon;
    }
    r.trace_sqrt = trace_sqrt_product(sx, sy);
    const double mean_term = (x.mu - y.mu).squaredNorm();
    const double value = mean_term + sx.trace() + sy.trace() - 2.0 * r.trace_sqrt;
    r.value = std::max(0.0, value);
    return r;
}

} // namespace mmgen::metrics
