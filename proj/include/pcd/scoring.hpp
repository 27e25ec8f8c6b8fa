#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pcd/graph.hpp"
#include "pcd/warnings.hpp"

namespace pcd {

namespace detail {

// Conditional variance of node j given the parent set, from a covariance
// matrix:  S_jj - S_jP S_PP^{-1} S_Pj.  A rank-deficient parent block falls
// back to a small ridge so scoring never aborts mid-search.
inline double conditional_variance(const Eigen::MatrixXd& S, NodeId j,
                                   const std::vector<NodeId>& parents) {
    if (parents.empty()) return S(j, j);
    const int k = static_cast<int>(parents.size());
    Eigen::MatrixXd spp(k, k);
    Eigen::VectorXd spj(k);
    for (int a = 0; a < k; ++a) {
        spj(a) = S(parents[static_cast<size_t>(a)], j);
        for (int b = 0; b < k; ++b)
            spp(a, b) = S(parents[static_cast<size_t>(a)], parents[static_cast<size_t>(b)]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(spp);
    bool degenerate = llt.info() != Eigen::Success;
    if (!degenerate) {
        // Exactly collinear parents can slip through the factorization on
        // rounding fuzz with a near-zero pivot; treat a pivot collapse as
        // rank deficiency too.  The diagonal of L holds the pivot roots.
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (int a = 0; a < k; ++a) {
            double d = llt.matrixLLT()(a, a);
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        degenerate = !(lo > hi * 1e-6);
    }
    if (degenerate) {
        warn("singular parent covariance while scoring node " + std::to_string(j) +
             "; applying ridge");
        llt.compute(spp + 1e-8 * Eigen::MatrixXd::Identity(k, k));
    }
    return S(j, j) - spj.dot(llt.solve(spj));
}

}  // namespace detail

/**
 * Profile Gaussian log-likelihood of the regression of node j on its parents,
 * computed from the sample covariance S (1/(n-1) normalization) and the
 * sample count n:
 *     sigma2_hat = (n-1)/n * (S_jj - S_jP S_PP^{-1} S_Pj)
 *     l          = -(n/2) (log sigma2_hat + 1).
 * The additive normal constant is dropped; it cancels in every comparison of
 * structures over the same nodes.  A vanishing residual is floored so the
 * value stays finite.
 */
inline double family_loglik(const Eigen::MatrixXd& S, int n, NodeId j,
                            const std::vector<NodeId>& parents) {
    double cond_var = detail::conditional_variance(S, j, parents);
    double sigma2 = cond_var * static_cast<double>(n - 1) / static_cast<double>(n);
    if (sigma2 < 1e-12) sigma2 = 1e-12;
    return -0.5 * static_cast<double>(n) * (std::log(sigma2) + 1.0);
}

// BIC family score: log-likelihood minus (|parents| + 1)/2 * log n, the extra
// parameter being the residual variance.
inline double family_bic(const Eigen::MatrixXd& S, int n, NodeId j,
                         const std::vector<NodeId>& parents) {
    return family_loglik(S, n, j, parents) -
           0.5 * static_cast<double>(parents.size() + 1) * std::log(static_cast<double>(n));
}

}  // namespace pcd
