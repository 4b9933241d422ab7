#pragma once

#include "lsfd/channel.hpp"
#include "lsfd/types.hpp"

#include <vector>

namespace lsfd {

/// Noise-and-interference factors lambda_jk, one column per user index
/// (L x K). The grid carries the receiver kind it was built for; the
/// zero-forcing variant folds the M/(M-K) factor so a single SINR
/// evaluator serves both receivers.
struct LambdaGrid {
  Mat values;  // (j, k)
  Receiver receiver = Receiver::kMatchedFilter;
};

LambdaGrid lambda_mf(const LargeScaleFading& beta, const Grid& p, const Grid& q);
LambdaGrid lambda_zf(const LargeScaleFading& beta, const Grid& p, const Grid& q,
                     int num_antennas, int users_per_cell);
LambdaGrid lambda_grid(const LargeScaleFading& beta, const Grid& p, const Grid& q,
                       int num_antennas, Receiver receiver);

/// Second-stage combining matrices in hatted coordinates: a_hat[k] is
/// L x L with column l = a_hat_kl.
struct LsfdCombiners {
  std::vector<Mat> a_hat;
  Receiver receiver = Receiver::kMatchedFilter;
};

struct SinrTerms {
  double useful = 0.0;
  double pilot = 0.0;
  double other = 0.0;

  double sinr() const {
    const double den = pilot + other;
    return den > 0.0 ? useful / den : 0.0;
  }
};

/// Numerator and denominator terms of the closed-form SINR for a hatted
/// combiner column: useful = |a^H b_l|^2 p_kl q_kl M, pilot the matching
/// sum over n != l, other = sum_j |a_j|^2 lambda_jk. Identical structure
/// for both receivers once lambda carries the receiver kind.
template <typename Derived>
SinrTerms sinr_terms(const Eigen::MatrixBase<Derived>& a_hat, const Mat& b_k,
                     const Vec& p_k, const Vec& q_k, int num_antennas,
                     const Vec& lambda_k, int l) {
  const int L = static_cast<int>(b_k.rows());
  SinrTerms t;
  for (int n = 0; n < L; ++n) {
    const double cross = static_cast<double>(std::norm(a_hat.dot(b_k.col(n).template cast<typename Derived::Scalar>())));
    const double power = cross * p_k[n] * q_k[n] * num_antennas;
    if (n == l) {
      t.useful = power;
    } else {
      t.pilot += power;
    }
  }
  for (int j = 0; j < L; ++j) {
    t.other += std::norm(a_hat[j]) * lambda_k[j];
  }
  return t;
}

/// Closed-form SINR of Theorems 2 and 4 for an arbitrary combiner.
/// Returns 0 when every power is zero.
template <typename Derived>
double sinr_hatted(const Eigen::MatrixBase<Derived>& a_hat, const Mat& b_k,
                   const Vec& p_k, const Vec& q_k, int num_antennas,
                   const Vec& lambda_k, int l) {
  return sinr_terms(a_hat, b_k, p_k, q_k, num_antennas, lambda_k, l).sinr();
}

/// Convenience entry points that build lambda internally.
double sinr_mf(const Vec& a_hat, const LargeScaleFading& beta, const Grid& p,
               const Grid& q, int num_antennas, int k, int l);
double sinr_zf(const Vec& a_hat, const LargeScaleFading& beta, const Grid& p,
               const Grid& q, int num_antennas, int users_per_cell, int k, int l);

struct CombinerResult {
  Vec a_hat;
  double sinr = 0.0;
};

/// Optimal hatted combiner and its SINR: the maximizer of the
/// generalized Rayleigh quotient, a_hat = C^-1 b_kl with
/// C = sum_{n != l} b_kn b_kn^T p q M + diag(lambda_k).
CombinerResult optimal_combiner(const Mat& b_k, const Vec& p_k, const Vec& q_k,
                                int num_antennas, const Vec& lambda_k, int l);

/// Zero-forcing LSFD: hatted combiners with A_hat^T B_k = I, so the
/// pilot-contamination term cancels exactly. Throws NumericalError with
/// a condition diagnostic when B_k is numerically singular.
Mat zf_lsfd_combiners(const Mat& b_k);

/// Infinite-M SINR limit (matched filtering, p = q): own-channel power
/// over the same-pilot interference power. +infinity for L = 1 or a
/// vanishing interference sum.
double sinr_limit_infinite_m(const LargeScaleFading& beta, const Grid& q,
                             int k, int j);

/// log2(1 + sinr), optionally scaled by a pilot-overhead multiplier.
double rate_from_sinr(double sinr, double overhead = 1.0);

/// Inverse of the hatted rescaling: the raw controller coefficients a
/// that realize a hatted column for the given receiver.
Vec raw_combiner_from_hatted(const Vec& a_hat, const LargeScaleFading& beta,
                             const Grid& p, int k, Receiver receiver);

}  // namespace lsfd
