#include "lsfd/combining.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <limits>

namespace lsfd {

LambdaGrid lambda_mf(const LargeScaleFading& beta, const Grid& p, const Grid& q) {
  const int L = beta.num_cells();
  const int K = beta.users_per_cell();
  LambdaGrid grid;
  grid.receiver = Receiver::kMatchedFilter;
  grid.values.resize(L, K);
  for (int j = 0; j < L; ++j) {
    double data_sum = 1.0;
    for (int n = 0; n < L; ++n) {
      for (int m = 0; m < K; ++m) data_sum += beta(j, m, n) * q(m, n);
    }
    for (int k = 0; k < K; ++k) {
      double train_sum = 1.0;
      for (int i = 0; i < L; ++i) train_sum += beta(j, k, i) * p(k, i);
      grid.values(j, k) = train_sum * data_sum;
    }
  }
  return grid;
}

LambdaGrid lambda_zf(const LargeScaleFading& beta, const Grid& p, const Grid& q,
                     int num_antennas, int users_per_cell) {
  const int L = beta.num_cells();
  const int K = beta.users_per_cell();
  if (num_antennas <= users_per_cell) {
    throw std::domain_error("lambda_zf: zero forcing needs M > K");
  }
  LambdaGrid grid;
  grid.receiver = Receiver::kZeroForcing;
  grid.values.resize(L, K);
  const double front = static_cast<double>(num_antennas) / (num_antennas - users_per_cell);
  for (int j = 0; j < L; ++j) {
    // Residual data power after estimation: the bracket is the error
    // variance of the MMSE split for user (m, n) seen from BS j.
    double resid_sum = 1.0;
    for (int n = 0; n < L; ++n) {
      for (int m = 0; m < K; ++m) {
        double train = 1.0;
        for (int i = 0; i < L; ++i) train += beta(j, m, i) * p(m, i);
        const double b = beta(j, m, n);
        resid_sum += (b - b * b * p(m, n) / train) * q(m, n);
      }
    }
    for (int k = 0; k < K; ++k) {
      double train_sum = 1.0;
      for (int i = 0; i < L; ++i) train_sum += beta(j, k, i) * p(k, i);
      grid.values(j, k) = front * train_sum * resid_sum;
    }
  }
  return grid;
}

LambdaGrid lambda_grid(const LargeScaleFading& beta, const Grid& p, const Grid& q,
                       int num_antennas, Receiver receiver) {
  if (receiver == Receiver::kMatchedFilter) return lambda_mf(beta, p, q);
  return lambda_zf(beta, p, q, num_antennas, beta.users_per_cell());
}

double sinr_mf(const Vec& a_hat, const LargeScaleFading& beta, const Grid& p,
               const Grid& q, int num_antennas, int k, int l) {
  const LambdaGrid lambda = lambda_mf(beta, p, q);
  return sinr_hatted(a_hat, beta.by_user[k], p.row(k).matrix().transpose(),
                     q.row(k).matrix().transpose(), num_antennas,
                     lambda.values.col(k), l);
}

double sinr_zf(const Vec& a_hat, const LargeScaleFading& beta, const Grid& p,
               const Grid& q, int num_antennas, int users_per_cell, int k, int l) {
  const LambdaGrid lambda = lambda_zf(beta, p, q, num_antennas, users_per_cell);
  return sinr_hatted(a_hat, beta.by_user[k], p.row(k).matrix().transpose(),
                     q.row(k).matrix().transpose(), num_antennas,
                     lambda.values.col(k), l);
}

CombinerResult optimal_combiner(const Mat& b_k, const Vec& p_k, const Vec& q_k,
                                int num_antennas, const Vec& lambda_k, int l) {
  const int L = static_cast<int>(b_k.rows());
  Mat c = lambda_k.asDiagonal();
  for (int n = 0; n < L; ++n) {
    if (n == l) continue;
    const double w = p_k[n] * q_k[n] * num_antennas;
    if (w > 0.0) c.selfadjointView<Eigen::Lower>().rankUpdate(b_k.col(n), w);
  }
  const Vec b_l = b_k.col(l);
  CombinerResult result;
  result.a_hat = c.selfadjointView<Eigen::Lower>().llt().solve(b_l);
  result.sinr = p_k[l] * q_k[l] * num_antennas * b_l.dot(result.a_hat);
  return result;
}

Mat zf_lsfd_combiners(const Mat& b_k) {
  Eigen::PartialPivLU<Mat> lu(b_k.transpose());
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw NumericalError("zf_lsfd_combiners: B_k numerically singular, condition ~ " +
                         std::to_string(rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity()));
  }
  return lu.solve(Mat::Identity(b_k.rows(), b_k.cols()));
}

double sinr_limit_infinite_m(const LargeScaleFading& beta, const Grid& q,
                             int k, int j) {
  const int L = beta.num_cells();
  const double own = beta(j, k, j);
  double interference = 0.0;
  for (int l = 0; l < L; ++l) {
    if (l == j) continue;
    interference += q(k, l) * beta(j, k, l) * beta(j, k, l);
  }
  if (interference <= 0.0) return std::numeric_limits<double>::infinity();
  return q(k, j) * own * own / interference;
}

double rate_from_sinr(double sinr, double overhead) {
  if (sinr < 0.0) throw std::domain_error("rate_from_sinr: negative SINR");
  return overhead * std::log2(1.0 + sinr);
}

Vec raw_combiner_from_hatted(const Vec& a_hat, const LargeScaleFading& beta,
                             const Grid& p, int k, Receiver receiver) {
  const int L = beta.num_cells();
  Vec raw(L);
  for (int j = 0; j < L; ++j) {
    const double scale = beta(j, k, j) * std::sqrt(p(k, j));
    if (scale <= 0.0) {
      throw std::domain_error("raw_combiner_from_hatted: needs beta_jkj p_kj > 0");
    }
    if (receiver == Receiver::kMatchedFilter) {
      double denom = 1.0;
      for (int i = 0; i < L; ++i) denom += beta(j, k, i) * p(k, i);
      raw[j] = a_hat[j] * denom / scale;
    } else {
      raw[j] = a_hat[j] * scale;
    }
  }
  return raw;
}

}  // namespace lsfd
