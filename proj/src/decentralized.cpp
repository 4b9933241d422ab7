#include "lsfd/decentralized.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace lsfd {

Vec restrict_to(const Vec& full, const std::vector<int>& omega) {
  Vec out(static_cast<int>(omega.size()));
  for (std::size_t i = 0; i < omega.size(); ++i) out[static_cast<int>(i)] = full[omega[i]];
  return out;
}

Vec embed_from(const Vec& restricted, const std::vector<int>& omega, int num_cells) {
  Vec out = Vec::Zero(num_cells);
  for (std::size_t i = 0; i < omega.size(); ++i) out[omega[i]] = restricted[static_cast<int>(i)];
  return out;
}

CombinerResult optimal_combiner_dec(const Mat& b_k, const Vec& p_k, const Vec& q_k,
                                    int num_antennas, const Vec& lambda_k,
                                    const std::vector<int>& omega, int l) {
  const int L = static_cast<int>(b_k.rows());
  const int dim = static_cast<int>(omega.size());
  Mat c = restrict_to(lambda_k, omega).asDiagonal();
  Mat b_res(dim, L);
  for (int n = 0; n < L; ++n) b_res.col(n) = restrict_to(b_k.col(n), omega);
  for (int n = 0; n < L; ++n) {
    if (n == l) continue;
    const double w = p_k[n] * q_k[n] * num_antennas;
    if (w > 0.0) c.selfadjointView<Eigen::Lower>().rankUpdate(b_res.col(n), w);
  }
  CombinerResult result;
  result.a_hat = c.selfadjointView<Eigen::Lower>().llt().solve(b_res.col(l));
  result.sinr = p_k[l] * q_k[l] * num_antennas * b_res.col(l).dot(result.a_hat);
  return result;
}

SecondOrderStats closed_form_stats(const LargeScaleFading& beta, const Grid& p,
                                   const Grid& q, int num_antennas,
                                   const std::vector<int>& omega, int k, int l) {
  const int L = beta.num_cells();
  const int dim = static_cast<int>(omega.size());
  const double m = num_antennas;

  Vec d(dim);
  for (int i = 0; i < dim; ++i) d[i] = eta(beta, p, k, omega[static_cast<std::size_t>(i)]);
  const LambdaGrid lambda = lambda_mf(beta, p, q);

  Mat cov = Mat::Zero(dim, dim);
  for (int n = 0; n < L; ++n) {
    const Vec b_res = restrict_to(beta.by_user[k].col(n), omega);
    const Vec scaled = d.cwiseProduct(b_res);
    cov += (m * m * p(k, n) * q(k, n)) * scaled * scaled.transpose();
  }
  const Vec lam_res = restrict_to(lambda.values.col(k), omega);
  cov += m * d.cwiseProduct(lam_res.cwiseProduct(d)).asDiagonal().toDenseMatrix();

  SecondOrderStats stats;
  stats.cov = cov.cast<Complex>();
  stats.cross = (m * std::sqrt(p(k, l) * q(k, l)) *
                 d.cwiseProduct(restrict_to(beta.by_user[k].col(l), omega)))
                    .cast<Complex>();
  stats.sample_count = 0;
  return stats;
}

SecondOrderStats StatsAccumulator::finalize() const {
  if (count_ == 0) throw std::invalid_argument("StatsAccumulator: no samples");
  SecondOrderStats stats;
  const double n = static_cast<double>(count_);
  stats.cov = (cov_ + cov_.adjoint()) / (2.0 * n);
  stats.cross = cross_ / n;
  stats.sample_count = count_;
  return stats;
}

CVec mmse_combiner(const SecondOrderStats& stats) {
  const int dim = static_cast<int>(stats.cov.rows());
  const double trace = stats.cov.real().trace();
  if (!(trace > 0.0) || !std::isfinite(trace)) {
    throw NumericalError("mmse_combiner: degenerate covariance");
  }
  const CVec direct = stats.cov.ldlt().solve(stats.cross);
  if (direct.allFinite() &&
      (stats.cov * direct - stats.cross).norm() <= 1e-6 * stats.cross.norm()) {
    return direct;
  }
  // Rank-deficient sample covariance: retry with diagonal shrinkage.
  CMat cov = stats.cov;
  cov.diagonal().array() += 1e-9 * trace / dim;
  const CVec shrunk = cov.ldlt().solve(stats.cross);
  if (!shrunk.allFinite()) {
    throw NumericalError("mmse_combiner: covariance singular (more samples needed)");
  }
  return shrunk;
}

double sinr_from_stats(const SecondOrderStats& stats, const CVec& a) {
  const Complex useful = a.dot(stats.cross);
  const double total = std::real(a.dot(stats.cov * a));
  const double signal = std::norm(useful);
  const double residual = total - signal;
  if (residual <= 0.0) return std::numeric_limits<double>::infinity();
  return signal / residual;
}

FirstStageMoments accumulate_first_stage_moments(const LargeScaleFading& beta,
                                                 const Grid& p, const Grid& q,
                                                 int num_antennas, Receiver receiver,
                                                 int blocks, Rng& rng) {
  const int L = beta.num_cells();
  const int K = beta.users_per_cell();
  FirstStageMoments moments;
  moments.blocks = blocks;
  moments.cov.assign(K, CMat::Zero(L, L));
  moments.cross.assign(K, CMat::Zero(L, L));
  for (int b = 0; b < blocks; ++b) {
    const ChannelBlock block = draw_channel_block(L, K, num_antennas, rng);
    const SymbolGrid sym = draw_symbols(K, L, q, rng);
    const CMat s_tilde = first_stage_grid(beta, block, p, sym, receiver);
    for (int k = 0; k < K; ++k) {
      const CVec row = s_tilde.row(k).transpose();
      moments.cov[k] += row * row.adjoint();
      moments.cross[k] += row * sym.s.row(k).conjugate();
    }
  }
  return moments;
}

SecondOrderStats restrict_stats(const FirstStageMoments& moments,
                                const std::vector<int>& omega, int k, int l) {
  const int dim = static_cast<int>(omega.size());
  const double n = static_cast<double>(moments.blocks);
  SecondOrderStats stats;
  stats.cov.resize(dim, dim);
  stats.cross.resize(dim);
  for (int i = 0; i < dim; ++i) {
    stats.cross[i] = moments.cross[k](omega[static_cast<std::size_t>(i)], l) / n;
    for (int j = 0; j < dim; ++j) {
      stats.cov(i, j) = moments.cov[k](omega[static_cast<std::size_t>(i)],
                                       omega[static_cast<std::size_t>(j)]) /
                        n;
    }
  }
  stats.cov = ((stats.cov + stats.cov.adjoint()) / 2.0).eval();
  stats.sample_count = moments.blocks;
  return stats;
}

namespace {

Grid empirical_sinr_grid(const DecScenario& scenario, const Grid& q, int blocks,
                         Rng& rng) {
  const LargeScaleFading& beta = *scenario.beta;
  const int L = beta.num_cells();
  const int K = beta.users_per_cell();
  const FirstStageMoments moments = accumulate_first_stage_moments(
      beta, scenario.p, q, scenario.num_antennas, scenario.receiver, blocks, rng);
  Grid sinr(K, L);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < L; ++l) {
      const SecondOrderStats stats =
          restrict_stats(moments, scenario.omega[static_cast<std::size_t>(l)], k, l);
      const CVec a = mmse_combiner(stats);
      sinr(k, l) = sinr_from_stats(stats, a);
    }
  }
  return sinr;
}

}  // namespace

Grid decentralized_sinr_grid(const DecScenario& scenario, const Grid& q,
                             SinrEvaluation mode, int blocks, Rng* rng) {
  const LargeScaleFading& beta = *scenario.beta;
  const int L = beta.num_cells();
  const int K = beta.users_per_cell();
  if (mode == SinrEvaluation::kEmpirical) {
    if (rng == nullptr) {
      throw std::invalid_argument("decentralized_sinr_grid: empirical mode needs an rng");
    }
    return empirical_sinr_grid(scenario, q, blocks, *rng);
  }
  const LambdaGrid lambda =
      lambda_grid(beta, scenario.p, q, scenario.num_antennas, scenario.receiver);
  Grid sinr(K, L);
  for (int k = 0; k < K; ++k) {
    const Vec p_k = scenario.p.row(k).matrix().transpose();
    const Vec q_k = q.row(k).matrix().transpose();
    for (int l = 0; l < L; ++l) {
      sinr(k, l) = optimal_combiner_dec(beta.by_user[k], p_k, q_k, scenario.num_antennas,
                                        lambda.values.col(k),
                                        scenario.omega[static_cast<std::size_t>(l)], l)
                       .sinr;
    }
  }
  return sinr;
}

DecPowerResult decentralized_power_control(const DecScenario& scenario, double gamma,
                                           double epsilon, int max_rounds,
                                           SinrEvaluation mode, int blocks, Rng* rng) {
  if (gamma <= 0.0) throw std::domain_error("decentralized_power_control: gamma > 0");
  const int L = scenario.beta->num_cells();
  const int K = scenario.beta->users_per_cell();

  DecPowerResult result;
  Grid q = Grid::Constant(K, L, scenario.q_max);
  result.q_trace.push_back(q);
  Grid sinr = decentralized_sinr_grid(scenario, q, mode, blocks, rng);
  for (int round = 1; round <= max_rounds; ++round) {
    result.rounds = round;
    if ((sinr - gamma).abs().maxCoeff() < epsilon) {
      result.converged = true;
      break;
    }
    Grid next(K, L);
    for (int l = 0; l < L; ++l) {
      for (int k = 0; k < K; ++k) {
        next(k, l) = distributed_power_update(q(k, l), sinr(k, l), gamma, scenario.q_max);
      }
    }
    const double stall = (next - q).abs().maxCoeff() / std::max(scenario.q_max, 1e-300);
    q = next;
    result.q_trace.push_back(q);
    sinr = decentralized_sinr_grid(scenario, q, mode, blocks, rng);
    if (stall < 1e-13) break;
  }
  result.sinr = sinr;
  result.converged = result.converged || (sinr - gamma).abs().maxCoeff() < epsilon;
  return result;
}

}  // namespace lsfd
