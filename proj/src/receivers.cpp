#include "lsfd/receivers.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace lsfd {

SymbolGrid draw_symbols(int users_per_cell, int num_cells, const Grid& q, Rng& rng) {
  SymbolGrid sym;
  sym.q = q;
  sym.s.resize(users_per_cell, num_cells);
  for (int l = 0; l < num_cells; ++l) {
    for (int k = 0; k < users_per_cell; ++k) sym.s(k, l) = rng.cnormal();
  }
  return sym;
}

CVec uplink_rx(const LargeScaleFading& beta, const ChannelBlock& block,
               const SymbolGrid& symbols, int l) {
  const int L = block.num_cells;
  const int K = block.users_per_cell;
  CVec amp(K * L);
  for (int n = 0; n < L; ++n) {
    for (int m = 0; m < K; ++m) {
      amp[m + K * n] = std::sqrt(beta(l, m, n) * symbols.q(m, n)) * symbols.s(m, n);
    }
  }
  return block.h[l] * amp + block.data_noise.col(l);
}

CMat estimated_channels(const LargeScaleFading& beta, const ChannelBlock& block,
                        const Grid& p, int l) {
  const int K = block.users_per_cell;
  CMat g_hat(block.num_antennas, K);
  for (int k = 0; k < K; ++k) {
    const CVec r = pilot_observation(beta, block, p, k, l);
    g_hat.col(k) = mmse_estimate(r, beta, p, k, l).g_hat;
  }
  return g_hat;
}

CVec matched_filter(const CMat& g_hat_l, const CVec& y_l) {
  return g_hat_l.adjoint() * y_l;
}

CMat zero_forcing_matrix(const CMat& g_hat_l) {
  const int K = static_cast<int>(g_hat_l.cols());
  Vec scale(K);
  for (int k = 0; k < K; ++k) {
    scale[k] = g_hat_l.col(k).norm();
    if (!(scale[k] > 0.0)) {
      throw NumericalError("zero_forcing_matrix: zero estimated channel column");
    }
  }
  // Column equilibration keeps the Gram factorization well scaled when
  // users have very different estimate variances.
  const CMat gs = g_hat_l * scale.cwiseInverse().asDiagonal();
  const CMat gram = gs.adjoint() * gs;
  Eigen::LLT<CMat> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("zero_forcing_matrix: Gram matrix not positive definite");
  }
  const CMat v = gs * llt.solve(CMat::Identity(K, K)) * scale.cwiseInverse().asDiagonal();
  const double residual = (v.adjoint() * g_hat_l - CMat::Identity(K, K)).norm();
  if (!(residual <= 1e-10 * std::sqrt(static_cast<double>(K)))) {
    throw NumericalError("zero_forcing_matrix: pseudoinverse residual " +
                         std::to_string(residual) + " exceeds tolerance");
  }
  return v;
}

CVec zero_forcing_decode(const CMat& v_l, const CVec& y_l) {
  return v_l.adjoint() * y_l;
}

CMat first_stage_grid(const LargeScaleFading& beta, const ChannelBlock& block,
                      const Grid& p, const SymbolGrid& symbols, Receiver receiver) {
  const int L = block.num_cells;
  const int K = block.users_per_cell;
  CMat s_tilde(K, L);
  for (int l = 0; l < L; ++l) {
    const CMat g_hat = estimated_channels(beta, block, p, l);
    const CVec y = uplink_rx(beta, block, symbols, l);
    if (receiver == Receiver::kMatchedFilter) {
      s_tilde.col(l) = matched_filter(g_hat, y);
    } else {
      s_tilde.col(l) = zero_forcing_decode(zero_forcing_matrix(g_hat), y);
    }
  }
  return s_tilde;
}

std::vector<std::vector<TermPowers>> empirical_term_powers(
    const ValidationInstance& instance, const LsfdCombiners& combiners,
    int blocks, Rng& rng) {
  const Receiver receiver = combiners.receiver;
  const std::vector<Mat>& a_hat = combiners.a_hat;
  const int L = instance.num_cells();
  const int K = instance.users_per_cell();
  const int M = instance.num_antennas;
  if (blocks < 1) throw std::invalid_argument("empirical_term_powers: blocks >= 1");

  // Raw controller coefficients realizing the hatted combiners.
  std::vector<Mat> raw(K, Mat(L, L));
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < L; ++l) {
      raw[k].col(l) =
          raw_combiner_from_hatted(a_hat[k].col(l), instance.beta, instance.p, k, receiver);
    }
  }

  struct Acc {
    CVec mean_coeff;   // running sum of per-source coefficients c_n
    CVec cross;        // sum of s_hat * conj(u_n)
    CMat symbol_gram;  // sum of u u^H
    double power = 0.0;
  };
  std::vector<std::vector<Acc>> acc(K, std::vector<Acc>(L));
  for (auto& row : acc) {
    for (auto& a : row) {
      a.mean_coeff = CVec::Zero(L);
      a.cross = CVec::Zero(L);
      a.symbol_gram = CMat::Zero(L, L);
    }
  }

  std::vector<CMat> coeff(L);        // per BS: K x (K*L) receiver-channel products
  std::vector<CMat> own(K);          // per user index: (j, n) same-pilot coefficients
  std::vector<CVec> rest(K);         // per user index: other users + noise, per BS
  for (int k = 0; k < K; ++k) {
    own[k].resize(L, L);
    rest[k].resize(L);
  }

  for (int b = 0; b < blocks; ++b) {
    const ChannelBlock block = draw_channel_block(L, K, M, rng, instance.with_noise);
    const SymbolGrid sym = draw_symbols(K, L, instance.q, rng);

    CVec d(K * L);  // powered symbols
    for (int n = 0; n < L; ++n) {
      for (int m = 0; m < K; ++m) {
        d[m + K * n] = std::sqrt(instance.q(m, n)) * sym.s(m, n);
      }
    }

    for (int j = 0; j < L; ++j) {
      const CMat g_hat = estimated_channels(instance.beta, block, instance.p, j);
      const CMat w = receiver == Receiver::kMatchedFilter ? g_hat : zero_forcing_matrix(g_hat);
      coeff[j] = w.adjoint() * block.h[j];
      for (int n = 0; n < L; ++n) {
        for (int m = 0; m < K; ++m) {
          coeff[j].col(m + K * n) *= std::sqrt(instance.beta(j, m, n));
        }
      }
      const CVec noise = w.adjoint() * block.data_noise.col(j);
      const CVec total = coeff[j] * d;
      for (int k = 0; k < K; ++k) {
        Complex same_pilot = 0.0;
        for (int n = 0; n < L; ++n) {
          const Complex c = coeff[j](k, k + K * n);
          own[k](j, n) = c;
          same_pilot += c * d[k + K * n];
        }
        rest[k][j] = total[k] - same_pilot + noise[k];
      }
    }

    for (int k = 0; k < K; ++k) {
      for (int l = 0; l < L; ++l) {
        const Vec a = raw[k].col(l);
        Acc& slot = acc[k][l];
        Complex s_hat = a.cast<Complex>().dot(rest[k]);
        for (int n = 0; n < L; ++n) {
          Complex c_n = 0.0;
          for (int j = 0; j < L; ++j) c_n += a[j] * own[k](j, n);
          slot.mean_coeff[n] += c_n;
          s_hat += c_n * d[k + K * n];
        }
        slot.power += std::norm(s_hat);
        for (int n = 0; n < L; ++n) {
          const Complex u_n = d[k + K * n];
          slot.cross[n] += s_hat * std::conj(u_n);
          for (int m = 0; m < L; ++m) {
            slot.symbol_gram(n, m) += u_n * std::conj(d[k + K * m]);
          }
        }
      }
    }
  }

  // Fold to the sinr_terms scale: matched filtering measures the raw
  // variances at M times the theorem scale, zero forcing at 1/M.
  const double fold = receiver == Receiver::kMatchedFilter
                          ? 1.0 / static_cast<double>(M)
                          : static_cast<double>(M);
  std::vector<std::vector<TermPowers>> result(K, std::vector<TermPowers>(L));
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < L; ++l) {
      const Acc& slot = acc[k][l];
      const CVec mean = slot.mean_coeff / static_cast<double>(blocks);
      TermPowers t;
      for (int n = 0; n < L; ++n) {
        const double power = std::norm(mean[n]) * instance.q(k, n);
        if (n == l) {
          t.useful = power;
        } else {
          t.pilot += power;
        }
      }
      const Complex fitted = (mean.adjoint() * slot.cross)(0);
      const Complex quad = (mean.transpose() * slot.symbol_gram * mean.conjugate())(0);
      t.other = (slot.power - 2.0 * fitted.real() + quad.real()) / blocks;
      result[k][l] = {t.useful * fold, t.pilot * fold, t.other * fold};
    }
  }
  return result;
}

}  // namespace lsfd
