#include "lsfd/channel.hpp"

#include <cmath>

namespace lsfd {

double pathloss_linear(double d_km, double shadow_db, double noise_power_dbm) {
  if (d_km <= 0.0) {
    throw std::domain_error("pathloss_linear: distance must be positive");
  }
  const double gain_db = -127.8 - 35.0 * std::log10(d_km) + shadow_db - noise_power_dbm;
  return std::pow(10.0, gain_db / 10.0);
}

LargeScaleFading sample_large_scale(const Topology& topo, const UserDrop& drop,
                                    const NetworkConfig& cfg, Rng& rng) {
  const int L = topo.num_cells();
  const int K = drop.users_per_cell;
  LargeScaleFading beta;
  beta.by_user.assign(K, Mat(L, L));
  for (int j = 0; j < L; ++j) {
    for (int l = 0; l < L; ++l) {
      for (int k = 0; k < K; ++k) {
        const double d = wrapped_distance(topo.bs_positions.col(j), drop.user(k, l), topo);
        const double shadow = cfg.shadow_std_db * rng.normal();
        beta.by_user[k](j, l) = pathloss_linear(d, shadow, cfg.noise_power_dbm);
      }
    }
  }
  return beta;
}

ChannelBlock draw_channel_block(int num_cells, int users_per_cell,
                                int num_antennas, Rng& rng, bool with_noise) {
  ChannelBlock block;
  block.num_cells = num_cells;
  block.users_per_cell = users_per_cell;
  block.num_antennas = num_antennas;
  block.with_noise = with_noise;
  block.h.assign(num_cells, CMat(num_antennas, users_per_cell * num_cells));
  for (int j = 0; j < num_cells; ++j) {
    for (int c = 0; c < users_per_cell * num_cells; ++c) {
      for (int m = 0; m < num_antennas; ++m) block.h[j](m, c) = rng.cnormal();
    }
  }
  block.pilot_noise.assign(num_cells, CMat(num_antennas, users_per_cell));
  block.data_noise.resize(num_antennas, num_cells);
  if (with_noise) {
    for (int l = 0; l < num_cells; ++l) {
      for (int k = 0; k < users_per_cell; ++k) {
        for (int m = 0; m < num_antennas; ++m) block.pilot_noise[l](m, k) = rng.cnormal();
      }
    }
    for (int l = 0; l < num_cells; ++l) {
      for (int m = 0; m < num_antennas; ++m) block.data_noise(m, l) = rng.cnormal();
    }
  } else {
    for (int l = 0; l < num_cells; ++l) block.pilot_noise[l].setZero();
    block.data_noise.setZero();
  }
  return block;
}

CVec pilot_observation(const LargeScaleFading& beta, const ChannelBlock& block,
                       const Grid& p, int k, int l) {
  const int L = block.num_cells;
  const int K = block.users_per_cell;
  CVec r = block.pilot_noise[l].col(k);
  for (int n = 0; n < L; ++n) {
    const double amp = std::sqrt(beta(l, k, n) * p(k, n));
    if (amp > 0.0) r += amp * block.h[l].col(k + K * n);
  }
  return r;
}

ChannelEstimate mmse_estimate(const CVec& r_kl, const LargeScaleFading& beta,
                              const Grid& p, int k, int l) {
  const int L = beta.num_cells();
  double denom = 1.0;
  for (int n = 0; n < L; ++n) denom += beta(l, k, n) * p(k, n);
  const double b = beta(l, k, l);
  ChannelEstimate est;
  est.coeff = b * std::sqrt(p(k, l)) / denom;
  est.g_hat = est.coeff * r_kl;
  est.est_var = b * b * p(k, l) / denom;
  est.err_var = b - est.est_var;
  return est;
}

double eta(const LargeScaleFading& beta, const Grid& p, int k, int l) {
  const int L = beta.num_cells();
  double denom = 1.0;
  for (int i = 0; i < L; ++i) denom += beta(l, k, i) * p(k, i);
  return beta(l, k, l) * std::sqrt(p(k, l)) / denom;
}

double eta_empirical(const LargeScaleFading& beta, const Grid& p, int k, int l,
                     int blocks, Rng& rng) {
  if (blocks < 1) throw std::invalid_argument("eta_empirical: blocks >= 1");
  const int L = beta.num_cells();
  const int K = beta.users_per_cell();
  const int M = 4;  // any antenna count works; the ratio is per entry
  double energy = 0.0;
  for (int b = 0; b < blocks; ++b) {
    const ChannelBlock block = draw_channel_block(L, K, M, rng);
    energy += pilot_observation(beta, block, p, k, l).squaredNorm();
  }
  const double cross = M * beta(l, k, l) * std::sqrt(p(k, l));
  return cross / (energy / blocks);
}

Grid eta_grid(const LargeScaleFading& beta, const Grid& p) {
  const int L = beta.num_cells();
  const int K = beta.users_per_cell();
  Grid grid(K, L);
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) grid(k, l) = eta(beta, p, k, l);
  }
  return grid;
}

double estimate_variance(const LargeScaleFading& beta, const Grid& p, int k, int l) {
  const int L = beta.num_cells();
  double denom = 1.0;
  for (int n = 0; n < L; ++n) denom += beta(l, k, n) * p(k, n);
  const double b = beta(l, k, l);
  return b * b * p(k, l) / denom;
}

double cross_estimate_ratio(const LargeScaleFading& beta, const Grid& p,
                            int k, int l, int m) {
  if (p(k, l) <= 0.0) {
    throw std::domain_error("cross_estimate_ratio: needs p_kl > 0");
  }
  return beta(l, k, m) * std::sqrt(p(k, m)) / (beta(l, k, l) * std::sqrt(p(k, l)));
}

}  // namespace lsfd
