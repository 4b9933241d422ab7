#pragma once

#include "lsfd/topology.hpp"
#include "lsfd/types.hpp"

#include <vector>

namespace lsfd {

/// Large-scale gains, noise-normalized. by_user[k](j, l) is the gain
/// between BS j and user k of cell l; by_user[k] is exactly the L x L
/// matrix B_k whose column l is the gain vector of user (k, l) seen
/// from every BS.
struct LargeScaleFading {
  std::vector<Mat> by_user;

  int users_per_cell() const { return static_cast<int>(by_user.size()); }
  int num_cells() const {
    return by_user.empty() ? 0 : static_cast<int>(by_user[0].rows());
  }
  double operator()(int j, int k, int l) const { return by_user[k](j, l); }
  /// Gain vector beta_kl over the BS index.
  Vec col(int k, int l) const { return by_user[k].col(l); }
};

/// One coherence block of small-scale fading and noise.
/// h[j] is M x (K*L); column k + K*n holds h_{jkn}. pilot_noise[l] is
/// M x K (one vector per pilot index), data_noise column l is z_l.
struct ChannelBlock {
  int num_cells = 0;
  int users_per_cell = 0;
  int num_antennas = 0;
  bool with_noise = true;
  std::vector<CMat> h;
  std::vector<CMat> pilot_noise;
  CMat data_noise;
};

struct ChannelEstimate {
  CVec g_hat;      // MMSE estimate of g_lkl
  double coeff;    // scalar applied to the pilot observation
  double est_var;  // per-entry variance of g_hat
  double err_var;  // per-entry variance of the estimation error
};

/// Linear gain 10^((-127.8 - 35 log10 d + shadow - noise_floor)/10).
/// Passing noise_power_dbm = 0 gives the raw (un-normalized) gain.
double pathloss_linear(double d_km, double shadow_db, double noise_power_dbm = 0.0);

/// Draws the full gain tensor for one drop: pathloss at the wrapped
/// distance plus i.i.d. log-normal shadowing, divided by the noise
/// floor so all downstream powers are in units of noise power.
LargeScaleFading sample_large_scale(const Topology& topo, const UserDrop& drop,
                                    const NetworkConfig& cfg, Rng& rng);

ChannelBlock draw_channel_block(int num_cells, int users_per_cell,
                                int num_antennas, Rng& rng,
                                bool with_noise = true);

/// Projected pilot observation r_kl at BS l for pilot index k.
CVec pilot_observation(const LargeScaleFading& beta, const ChannelBlock& block,
                       const Grid& p, int k, int l);

ChannelEstimate mmse_estimate(const CVec& r_kl, const LargeScaleFading& beta,
                              const Grid& p, int k, int l);

/// MMSE coefficient eta_kl = beta_lkl sqrt(p_kl) / (1 + sum_i beta_lki p_ki).
double eta(const LargeScaleFading& beta, const Grid& p, int k, int l);
Grid eta_grid(const LargeScaleFading& beta, const Grid& p);

/// Validation path for eta when training powers are not assumed known:
/// the numerator E[g^H r] = M beta sqrt(p) is exact, the denominator
/// E[r^H r] is averaged over simulated pilot observations.
double eta_empirical(const LargeScaleFading& beta, const Grid& p, int k, int l,
                     int blocks, Rng& rng);

/// Per-entry variance of g_hat_lkl (the first term of the MMSE split).
double estimate_variance(const LargeScaleFading& beta, const Grid& p, int k, int l);

/// Collinearity factor: g_hat_lkm = ratio * g_hat_lkl. Requires p_kl > 0.
double cross_estimate_ratio(const LargeScaleFading& beta, const Grid& p,
                            int k, int l, int m);

}  // namespace lsfd
