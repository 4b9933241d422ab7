#pragma once

#include "lsfd/channel.hpp"
#include "lsfd/combining.hpp"
#include "lsfd/types.hpp"

#include <vector>

namespace lsfd {

/// Data symbols and their transmit powers for one uplink use.
struct SymbolGrid {
  CMat s;  // K x L unit-power symbols
  Grid q;  // K x L data powers
};

SymbolGrid draw_symbols(int users_per_cell, int num_cells, const Grid& q, Rng& rng);

/// Received uplink vector y_l: the powered superposition of every
/// user's channel plus unit-variance noise from the block.
CVec uplink_rx(const LargeScaleFading& beta, const ChannelBlock& block,
               const SymbolGrid& symbols, int l);

/// MMSE channel estimates at BS l, one column per own user.
CMat estimated_channels(const LargeScaleFading& beta, const ChannelBlock& block,
                        const Grid& p, int l);

/// Matched-filter first-stage estimates s_tilde_kl = g_hat_lkl^H y_l.
CVec matched_filter(const CMat& g_hat_l, const CVec& y_l);

/// Pseudoinverse combiner V = G^H (G G^H)^-1 for the K x M estimated
/// channel matrix (passed column-wise as M x K). Columns are scaled to
/// v_lk^H g_hat_lkl = 1; a numerically rank-deficient Gram matrix is
/// surfaced as NumericalError.
CMat zero_forcing_matrix(const CMat& g_hat_l);

CVec zero_forcing_decode(const CMat& v_l, const CVec& y_l);

/// First-stage estimates for every (k, l) of one block.
CMat first_stage_grid(const LargeScaleFading& beta, const ChannelBlock& block,
                      const Grid& p, const SymbolGrid& symbols, Receiver receiver);

/// Fixed small instance for Monte Carlo validation runs.
struct ValidationInstance {
  LargeScaleFading beta;
  Grid p;
  Grid q;
  int num_antennas = 0;
  bool with_noise = true;

  int num_cells() const { return beta.num_cells(); }
  int users_per_cell() const { return beta.users_per_cell(); }
};

struct TermPowers {
  double useful = 0.0;
  double pilot = 0.0;
  double other = 0.0;
};

/// Monte Carlo estimate of the useful / pilot-contamination /
/// interference-plus-noise powers of the combined estimate
/// s_hat_kl = a_kl^H s_tilde_k, per (k, l). Combiners are given in
/// hatted coordinates and carry the receiver they are meant for. The
/// group means are estimated empirically, so the result is an oracle
/// independent of the closed forms; values are scaled to match
/// sinr_terms (useful and pilot carry the M factor).
std::vector<std::vector<TermPowers>> empirical_term_powers(
    const ValidationInstance& instance, const LsfdCombiners& combiners,
    int blocks, Rng& rng);

}  // namespace lsfd
