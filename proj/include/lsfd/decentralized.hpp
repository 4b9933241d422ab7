#pragma once

#include "lsfd/combining.hpp"
#include "lsfd/power_control.hpp"
#include "lsfd/receivers.hpp"
#include "lsfd/types.hpp"

#include <vector>

namespace lsfd {

/// Entries of a full-network vector restricted to Omega(l), in the
/// canonical (ascending index) order of the neighborhood.
Vec restrict_to(const Vec& full, const std::vector<int>& omega);

/// Zero-pads a restricted combiner back to full support.
Vec embed_from(const Vec& restricted, const std::vector<int>& omega, int num_cells);

/// Restricted optimal combiner and SINR over the neighborhood Omega(l).
/// lambda_k runs over the full network; the restriction picks rows.
CombinerResult optimal_combiner_dec(const Mat& b_k, const Vec& p_k, const Vec& q_k,
                                    int num_antennas, const Vec& lambda_k,
                                    const std::vector<int>& omega, int l);

/// Second-order statistics of the restricted first-stage vector
/// s_tilde^(l)_k paired with the desired symbol.
struct SecondOrderStats {
  CMat cov;    // E[s_tilde s_tilde^H], Hermitian PSD
  CVec cross;  // E[s_tilde s*]
  long sample_count = 0;
};

/// Exact statistics for the matched-filter receiver:
/// cov = M^2 sum_n D b_kn b_kn^H p q D + M D Lambda D,
/// cross = M D b_kl sqrt(p q).
SecondOrderStats closed_form_stats(const LargeScaleFading& beta, const Grid& p,
                                   const Grid& q, int num_antennas,
                                   const std::vector<int>& omega, int k, int l);

/// Streaming sample-average estimator; cov is Hermitian-symmetrized.
class StatsAccumulator {
 public:
  explicit StatsAccumulator(int dim)
      : cov_(CMat::Zero(dim, dim)), cross_(CVec::Zero(dim)) {}

  void add(const CVec& s_tilde, Complex symbol) {
    cov_ += s_tilde * s_tilde.adjoint();
    cross_ += s_tilde * std::conj(symbol);
    ++count_;
  }

  SecondOrderStats finalize() const;

 private:
  CMat cov_;
  CVec cross_;
  long count_ = 0;
};

/// MMSE combiner a = cov^-1 cross, with a small diagonal shrinkage
/// guarding low sample counts. Throws NumericalError when the
/// covariance is singular beyond repair.
CVec mmse_combiner(const SecondOrderStats& stats);

/// SINR implied by second-order statistics for an arbitrary combiner:
/// |a^H cross|^2 / (a^H cov a - |a^H cross|^2).
double sinr_from_stats(const SecondOrderStats& stats, const CVec& a);

/// Full-network sample moments of the first-stage estimates, one pass
/// over simulated blocks. Every cell's restricted statistics are
/// submatrices, so one accumulation serves all neighborhoods.
struct FirstStageMoments {
  std::vector<CMat> cov;    // per user index: E[s_tilde_k s_tilde_k^H], L x L
  std::vector<CMat> cross;  // per user index: (j, l) = E[s_tilde_kj s_kl^*]
  int blocks = 0;
};

FirstStageMoments accumulate_first_stage_moments(const LargeScaleFading& beta,
                                                 const Grid& p, const Grid& q,
                                                 int num_antennas, Receiver receiver,
                                                 int blocks, Rng& rng);

SecondOrderStats restrict_stats(const FirstStageMoments& moments,
                                const std::vector<int>& omega, int k, int l);

enum class SinrEvaluation { kAnalytic, kEmpirical };

struct DecScenario {
  const LargeScaleFading* beta = nullptr;
  std::vector<std::vector<int>> omega;  // per cell
  Grid p;
  double q_max = 0.0;
  int num_antennas = 0;
  Receiver receiver = Receiver::kMatchedFilter;
};

/// SINR of every user under the restricted optimal combiner (Eq. 28
/// analytically, or through empirically estimated statistics).
Grid decentralized_sinr_grid(const DecScenario& scenario, const Grid& q,
                             SinrEvaluation mode = SinrEvaluation::kAnalytic,
                             int blocks = 500, Rng* rng = nullptr);

struct DecPowerResult {
  std::vector<Grid> q_trace;
  Grid sinr;
  bool converged = false;
  int rounds = 0;
};

/// Synchronous rounds of the constrained per-user power update toward
/// target gamma. Converged means every |SINR - gamma| < epsilon before
/// the round cap; an infeasible target settles at its fixed point with
/// the flag reporting the miss.
DecPowerResult decentralized_power_control(const DecScenario& scenario, double gamma,
                                           double epsilon, int max_rounds,
                                           SinrEvaluation mode = SinrEvaluation::kAnalytic,
                                           int blocks = 500, Rng* rng = nullptr);

}  // namespace lsfd
