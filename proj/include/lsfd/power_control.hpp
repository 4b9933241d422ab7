#pragma once

#include "lsfd/combining.hpp"
#include "lsfd/types.hpp"

#include <utility>
#include <vector>

namespace lsfd {

/// Everything the max-min power problem needs besides the data powers:
/// gains, fixed training powers, the cap, antennas, and which receiver
/// kind the lambda factors follow.
struct PowerScenario {
  const LargeScaleFading* beta = nullptr;
  Grid p;
  double q_max = 0.0;
  int num_antennas = 0;
  Receiver receiver = Receiver::kMatchedFilter;

  int num_cells() const { return beta->num_cells(); }
  int users_per_cell() const { return beta->users_per_cell(); }
};

/// Rayleigh factors s_kl = beta_kl^H C_kl(q)^-1 beta_kl for every user,
/// with the optimal combiner implied. SINR_kl = p q M s_kl and the
/// interference function is I_kl = 1 / (p M s_kl).
Grid rayleigh_factor_grid(const PowerScenario& scenario, const Grid& q);

/// SINR of every user under optimal combining at powers q.
Grid optimal_sinr_grid(const PowerScenario& scenario, const Grid& q);

/// Standard interference function I_kl(q) = q_kl / SINR_kl(q), using
/// the analytic limit at q_kl = 0.
double interference_function(const Grid& q, int k, int l, const PowerScenario& scenario);
Grid interference_grid(const PowerScenario& scenario, const Grid& q);

struct FixedPointResult {
  Grid q;
  int iterations = 0;
  bool converged = false;
};

/// Iterates q <- min(Q_max, gamma * I(q)) from q0 until the largest
/// entrywise relative change drops below rel_tol.
FixedPointResult fixed_point_iterate(const PowerScenario& scenario, double gamma,
                                     const Grid& q0, double rel_tol = 1e-8,
                                     int max_iterations = 500);

struct FeasibilityResult {
  bool feasible = false;
  Grid q;
  int iterations = 0;
  bool converged = false;
};

/// Runs the fixed point from Q_max * 1; the target is feasible when
/// every SINR at the fixed point reaches gamma (1 - 1e-6).
/// Non-convergence within the cap is reported as infeasible.
FeasibilityResult feasibility_check(double gamma, const PowerScenario& scenario);

struct BisectionResult {
  double gamma_opt = 0.0;
  Grid q_opt;
  int iterations = 0;
  double epsilon = 0.0;  // achieved bracket width
  std::vector<std::pair<double, bool>> feasibility_trace;
};

/// Outer bisection on the max-min SINR. gamma_max starts at
/// max_kl ||beta_kl||^2 P_max Q_max M. A positive epsilon stops at that
/// absolute bracket width; epsilon <= 0 selects the adaptive default,
/// which resolves gamma_opt to 0.1% relative (the a-priori upper bound
/// sits many decades above the optimum on realistic gains, so a purely
/// absolute tolerance tied to it would stop short of the optimum).
BisectionResult optimize_powers_bisection(const PowerScenario& scenario,
                                          double epsilon = 0.0);

/// Per-user constrained update rule of the distributed algorithm.
double distributed_power_update(double q_prev, double sinr_prev, double gamma,
                                double q_max);

}  // namespace lsfd
