#include "lsfd/power_control.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace lsfd {

Grid rayleigh_factor_grid(const PowerScenario& scenario, const Grid& q) {
  const LargeScaleFading& beta = *scenario.beta;
  const int L = scenario.num_cells();
  const int K = scenario.users_per_cell();
  const int M = scenario.num_antennas;
  const LambdaGrid lambda =
      lambda_grid(beta, scenario.p, q, M, scenario.receiver);

  Grid factors(K, L);
  Mat full(L, L);
  Mat solved(L, L);
  for (int k = 0; k < K; ++k) {
    const Mat& b_k = beta.by_user[k];
    // Full interference matrix including the own rank-one term; each
    // user's matrix is recovered by a rank-one downdate.
    full = lambda.values.col(k).asDiagonal();
    Vec w(L);
    for (int n = 0; n < L; ++n) {
      w[n] = scenario.p(k, n) * q(k, n) * M;
      if (w[n] > 0.0) full.selfadjointView<Eigen::Lower>().rankUpdate(b_k.col(n), w[n]);
    }
    const auto llt = full.selfadjointView<Eigen::Lower>().llt();
    solved = llt.solve(b_k);
    for (int l = 0; l < L; ++l) {
      const double t = b_k.col(l).dot(solved.col(l));
      const double denom = 1.0 - w[l] * t;
      if (denom > 1e-9) {
        factors(k, l) = t / denom;
      } else {
        // Near-cancellation in the downdate formula: assemble the
        // interference matrix of this user directly and solve.
        Mat c = lambda.values.col(k).asDiagonal();
        for (int n = 0; n < L; ++n) {
          if (n == l || w[n] <= 0.0) continue;
          c.selfadjointView<Eigen::Lower>().rankUpdate(b_k.col(n), w[n]);
        }
        const Vec x = c.selfadjointView<Eigen::Lower>().llt().solve(b_k.col(l));
        factors(k, l) = b_k.col(l).dot(x);
      }
    }
  }
  return factors;
}

Grid optimal_sinr_grid(const PowerScenario& scenario, const Grid& q) {
  const Grid factors = rayleigh_factor_grid(scenario, q);
  return scenario.p * q * scenario.num_antennas * factors;
}

Grid interference_grid(const PowerScenario& scenario, const Grid& q) {
  const Grid factors = rayleigh_factor_grid(scenario, q);
  return 1.0 / (scenario.p * scenario.num_antennas * factors);
}

double interference_function(const Grid& q, int k, int l, const PowerScenario& scenario) {
  return interference_grid(scenario, q)(k, l);
}

FixedPointResult fixed_point_iterate(const PowerScenario& scenario, double gamma,
                                     const Grid& q0, double rel_tol,
                                     int max_iterations) {
  FixedPointResult result;
  result.q = q0;
  const double floor = 1e-15 * std::max(scenario.q_max, 1.0);
  for (int it = 1; it <= max_iterations; ++it) {
    const Grid next =
        (gamma * interference_grid(scenario, result.q)).min(scenario.q_max);
    const double change =
        ((next - result.q).abs() / result.q.max(floor)).maxCoeff();
    result.q = next;
    result.iterations = it;
    if (change < rel_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

FeasibilityResult feasibility_check(double gamma, const PowerScenario& scenario) {
  const Grid q0 = Grid::Constant(scenario.users_per_cell(), scenario.num_cells(),
                                 scenario.q_max);
  const FixedPointResult fp = fixed_point_iterate(scenario, gamma, q0);
  FeasibilityResult result;
  result.q = fp.q;
  result.iterations = fp.iterations;
  result.converged = fp.converged;
  if (!fp.converged) {
    result.feasible = false;
    return result;
  }
  const Grid sinr = optimal_sinr_grid(scenario, fp.q);
  result.feasible = (sinr >= gamma * (1.0 - 1e-6)).all();
  return result;
}

BisectionResult optimize_powers_bisection(const PowerScenario& scenario,
                                          double epsilon) {
  const LargeScaleFading& beta = *scenario.beta;
  const int L = scenario.num_cells();
  const int K = scenario.users_per_cell();

  double gamma_max = 0.0;
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < L; ++l) {
      gamma_max = std::max(gamma_max, beta.col(k, l).squaredNorm() * scenario.p(k, l) *
                                          scenario.q_max * scenario.num_antennas);
    }
  }
  const double abs_tol = epsilon > 0.0 ? epsilon : 1e-12 * gamma_max;
  const double rel_tol = epsilon > 0.0 ? 0.0 : 1e-3;

  BisectionResult result;
  double gamma_min = 0.0;
  bool have_q = false;
  while (gamma_max - gamma_min >= std::max(abs_tol, rel_tol * gamma_min) &&
         result.iterations < 200) {
    const double gamma = 0.5 * (gamma_max + gamma_min);
    const FeasibilityResult feas = feasibility_check(gamma, scenario);
    result.feasibility_trace.push_back({gamma, feas.feasible});
    ++result.iterations;
    if (feas.feasible) {
      gamma_min = gamma;
      result.q_opt = feas.q;
      have_q = true;
    } else {
      gamma_max = gamma;
    }
  }
  result.gamma_opt = gamma_min;
  result.epsilon = gamma_max - gamma_min;
  if (!have_q) {
    result.q_opt = feasibility_check(gamma_min, scenario).q;
  }
  return result;
}

double distributed_power_update(double q_prev, double sinr_prev, double gamma,
                                double q_max) {
  if (q_prev <= 0.0 || sinr_prev <= 0.0) {
    throw std::domain_error("distributed_power_update: needs q > 0 and SINR > 0");
  }
  const double load = q_prev / sinr_prev;
  if (load <= q_max / gamma) {
    return q_prev * gamma / sinr_prev;
  }
  return (q_max * q_max / gamma) * (sinr_prev / q_prev);
}

}  // namespace lsfd
