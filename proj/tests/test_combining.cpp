#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lsfd/combining.hpp"
#include "test_util.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace lsfd;
using namespace lsfd::testutil;

namespace {

// Interference matrix of the denominator quadratic form.
Mat denominator_matrix(const Mat& b_k, const Vec& p_k, const Vec& q_k, int m,
                       const Vec& lambda_k, int l) {
  Mat c = lambda_k.asDiagonal();
  for (int n = 0; n < b_k.rows(); ++n) {
    if (n == l) continue;
    c += p_k[n] * q_k[n] * m * b_k.col(n) * b_k.col(n).transpose();
  }
  return c;
}

struct RandomInstance {
  LargeScaleFading beta;
  Grid p, q;
  int num_antennas;
};

RandomInstance random_instance(Rng& rng, int num_cells, int users_per_cell) {
  RandomInstance inst;
  inst.beta = random_fading(num_cells, users_per_cell, rng);
  inst.p = random_grid(users_per_cell, num_cells, rng, 0.2, 2.0);
  inst.q = random_grid(users_per_cell, num_cells, rng, 0.2, 2.0);
  inst.num_antennas = 20 + static_cast<int>(rng.uniform() * 100);
  return inst;
}

}  // namespace

TEST_CASE("infinite-M SINR limit") {
  SUBCASE("single cell has no same-pilot interference") {
    const LargeScaleFading beta = scalar_fading(1.0);
    const Grid q = Grid::Constant(1, 1, 1.0);
    CHECK(std::isinf(sinr_limit_infinite_m(beta, q, 0, 0)));
  }
  SUBCASE("two-cell hand value") {
    LargeScaleFading beta;
    beta.by_user.assign(1, Mat(2, 2));
    beta.by_user[0] << 2.0, 1.0, 0.5, 1.5;
    const Grid q = Grid::Constant(1, 2, 0.7);
    CHECK(sinr_limit_infinite_m(beta, q, 0, 0) == doctest::Approx(4.0).epsilon(1e-14));
  }
  SUBCASE("scale invariance in q") {
    Rng rng(21);
    const RandomInstance inst = random_instance(rng, 3, 2);
    const double base = sinr_limit_infinite_m(inst.beta, inst.q, 1, 2);
    const Grid scaled = 3.7 * inst.q;
    CHECK(sinr_limit_infinite_m(inst.beta, scaled, 1, 2) ==
          doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("lambda grids") {
  SUBCASE("matched filter hand values") {
    const LargeScaleFading beta = scalar_fading(1.0);
    CHECK(lambda_mf(beta, Grid::Zero(1, 1), Grid::Zero(1, 1)).values(0, 0) == 1.0);
    CHECK(lambda_mf(beta, Grid::Constant(1, 1, 1.0), Grid::Constant(1, 1, 1.0))
              .values(0, 0) == doctest::Approx(4.0).epsilon(1e-15));
  }

  SUBCASE("matched filter is monotone in every input") {
    Rng rng(22);
    const RandomInstance inst = random_instance(rng, 3, 2);
    const Mat base = lambda_mf(inst.beta, inst.p, inst.q).values;
    Grid q_up = inst.q;
    q_up(1, 1) += 0.5;
    CHECK(((lambda_mf(inst.beta, inst.p, q_up).values - base).array() >= 0.0).all());
    Grid p_up = inst.p;
    p_up(0, 2) += 0.5;
    CHECK(((lambda_mf(inst.beta, p_up, inst.q).values - base).array() >= 0.0).all());
    LargeScaleFading beta_up = inst.beta;
    beta_up.by_user[0](1, 1) *= 1.5;
    CHECK(((lambda_mf(beta_up, inst.p, inst.q).values - base).array() >= 0.0).all());
  }

  SUBCASE("zero forcing hand value") {
    const LargeScaleFading beta = scalar_fading(1.0);
    const Grid one = Grid::Constant(1, 1, 1.0);
    CHECK(lambda_zf(beta, one, one, 2, 1).values(0, 0) == doctest::Approx(6.0).epsilon(1e-15));
  }

  SUBCASE("zero data power reduces to the training factor") {
    Rng rng(23);
    const RandomInstance inst = random_instance(rng, 3, 2);
    const int m = 30, k_users = 2;
    const Mat got = lambda_zf(inst.beta, inst.p, Grid::Zero(2, 3), m, k_users).values;
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 2; ++k) {
        double train = 1.0;
        for (int i = 0; i < 3; ++i) train += inst.beta(j, k, i) * inst.p(k, i);
        CHECK(got(j, k) ==
              doctest::Approx(m / static_cast<double>(m - k_users) * train).epsilon(1e-12));
      }
    }
  }

  SUBCASE("zero forcing bounded by M/(M-K) times matched filter") {
    Rng rng(24);
    const RandomInstance inst = random_instance(rng, 4, 2);
    const int m = 25, k_users = 2;
    const Mat zf = lambda_zf(inst.beta, inst.p, inst.q, m, k_users).values;
    const Mat mf = lambda_mf(inst.beta, inst.p, inst.q).values;
    CHECK(((m / static_cast<double>(m - k_users) * mf - zf).array() >= -1e-12).all());
  }

  SUBCASE("M <= K is a domain error") {
    const LargeScaleFading beta = scalar_fading(1.0);
    const Grid one = Grid::Constant(1, 1, 1.0);
    CHECK_THROWS_AS(lambda_zf(beta, one, one, 1, 1), std::domain_error);
  }
}

TEST_CASE("matched-filter SINR closed form") {
  const LargeScaleFading beta = scalar_fading(1.0);
  const Grid one = Grid::Constant(1, 1, 1.0);

  SUBCASE("unit instance evaluates to 25") {
    const Vec a_hat = Vec::Constant(1, 0.5);
    CHECK(sinr_mf(a_hat, beta, one, one, 100, 0, 0) == doctest::Approx(25.0).epsilon(1e-14));
  }
  SUBCASE("combiner scale invariance") {
    const Vec a_hat = Vec::Constant(1, 3.5);
    CHECK(sinr_mf(a_hat, beta, one, one, 100, 0, 0) == doctest::Approx(25.0).epsilon(1e-14));
  }
  SUBCASE("all-zero powers give zero by convention") {
    const Vec a_hat = Vec::Constant(1, 1.0);
    CHECK(sinr_mf(a_hat, beta, Grid::Zero(1, 1), Grid::Zero(1, 1), 100, 0, 0) == 0.0);
  }
  SUBCASE("complex combiner scale invariance") {
    Rng rng(25);
    const RandomInstance inst = random_instance(rng, 3, 2);
    const LambdaGrid lambda = lambda_mf(inst.beta, inst.p, inst.q);
    const Vec p_k = inst.p.row(0).matrix().transpose();
    const Vec q_k = inst.q.row(0).matrix().transpose();
    CVec a(3);
    a << Complex(0.3, 0.1), Complex(-0.2, 0.7), Complex(1.1, -0.4);
    const double base =
        sinr_hatted(a, inst.beta.by_user[0], p_k, q_k, 30, lambda.values.col(0), 1);
    const CVec scaled = Complex(0.0, -2.5) * a;
    CHECK(sinr_hatted(scaled, inst.beta.by_user[0], p_k, q_k, 30, lambda.values.col(0), 1) ==
          doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("zero-forcing SINR perfect-estimation limit") {
  // With near-perfect training the residual error variance vanishes and
  // the single-user SINR approaches p q beta^2 (M - K) / (1 + beta p).
  const LargeScaleFading beta = scalar_fading(1.0);
  const Grid p = Grid::Constant(1, 1, 1e10);
  const Grid q = Grid::Constant(1, 1, 2.0);
  const Vec a_hat = Vec::Constant(1, 1.0);
  const double got = sinr_zf(a_hat, beta, p, q, 5, 1, 0, 0);
  const double expected = p(0, 0) * q(0, 0) * (5 - 1) / (1.0 + p(0, 0));
  CHECK(got == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("quotient form equals the direct sum form") {
  Rng rng(26);
  for (int trial = 0; trial < 100; ++trial) {
    const int L = 2 + static_cast<int>(rng.uniform() * 4);
    const RandomInstance inst = random_instance(rng, L, 2);
    const LambdaGrid lambda = lambda_mf(inst.beta, inst.p, inst.q);
    const int k = trial % 2;
    const int l = trial % L;
    const Vec p_k = inst.p.row(k).matrix().transpose();
    const Vec q_k = inst.q.row(k).matrix().transpose();
    Vec a_hat(L);
    for (int j = 0; j < L; ++j) a_hat[j] = rng.uniform() - 0.5;
    const double direct = sinr_hatted(a_hat, inst.beta.by_user[k], p_k, q_k,
                                      inst.num_antennas, lambda.values.col(k), l);
    const Mat c = denominator_matrix(inst.beta.by_user[k], p_k, q_k,
                                     inst.num_antennas, lambda.values.col(k), l);
    const Vec b_l = inst.beta.by_user[k].col(l);
    const double numerator = p_k[l] * q_k[l] * inst.num_antennas *
                             std::pow(a_hat.dot(b_l), 2);
    const double quotient = numerator / a_hat.dot(c * a_hat);
    CHECK(direct == doctest::Approx(quotient).epsilon(1e-12));
  }
}

TEST_CASE("optimal combiner") {
  SUBCASE("scalar case lines up with the hand value") {
    const Mat b = Mat::Constant(1, 1, 1.0);
    const Vec one = Vec::Constant(1, 1.0);
    const Vec lambda = Vec::Constant(1, 4.0);
    const CombinerResult result = optimal_combiner(b, one, one, 100, lambda, 0);
    CHECK(result.a_hat[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(result.sinr == doctest::Approx(25.0).epsilon(1e-14));
  }

  SUBCASE("matches the generalized eigenvalue oracle and dominates searches") {
    Rng rng(27);
    for (int trial = 0; trial < 30; ++trial) {
      const int L = 2 + static_cast<int>(rng.uniform() * 3);
      const RandomInstance inst = random_instance(rng, L, 1);
      const LambdaGrid lambda = lambda_mf(inst.beta, inst.p, inst.q);
      const Vec p_k = inst.p.row(0).matrix().transpose();
      const Vec q_k = inst.q.row(0).matrix().transpose();
      const int l = trial % L;
      const Mat& b_k = inst.beta.by_user[0];
      const CombinerResult result =
          optimal_combiner(b_k, p_k, q_k, inst.num_antennas, lambda.values.col(0), l);

      // Independent oracle: the top eigenvalue of the pencil
      // (numerator rank-one matrix, denominator matrix).
      const Mat numerator = p_k[l] * q_k[l] * inst.num_antennas * b_k.col(l) *
                            b_k.col(l).transpose();
      const Mat denom = denominator_matrix(b_k, p_k, q_k, inst.num_antennas,
                                           lambda.values.col(0), l);
      Eigen::GeneralizedSelfAdjointEigenSolver<Mat> solver(numerator, denom);
      const double oracle = solver.eigenvalues().maxCoeff();
      CHECK(result.sinr == doctest::Approx(oracle).epsilon(1e-8));

      // Evaluating the closed form at the optimizer reproduces sinr.
      const double evaluated = sinr_hatted(result.a_hat, b_k, p_k, q_k,
                                           inst.num_antennas, lambda.values.col(0), l);
      CHECK(evaluated == doctest::Approx(result.sinr).epsilon(1e-9));

      // Dominates the no-cooperation column and random perturbations.
      CHECK(result.sinr + 1e-12 * result.sinr >=
            sinr_hatted(Vec::Unit(L, l), b_k, p_k, q_k, inst.num_antennas,
                        lambda.values.col(0), l));
      for (int probe = 0; probe < 40; ++probe) {
        Vec perturbed = result.a_hat;
        for (int j = 0; j < L; ++j) {
          perturbed[j] += (rng.uniform() - 0.5) * 0.3 * result.a_hat.norm();
        }
        const double other = sinr_hatted(perturbed, b_k, p_k, q_k, inst.num_antennas,
                                         lambda.values.col(0), l);
        CHECK(other <= result.sinr * (1.0 + 1e-12));
      }
    }
  }

  SUBCASE("nondecreasing in the own data power") {
    Rng rng(28);
    const RandomInstance inst = random_instance(rng, 4, 2);
    const int k = 1, l = 2;
    const Vec p_k = inst.p.row(k).matrix().transpose();
    double previous = -1.0;
    for (double q_own = 0.1; q_own < 3.0; q_own += 0.25) {
      Grid q = inst.q;
      q(k, l) = q_own;
      const LambdaGrid lambda = lambda_mf(inst.beta, inst.p, q);
      const Vec q_k = q.row(k).matrix().transpose();
      const double sinr = optimal_combiner(inst.beta.by_user[k], p_k, q_k, 30,
                                           lambda.values.col(k), l)
                              .sinr;
      CHECK(sinr >= previous);
      previous = sinr;
    }
  }
}

TEST_CASE("zero-forcing LSFD combiners") {
  SUBCASE("identity gains give identity combiners") {
    const Mat a_hat = zf_lsfd_combiners(Mat::Identity(3, 3));
    CHECK((a_hat - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
  }

  SUBCASE("2x2 hand inverse and exact pilot cancellation") {
    Mat b(2, 2);
    b << 2.0, 1.0, 1.0, 2.0;
    const Mat a_hat = zf_lsfd_combiners(b);
    Mat expected(2, 2);
    expected << 2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0;
    CHECK((a_hat - expected).cwiseAbs().maxCoeff() < 1e-14);
    for (int l = 0; l < 2; ++l) {
      for (int n = 0; n < 2; ++n) {
        const double cross = a_hat.col(l).dot(b.col(n));
        if (n == l) {
          CHECK(cross == doctest::Approx(1.0).epsilon(1e-12));
        } else {
          CHECK(std::abs(cross) < 1e-12);
        }
      }
    }
  }

  SUBCASE("random instances: numerator reduces to p q M") {
    Rng rng(29);
    for (int trial = 0; trial < 25; ++trial) {
      const RandomInstance inst = random_instance(rng, 4, 1);
      const Mat& b_k = inst.beta.by_user[0];
      const Mat a_hat = zf_lsfd_combiners(b_k);
      const LambdaGrid lambda = lambda_mf(inst.beta, inst.p, inst.q);
      const Vec p_k = inst.p.row(0).matrix().transpose();
      const Vec q_k = inst.q.row(0).matrix().transpose();
      for (int l = 0; l < 4; ++l) {
        const SinrTerms terms = sinr_terms(a_hat.col(l), b_k, p_k, q_k, 30,
                                           lambda.values.col(0), l);
        CHECK(terms.useful / (p_k[l] * q_k[l] * 30.0) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(terms.pilot <= 1e-12 * terms.useful);
      }
    }
  }

  SUBCASE("unbounded SINR growth in M") {
    Rng rng(30);
    const RandomInstance inst = random_instance(rng, 3, 1);
    const Mat a_hat = zf_lsfd_combiners(inst.beta.by_user[0]);
    const Vec p_k = inst.p.row(0).matrix().transpose();
    const Vec q_k = inst.q.row(0).matrix().transpose();
    const LambdaGrid lambda = lambda_mf(inst.beta, inst.p, inst.q);
    double first = 0.0;
    double previous = 0.0;
    for (const int m : {100, 10000, 1000000}) {
      const double sinr = sinr_hatted(a_hat.col(1), inst.beta.by_user[0], p_k, q_k, m,
                                      lambda.values.col(0), 1);
      CHECK(sinr > previous);
      previous = sinr;
      if (first == 0.0) first = sinr;
    }
    // With the pilot term cancelled the SINR is exactly linear in M.
    CHECK(previous / first == doctest::Approx(1e4).epsilon(1e-9));
  }

  SUBCASE("singular gains are surfaced") {
    Mat singular(2, 2);
    singular << 1.0, 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(zf_lsfd_combiners(singular), NumericalError);
  }
}

TEST_CASE("rate mapping") {
  CHECK(rate_from_sinr(0.0) == 0.0);
  CHECK(rate_from_sinr(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rate_from_sinr(25.0) == doctest::Approx(4.700440).epsilon(1e-6));
  CHECK(rate_from_sinr(3.0, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(rate_from_sinr(-0.1), std::domain_error);
}

TEST_CASE("hatted and raw combiners convert consistently") {
  Rng rng(31);
  const RandomInstance inst = random_instance(rng, 3, 2);
  for (const Receiver receiver : {Receiver::kMatchedFilter, Receiver::kZeroForcing}) {
    Vec a_hat(3);
    for (int j = 0; j < 3; ++j) a_hat[j] = rng.uniform() + 0.1;
    const Vec raw = raw_combiner_from_hatted(a_hat, inst.beta, inst.p, 1, receiver);
    for (int j = 0; j < 3; ++j) {
      double expected;
      if (receiver == Receiver::kMatchedFilter) {
        const double coeff = eta(inst.beta, inst.p, 1, j);
        expected = a_hat[j] / coeff;
      } else {
        expected = a_hat[j] * inst.beta(j, 1, j) * std::sqrt(inst.p(1, j));
      }
      CHECK(raw[j] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}
