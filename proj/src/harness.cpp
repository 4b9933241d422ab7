#include "lsfd/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

namespace lsfd {

namespace {

constexpr const char* kVersion = "lsfd-sim 0.1.0";

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

/// Hatted coordinates of a raw decentralized combiner, zero-padded to
/// full support, for the evaluation of its achieved SINR.
CVec hatted_from_raw_restricted(const CVec& a_raw, const LargeScaleFading& beta,
                                const Grid& p, int k, const std::vector<int>& omega,
                                int num_cells, Receiver receiver) {
  CVec a_hat = CVec::Zero(num_cells);
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const int j = omega[i];
    const double scale = receiver == Receiver::kMatchedFilter
                             ? eta(beta, p, k, j)
                             : 1.0 / (beta(j, k, j) * std::sqrt(p(k, j)));
    a_hat[j] = scale * a_raw[static_cast<int>(i)];
  }
  return a_hat;
}

struct DropContext {
  const Scenario* scenario;
  const Topology* topo;
  const std::vector<std::vector<int>>* omega;
};

DropResult compute_drop(const DropContext& ctx, Rng rng) {
  const Scenario& sc = *ctx.scenario;
  const NetworkConfig& cfg = sc.config;
  const int L = cfg.num_cells;
  const int K = cfg.users_per_cell;
  const int M = cfg.num_antennas;

  const UserDrop drop = drop_users(*ctx.topo, cfg, rng);
  const LargeScaleFading beta = sample_large_scale(*ctx.topo, drop, cfg, rng);
  const Grid p = Grid::Constant(K, L, cfg.p_max_mw);

  PowerScenario power_scenario{&beta, p, cfg.q_max_mw, M, sc.decoder};
  DecScenario dec_scenario{&beta, *ctx.omega, p, cfg.q_max_mw, M, sc.decoder};

  Grid q;
  switch (sc.power) {
    case PowerMode::kFixedMax:
      q = Grid::Constant(K, L, cfg.q_max_mw);
      break;
    case PowerMode::kBisection:
      q = optimize_powers_bisection(power_scenario).q_opt;
      break;
    case PowerMode::kDistributed: {
      if (sc.lsfd == LsfdMode::kDecOptimal || sc.lsfd == LsfdMode::kDecMmse) {
        const DecPowerResult dec = decentralized_power_control(
            dec_scenario, sc.gamma, 1e-4 * sc.gamma, 300, sc.sinr_mode,
            sc.sinr_blocks, &rng);
        q = dec.q_trace.back();
      } else {
        q = feasibility_check(sc.gamma, power_scenario).q;
      }
      break;
    }
  }

  const LambdaGrid lambda = lambda_grid(beta, p, q, M, sc.decoder);
  Grid sinr(K, L);
  for (int k = 0; k < K; ++k) {
    const Mat& b_k = beta.by_user[k];
    const Vec p_k = p.row(k).matrix().transpose();
    const Vec q_k = q.row(k).matrix().transpose();
    const Vec lambda_k = lambda.values.col(k);
    switch (sc.lsfd) {
      case LsfdMode::kNone:
        for (int l = 0; l < L; ++l) {
          sinr(k, l) = sinr_hatted(Vec::Unit(L, l), b_k, p_k, q_k, M, lambda_k, l);
        }
        break;
      case LsfdMode::kZfLsfd: {
        const Mat a_hat = zf_lsfd_combiners(b_k);
        for (int l = 0; l < L; ++l) {
          sinr(k, l) = sinr_hatted(a_hat.col(l), b_k, p_k, q_k, M, lambda_k, l);
        }
        break;
      }
      case LsfdMode::kOptimal:
        for (int l = 0; l < L; ++l) {
          sinr(k, l) = optimal_combiner(b_k, p_k, q_k, M, lambda_k, l).sinr;
        }
        break;
      case LsfdMode::kDecOptimal:
        for (int l = 0; l < L; ++l) {
          sinr(k, l) = optimal_combiner_dec(b_k, p_k, q_k, M, lambda_k,
                                            (*ctx.omega)[static_cast<std::size_t>(l)], l)
                           .sinr;
        }
        break;
      case LsfdMode::kDecMmse:
        break;  // handled jointly below, one block pass for all users
    }
  }

  if (sc.lsfd == LsfdMode::kDecMmse) {
    const FirstStageMoments moments = accumulate_first_stage_moments(
        beta, p, q, M, sc.decoder, sc.stats_blocks, rng);
    for (int k = 0; k < K; ++k) {
      const Mat& b_k = beta.by_user[k];
      const Vec p_k = p.row(k).matrix().transpose();
      const Vec q_k = q.row(k).matrix().transpose();
      const Vec lambda_k = lambda.values.col(k);
      for (int l = 0; l < L; ++l) {
        const std::vector<int>& omega_l = (*ctx.omega)[static_cast<std::size_t>(l)];
        const SecondOrderStats stats = restrict_stats(moments, omega_l, k, l);
        const CVec a = mmse_combiner(stats);
        const CVec a_hat =
            hatted_from_raw_restricted(a, beta, p, k, omega_l, L, sc.decoder);
        sinr(k, l) = sinr_hatted(a_hat, b_k, p_k, q_k, M, lambda_k, l);
      }
    }
  }

  DropResult result;
  result.sinr = sinr;
  result.rate.resize(K, L);
  result.sinr_limit.resize(K, L);
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      result.rate(k, l) = rate_from_sinr(sinr(k, l), sc.rate_overhead);
      result.sinr_limit(k, l) = sinr_limit_infinite_m(beta, q, k, l);
    }
  }
  result.q = q;
  return result;
}

}  // namespace

double outage_percentile(std::vector<double> values, double fraction) {
  if (values.empty()) throw std::invalid_argument("outage_percentile: empty input");
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("outage_percentile: fraction must lie in [0, 1]");
  }
  std::sort(values.begin(), values.end());
  if (fraction == 0.0) return values.front();
  const std::size_t index =
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(values.size())));
  return values[std::min(index, values.size()) - 1];
}

std::vector<double> pooled_rates(const RateReport& report) {
  std::vector<double> rates;
  for (const DropResult& drop : report.drops) {
    rates.insert(rates.end(), drop.rate.data(), drop.rate.data() + drop.rate.size());
  }
  return rates;
}

Summary summarize(const std::vector<double>& rates) {
  Summary s;
  s.min_rate = outage_percentile(rates, 0.0);
  s.outage_05 = outage_percentile(rates, 0.05);
  s.median_rate = outage_percentile(rates, 0.5);
  s.mean_rate = std::accumulate(rates.begin(), rates.end(), 0.0) /
                static_cast<double>(rates.size());
  return s;
}

RateReport run_scenario(const Scenario& scenario, int drops, int threads) {
  scenario.validate();
  if (drops < 1) throw std::invalid_argument("run_scenario: drops >= 1");
  const NetworkConfig& cfg = scenario.config;

  const Topology topo = build_hex_torus(cfg.num_cells, cfg.cell_radius);
  std::vector<std::vector<int>> omega(static_cast<std::size_t>(cfg.num_cells));
  for (int l = 0; l < cfg.num_cells; ++l) {
    omega[static_cast<std::size_t>(l)] = neighborhood(topo, l, cfg.neighborhood_size);
  }

  RateReport report;
  report.scenario = scenario;
  report.seed = cfg.seed;
  report.version = kVersion;
  report.drops.resize(static_cast<std::size_t>(drops));

  const DropContext ctx{&scenario, &topo, &omega};
  const Rng base(cfg.seed);

  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::string first_error;
  auto worker = [&]() {
    for (;;) {
      const int d = next.fetch_add(1);
      if (d >= drops) return;
      try {
        report.drops[static_cast<std::size_t>(d)] =
            compute_drop(ctx, base.substream(static_cast<std::uint64_t>(d)));
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) {
          first_error = "drop " + std::to_string(d) + ": " + e.what();
        }
        next.store(drops);
        return;
      }
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (!first_error.empty()) throw std::runtime_error(first_error);

  report.summary = summarize(pooled_rates(report));
  return report;
}

TermErrorReport validate_analytic_vs_monte_carlo(const ValidationInstance& instance,
                                                 const LsfdCombiners& mf_combiners,
                                                 const LsfdCombiners& zf_combiners,
                                                 int samples, Rng& rng) {
  const int L = instance.num_cells();
  const int K = instance.users_per_cell();
  const int M = instance.num_antennas;

  TermErrorReport report;
  for (const Receiver receiver : {Receiver::kMatchedFilter, Receiver::kZeroForcing}) {
    const LsfdCombiners& combiners =
        receiver == Receiver::kMatchedFilter ? mf_combiners : zf_combiners;
    const std::vector<Mat>& a_hat = combiners.a_hat;
    const LambdaGrid lambda =
        lambda_grid(instance.beta, instance.p, instance.q, M, receiver);
    const auto measured = empirical_term_powers(instance, combiners, samples, rng);
    double worst = 0.0;
    for (int k = 0; k < K; ++k) {
      const Vec p_k = instance.p.row(k).matrix().transpose();
      const Vec q_k = instance.q.row(k).matrix().transpose();
      for (int l = 0; l < L; ++l) {
        const SinrTerms expected =
            sinr_terms(a_hat[static_cast<std::size_t>(k)].col(l), instance.beta.by_user[k],
                       p_k, q_k, M, lambda.values.col(k), l);
        const TermPowers& got = measured[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
        const double e_useful = std::abs(got.useful - expected.useful) / expected.useful;
        const double e_pilot = L > 1 ? std::abs(got.pilot - expected.pilot) / expected.pilot : 0.0;
        const double e_other = std::abs(got.other - expected.other) / expected.other;
        report.useful = std::max(report.useful, e_useful);
        report.pilot = std::max(report.pilot, e_pilot);
        report.other = std::max(report.other, e_other);
        worst = std::max({worst, e_useful, e_pilot, e_other});
      }
    }
    if (receiver == Receiver::kMatchedFilter) {
      report.max_rel_err_mf = worst;
    } else {
      report.max_rel_err_zf = worst;
    }
  }
  return report;
}

ValidationInstance make_validation_instance(int num_cells, int users_per_cell,
                                            int num_antennas, Rng& rng) {
  ValidationInstance instance;
  instance.num_antennas = num_antennas;
  instance.beta.by_user.assign(static_cast<std::size_t>(users_per_cell),
                               Mat(num_cells, num_cells));
  for (int k = 0; k < users_per_cell; ++k) {
    for (int j = 0; j < num_cells; ++j) {
      for (int l = 0; l < num_cells; ++l) {
        // Log-uniform gains, own cell one decade stronger on average.
        const double exponent = -2.0 + 3.0 * rng.uniform() + (j == l ? 1.0 : 0.0);
        instance.beta.by_user[static_cast<std::size_t>(k)](j, l) = std::pow(10.0, exponent);
      }
    }
  }
  instance.p.resize(users_per_cell, num_cells);
  instance.q.resize(users_per_cell, num_cells);
  for (int l = 0; l < num_cells; ++l) {
    for (int k = 0; k < users_per_cell; ++k) {
      instance.p(k, l) = 0.5 + 1.5 * rng.uniform();
      instance.q(k, l) = 0.5 + 1.5 * rng.uniform();
    }
  }
  return instance;
}

void write_rates_csv(const RateReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "drop,cell,user,sinr_db,rate_bpshz,q_mw\n";
  for (std::size_t d = 0; d < report.drops.size(); ++d) {
    const DropResult& drop = report.drops[d];
    for (int l = 0; l < drop.sinr.cols(); ++l) {
      for (int k = 0; k < drop.sinr.rows(); ++k) {
        out << d << ',' << l << ',' << k << ',' << fmt9(to_db(drop.sinr(k, l))) << ','
            << fmt9(drop.rate(k, l)) << ',' << fmt9(drop.q(k, l)) << '\n';
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_limits_csv(const RateReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "drop,cell,user,sinr_limit_db\n";
  for (std::size_t d = 0; d < report.drops.size(); ++d) {
    const DropResult& drop = report.drops[d];
    for (int l = 0; l < drop.sinr_limit.cols(); ++l) {
      for (int k = 0; k < drop.sinr_limit.rows(); ++k) {
        out << d << ',' << l << ',' << k << ',' << fmt9(to_db(drop.sinr_limit(k, l)))
            << '\n';
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string summary_json_string(const RateReport& report) {
  const NetworkConfig& cfg = report.scenario.config;
  nlohmann::json j;
  j["schema_version"] = 1;
  j["config"] = {{"num_cells", cfg.num_cells},
                 {"users_per_cell", cfg.users_per_cell},
                 {"num_antennas", cfg.num_antennas},
                 {"neighborhood_size", cfg.neighborhood_size},
                 {"cell_radius", cfg.cell_radius},
                 {"shadow_std_db", cfg.shadow_std_db},
                 {"p_max_mw", cfg.p_max_mw},
                 {"q_max_mw", cfg.q_max_mw},
                 {"noise_power_dbm", cfg.noise_power_dbm},
                 {"exclusion_radius", cfg.exclusion_radius},
                 {"seed", cfg.seed},
                 {"trials", cfg.trials}};
  j["min_rate"] = report.summary.min_rate;
  j["outage_05"] = report.summary.outage_05;
  j["median_rate"] = report.summary.median_rate;
  j["mean_rate"] = report.summary.mean_rate;
  j["seed"] = report.seed;
  return j.dump(2);
}

void write_summary_json(const RateReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << summary_json_string(report) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace lsfd
