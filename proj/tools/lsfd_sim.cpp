// Command-line front end: uplink massive-MIMO scenarios with large-scale
// fading decoding, max-min power optimization, Monte Carlo validation of
// the closed-form SINR expressions, and served-fraction sweeps.

#include "lsfd/harness.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace lsfd;

Receiver parse_decoder(const std::string& name) {
  if (name == "mf") return Receiver::kMatchedFilter;
  if (name == "zf") return Receiver::kZeroForcing;
  throw CLI::ValidationError("--decoder", "expected mf or zf");
}

LsfdMode parse_lsfd(const std::string& name) {
  if (name == "none") return LsfdMode::kNone;
  if (name == "zf-lsfd") return LsfdMode::kZfLsfd;
  if (name == "optimal") return LsfdMode::kOptimal;
  if (name == "dec-opt") return LsfdMode::kDecOptimal;
  if (name == "dec-mmse") return LsfdMode::kDecMmse;
  throw CLI::ValidationError("--lsfd", "expected none|zf-lsfd|optimal|dec-opt|dec-mmse");
}

PowerMode parse_power(const std::string& name) {
  if (name == "fixed") return PowerMode::kFixedMax;
  if (name == "bisection") return PowerMode::kBisection;
  if (name == "distributed") return PowerMode::kDistributed;
  throw CLI::ValidationError("--power", "expected fixed|bisection|distributed");
}

SinrEvaluation parse_sinr_mode(const std::string& name) {
  if (name == "analytic") return SinrEvaluation::kAnalytic;
  if (name == "empirical") return SinrEvaluation::kEmpirical;
  throw CLI::ValidationError("--sinr-mode", "expected analytic or empirical");
}

struct SweepRange {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;
};

SweepRange parse_range(const std::string& text) {
  SweepRange range;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &range.start, &range.stop, &range.step) != 3 ||
      range.step <= 0.0) {
    throw CLI::ValidationError("--gamma-db-range", "expected a:b:step with step > 0");
  }
  return range;
}

int run_simulate(const Scenario& scenario, int drops, int threads,
                 const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const RateReport report = run_scenario(scenario, drops, threads);
  write_rates_csv(report, out_dir + "/rates.csv");
  write_limits_csv(report, out_dir + "/sinr_limit.csv");
  write_summary_json(report, out_dir + "/summary.json");
  std::cout << summary_json_string(report) << "\n";
  return 0;
}

int run_validate(int samples, std::uint64_t seed) {
  Rng rng(seed);
  const ValidationInstance instance = make_validation_instance(3, 2, 30, rng);
  const int L = instance.num_cells();
  const int K = instance.users_per_cell();

  // Two combiner sets: single-cell processing and a random mixture.
  std::vector<Mat> identity(K, Mat::Identity(L, L));
  std::vector<Mat> random(K, Mat(L, L));
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < L; ++l) {
      for (int j = 0; j < L; ++j) random[k](j, l) = 0.2 + 0.8 * rng.uniform();
    }
  }

  // The 2% gate is calibrated for 1e5 blocks; Monte Carlo noise grows
  // like 1/sqrt(samples) for shorter runs.
  const double gate = 0.02 * std::sqrt(std::max(1.0, 1e5 / samples));
  bool ok = true;
  for (const auto& [label, a_hat] :
       {std::pair{std::string("single-cell"), &identity},
        std::pair{std::string("random"), &random}}) {
    Rng stream = rng.substream(label.size());
    const TermErrorReport report = validate_analytic_vs_monte_carlo(
        instance, LsfdCombiners{*a_hat, Receiver::kMatchedFilter},
        LsfdCombiners{*a_hat, Receiver::kZeroForcing}, samples, stream);
    std::printf("%-12s useful %.4f%%  pilot %.4f%%  other %.4f%%  (worst MF %.4f%%, ZF %.4f%%)\n",
                label.c_str(), 100.0 * report.useful, 100.0 * report.pilot,
                100.0 * report.other, 100.0 * report.max_rel_err_mf,
                100.0 * report.max_rel_err_zf);
    ok = ok && report.max_rel_err_mf < gate && report.max_rel_err_zf < gate;
  }
  std::printf("validation %s (gate %.2f%% at %d blocks)\n", ok ? "PASS" : "FAIL",
              100.0 * gate, samples);
  return ok ? 0 : 1;
}

int run_sweep(const Scenario& base, const SweepRange& range, int drops, int threads,
              const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/sweep.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "gamma_db,served_fraction\n";

  for (double gamma_db = range.start; gamma_db <= range.stop + 1e-12;
       gamma_db += range.step) {
    const double gamma = std::pow(10.0, gamma_db / 10.0);
    Scenario scenario = base;
    if (scenario.power == PowerMode::kDistributed) scenario.gamma = gamma;
    const RateReport report = run_scenario(scenario, drops, threads);
    long served = 0;
    long total = 0;
    for (const DropResult& drop : report.drops) {
      served += (drop.sinr >= gamma * (1.0 - 1e-3)).count();
      total += drop.sinr.size();
    }
    const double fraction = static_cast<double>(served) / static_cast<double>(total);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", gamma_db, fraction);
    out << buf;
    std::cout << "gamma " << gamma_db << " dB: served " << fraction << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uplink massive-MIMO simulator with large-scale fading decoding"};
  app.require_subcommand(1);

  std::string config_path;
  std::string decoder = "mf";
  std::string lsfd_mode = "optimal";
  std::string power_mode = "fixed";
  std::string sinr_mode = "analytic";
  std::string out_dir = "out";
  double gamma_db = 10.0;
  std::optional<int> drops_flag;
  std::optional<std::uint64_t> seed_flag;
  int threads = 1;
  int stats_blocks = 200;

  CLI::App* simulate = app.add_subcommand("simulate", "run drops and emit rate files");
  simulate->add_option("--config", config_path, "key=value config file");
  simulate->add_option("--decoder", decoder, "mf|zf");
  simulate->add_option("--lsfd", lsfd_mode, "none|zf-lsfd|optimal|dec-opt|dec-mmse");
  simulate->add_option("--power", power_mode, "fixed|bisection|distributed");
  simulate->add_option("--gamma-db", gamma_db, "target SINR for distributed power");
  simulate->add_option("--drops", drops_flag, "number of drops (default: config trials)");
  simulate->add_option("--seed", seed_flag, "seed override");
  simulate->add_option("--out-dir", out_dir, "output directory");
  simulate->add_option("--threads", threads, "worker threads");
  simulate->add_option("--sinr-mode", sinr_mode, "analytic|empirical (dec power loop)");
  simulate->add_option("--stats-blocks", stats_blocks, "empirical covariance samples");

  int samples = 100000;
  std::uint64_t validate_seed = 1;
  CLI::App* validate = app.add_subcommand("validate", "Monte Carlo checks of the closed forms");
  validate->add_option("--samples", samples, "channel blocks");
  validate->add_option("--seed", validate_seed, "rng seed");

  std::string range_text;
  CLI::App* sweep = app.add_subcommand("sweep", "served fraction vs target SINR");
  sweep->add_option("--config", config_path, "key=value config file");
  sweep->add_option("--decoder", decoder, "mf|zf");
  sweep->add_option("--lsfd", lsfd_mode, "none|zf-lsfd|optimal|dec-opt|dec-mmse");
  sweep->add_option("--power", power_mode, "fixed|distributed");
  sweep->add_option("--gamma-db-range", range_text, "a:b:step in dB")->required();
  sweep->add_option("--drops", drops_flag, "number of drops");
  sweep->add_option("--seed", seed_flag, "seed override");
  sweep->add_option("--out-dir", out_dir, "output directory");
  sweep->add_option("--threads", threads, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return run_validate(samples, validate_seed);

    Scenario scenario;
    if (!config_path.empty()) scenario.config = load_config_file(config_path);
    if (seed_flag) scenario.config.seed = *seed_flag;
    scenario.decoder = parse_decoder(decoder);
    scenario.lsfd = parse_lsfd(lsfd_mode);
    scenario.power = parse_power(power_mode);
    scenario.gamma = std::pow(10.0, gamma_db / 10.0);
    scenario.sinr_mode = parse_sinr_mode(sinr_mode);
    scenario.stats_blocks = stats_blocks;
    const int drops = drops_flag.value_or(scenario.config.trials);

    if (simulate->parsed()) return run_simulate(scenario, drops, threads, out_dir);
    return run_sweep(scenario, parse_range(range_text), drops, threads, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
