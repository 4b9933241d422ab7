#pragma once

#include "lsfd/decentralized.hpp"
#include "lsfd/types.hpp"

#include <string>
#include <vector>

namespace lsfd {

enum class LsfdMode { kNone, kZfLsfd, kOptimal, kDecOptimal, kDecMmse };
enum class PowerMode { kFixedMax, kBisection, kDistributed };

struct Scenario {
  NetworkConfig config;
  Receiver decoder = Receiver::kMatchedFilter;
  LsfdMode lsfd = LsfdMode::kNone;
  PowerMode power = PowerMode::kFixedMax;
  double gamma = 0.0;  // linear target for the distributed power mode
  SinrEvaluation sinr_mode = SinrEvaluation::kAnalytic;
  int stats_blocks = 200;  // empirical covariance samples per drop
  int sinr_blocks = 500;   // blocks per empirical SINR estimate in the power loop
  double rate_overhead = 1.0;

  void validate() const;
};

struct DropResult {
  Grid sinr;        // K x L, linear
  Grid rate;        // bits/s/Hz
  Grid q;           // data powers in mW
  Grid sinr_limit;  // infinite-M diagnostic
};

struct Summary {
  double min_rate = 0.0;
  double outage_05 = 0.0;
  double median_rate = 0.0;
  double mean_rate = 0.0;
};

struct RateReport {
  Scenario scenario;
  std::vector<DropResult> drops;
  Summary summary;
  std::uint64_t seed = 0;
  std::string version;
};

/// Lower empirical quantile with the ceil-index convention:
/// sort ascending, take the element at 1-based index ceil(fraction * N);
/// fraction 0 gives the minimum.
double outage_percentile(std::vector<double> values, double fraction);

std::vector<double> pooled_rates(const RateReport& report);
Summary summarize(const std::vector<double>& rates);

/// Runs `drops` independent drops of the scenario. Each drop draws its
/// own substream seed XOR drop_index; results are reduced in drop order
/// so the output is identical for any worker count.
RateReport run_scenario(const Scenario& scenario, int drops, int threads = 1);

struct TermErrorReport {
  double max_rel_err_mf = 0.0;
  double max_rel_err_zf = 0.0;
  // Worst relative error per term class, across users and receivers.
  double useful = 0.0;
  double pilot = 0.0;
  double other = 0.0;
};

/// Compares every closed-form SINR term against its Monte Carlo
/// estimate on a small instance (both receivers).
TermErrorReport validate_analytic_vs_monte_carlo(const ValidationInstance& instance,
                                                 const LsfdCombiners& mf_combiners,
                                                 const LsfdCombiners& zf_combiners,
                                                 int samples, Rng& rng);

/// Deterministic small validation instance used by the validate
/// subcommand and the acceptance run.
ValidationInstance make_validation_instance(int num_cells, int users_per_cell,
                                            int num_antennas, Rng& rng);

void write_rates_csv(const RateReport& report, const std::string& path);
void write_limits_csv(const RateReport& report, const std::string& path);
void write_summary_json(const RateReport& report, const std::string& path);
std::string summary_json_string(const RateReport& report);

/// Flat key=value configuration, keys exactly the NetworkConfig field
/// names. Unknown keys raise ConfigError.
NetworkConfig parse_config_text(const std::string& text);
NetworkConfig load_config_file(const std::string& path);

}  // namespace lsfd
