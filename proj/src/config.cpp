#include "lsfd/harness.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace lsfd {

void NetworkConfig::validate() const {
  if (num_cells < 1) throw ConfigError("num_cells must be >= 1");
  if (users_per_cell < 1) throw ConfigError("users_per_cell must be >= 1");
  if (num_antennas <= users_per_cell) {
    throw ConfigError("num_antennas must exceed users_per_cell (M > K)");
  }
  if (neighborhood_size < 0 || neighborhood_size > num_cells - 1) {
    throw ConfigError("neighborhood_size must lie in [0, L-1]");
  }
  if (!(cell_radius > 0.0)) throw ConfigError("cell_radius must be positive");
  if (!(exclusion_radius >= 0.0) || exclusion_radius >= cell_radius) {
    throw ConfigError("exclusion_radius must lie in [0, cell_radius)");
  }
  if (!(shadow_std_db >= 0.0)) throw ConfigError("shadow_std_db must be >= 0");
  if (!(p_max_mw > 0.0) || !(q_max_mw > 0.0)) {
    throw ConfigError("p_max_mw and q_max_mw must be positive");
  }
  if (trials < 1) throw ConfigError("trials must be >= 1");
}

void Scenario::validate() const {
  config.validate();
  if (power == PowerMode::kDistributed && !(gamma > 0.0)) {
    throw ConfigError("distributed power mode needs a positive gamma target");
  }
  if (stats_blocks < 1) throw ConfigError("stats_blocks must be >= 1");
  if (!(rate_overhead > 0.0)) throw ConfigError("rate_overhead must be positive");
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double parsed = 0.0;
  try {
    parsed = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse value '" + value + "'");
  }
  if (used != value.size()) {
    throw ConfigError("config key '" + key + "': trailing characters in '" + value + "'");
  }
  return parsed;
}

int parse_int(const std::string& key, const std::string& value) {
  const double parsed = parse_number(key, value);
  const int as_int = static_cast<int>(parsed);
  if (static_cast<double>(as_int) != parsed) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
  return as_int;
}

}  // namespace

NetworkConfig parse_config_text(const std::string& text) {
  NetworkConfig cfg;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "num_cells") {
      cfg.num_cells = parse_int(key, value);
    } else if (key == "users_per_cell") {
      cfg.users_per_cell = parse_int(key, value);
    } else if (key == "num_antennas") {
      cfg.num_antennas = parse_int(key, value);
    } else if (key == "neighborhood_size") {
      cfg.neighborhood_size = parse_int(key, value);
    } else if (key == "cell_radius") {
      cfg.cell_radius = parse_number(key, value);
    } else if (key == "shadow_std_db") {
      cfg.shadow_std_db = parse_number(key, value);
    } else if (key == "p_max_mw") {
      cfg.p_max_mw = parse_number(key, value);
    } else if (key == "q_max_mw") {
      cfg.q_max_mw = parse_number(key, value);
    } else if (key == "noise_power_dbm") {
      cfg.noise_power_dbm = parse_number(key, value);
    } else if (key == "exclusion_radius") {
      cfg.exclusion_radius = parse_number(key, value);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_number(key, value));
    } else if (key == "trials") {
      cfg.trials = parse_int(key, value);
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

NetworkConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

}  // namespace lsfd
