#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lsfd {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// K x L array of per-user scalars; row k = user index, column l = cell.
using Grid = Eigen::ArrayXXd;

/// First-stage M-dimensional receiver applied at each base station.
enum class Receiver { kMatchedFilter, kZeroForcing };

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

struct NetworkConfig {
  int num_cells = 19;
  int users_per_cell = 5;
  int num_antennas = 100;
  int neighborhood_size = 6;
  double cell_radius = 1.0;         // km, center to vertex
  double shadow_std_db = 8.0;
  double p_max_mw = 200.0;          // training power cap
  double q_max_mw = 200.0;          // data power cap
  double noise_power_dbm = -92.0;   // receiver noise floor
  double exclusion_radius = 0.05;   // km, minimum user-BS distance
  std::uint64_t seed = 1;
  int trials = 1000;

  void validate() const;
};

/// Training powers p and data powers q per (user index, cell), in mW.
/// Large-scale gains are pre-divided by the noise floor, so products
/// beta*p and beta*q are already in units of the unit-variance noise.
struct PowerAllocation {
  Grid p;
  Grid q;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Deterministic random stream with an explicit substream rule:
/// substream(i) restarts the generator from (seed XOR i), scrambled,
/// so per-drop streams are independent of scheduling and thread count.
/// The generator is a splitmix64 chain and the normal generator is
/// Box-Muller on top of it; the byte sequence is identical on every
/// platform and compiler.
class Rng {
 public:
  explicit Rng(std::uint64_t seed)
      : base_(seed), state_(detail::splitmix64(seed)) {}

  Rng substream(std::uint64_t index) const { return Rng(base_ ^ index); }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal, Box-Muller with a cached partner deviate.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  /// Circularly-symmetric complex normal with unit variance,
  /// i.e. real and imaginary parts N(0, 1/2).
  Complex cnormal() {
    const double s = M_SQRT1_2;
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
  }

 private:
  std::uint64_t base_;
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace lsfd
