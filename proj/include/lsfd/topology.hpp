#pragma once

#include "lsfd/types.hpp"

#include <vector>

namespace lsfd {

/// Hexagonal cell layout wrapped into a torus. The two lattice columns
/// generate the wrap; base stations sit at the coset representatives of
/// the wrap lattice inside the hexagonal site lattice, reduced into the
/// fundamental rhombus spanned by the lattice columns.
struct Topology {
  Eigen::Matrix2Xd bs_positions;  // km, one BS per column
  Mat2 lattice;                   // columns u1, u2 of the wrap lattice
  Mat2 lattice_inv;
  double cell_radius = 0.0;       // km, center to vertex

  int num_cells() const { return static_cast<int>(bs_positions.cols()); }
};

/// Random user placement. Column k + K*l holds user k of cell l.
struct UserDrop {
  Eigen::Matrix2Xd positions;  // km, reduced into the fundamental domain
  int users_per_cell = 0;

  Vec2 user(int k, int l) const {
    return positions.col(k + users_per_cell * l);
  }
};

/// Builds the wrapped layout for any cluster size of the form
/// i^2 + i*j + j^2 (19 = 3,2 is the usual choice). Throws ConfigError
/// for sizes that do not admit a perfect wrap.
Topology build_hex_torus(int num_cells, double cell_radius);

/// Maps a point to its representative inside the fundamental rhombus.
Vec2 reduce_to_fundamental(const Vec2& x, const Topology& topo);

/// Torus metric: minimum over the nine lattice translations
/// (0, +/-u1, +/-u2, +/-u1 +/- u2) of the Euclidean distance.
double wrapped_distance(const Vec2& a, const Vec2& b, const Topology& topo);

/// True when the offset from a cell center lies inside that cell's
/// hexagon (closed boundary, vertices at distance cell_radius).
bool inside_hexagon(const Vec2& offset, double cell_radius);

/// Uniform rejection sampling over each hexagon minus the exclusion
/// disc around the home BS. Deterministic given the rng state.
UserDrop drop_users(const Topology& topo, const NetworkConfig& cfg, Rng& rng);

/// Omega(l): the cell itself plus its `size` nearest cells by wrapped
/// BS distance (ties by ascending index), returned sorted ascending.
std::vector<int> neighborhood(const Topology& topo, int cell, int size);

}  // namespace lsfd
