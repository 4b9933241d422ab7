#include "lsfd/topology.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace lsfd {

namespace {

// Decompose L = i^2 + i*j + j^2 with i >= 1, j >= 0.
bool rhombic_decomposition(int num_cells, int* i_out, int* j_out) {
  for (int i = 1; i * i <= num_cells; ++i) {
    for (int j = 0; j <= i; ++j) {
      if (i * i + i * j + j * j == num_cells) {
        *i_out = i;
        *j_out = j;
        return true;
      }
    }
  }
  return false;
}

long long floordiv(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Topology build_hex_torus(int num_cells, double cell_radius) {
  if (num_cells < 1 || cell_radius <= 0.0) {
    throw ConfigError("build_hex_torus: need num_cells >= 1 and positive radius");
  }
  int ci = 0, cj = 0;
  if (!rhombic_decomposition(num_cells, &ci, &cj)) {
    throw ConfigError("build_hex_torus: cluster size " + std::to_string(num_cells) +
                      " is not of the form i^2 + i*j + j^2");
  }

  const double site = std::sqrt(3.0) * cell_radius;  // inter-site distance
  const Vec2 e1(site, 0.0);
  const Vec2 e2(0.5 * site, 0.5 * std::sqrt(3.0) * site);

  // Wrap lattice: u1 = i*e1 + j*e2 and its 60-degree rotation.
  Topology topo;
  topo.cell_radius = cell_radius;
  topo.lattice.col(0) = ci * e1 + cj * e2;
  topo.lattice.col(1) = -cj * e1 + (ci + cj) * e2;
  topo.lattice_inv = topo.lattice.inverse();

  // Coset representatives of the wrap lattice: reduce integer site
  // coordinates (a, b) modulo the integer matrix [[i, -j], [j, i+j]].
  // The residues (r1, r2) below are exact and unique per coset.
  const long long det = num_cells;
  std::set<std::pair<long long, long long>> residues;
  std::vector<std::pair<Vec2, std::pair<long long, long long>>> sites;
  const int span = 2 * (ci + cj) + 2;
  for (int a = -span; a <= span; ++a) {
    for (int b = -span; b <= span; ++b) {
      const long long n1 = static_cast<long long>(ci + cj) * a + static_cast<long long>(cj) * b;
      const long long n2 = -static_cast<long long>(cj) * a + static_cast<long long>(ci) * b;
      const long long r1 = n1 - det * floordiv(n1, det);
      const long long r2 = n2 - det * floordiv(n2, det);
      if (!residues.insert({r1, r2}).second) continue;
      const long long f1 = floordiv(n1, det);
      const long long f2 = floordiv(n2, det);
      const long long ra = a - f1 * ci - f2 * (-cj);
      const long long rb = b - f1 * cj - f2 * (ci + cj);
      sites.push_back({static_cast<double>(ra) * e1 + static_cast<double>(rb) * e2, {r1, r2}});
    }
  }
  if (static_cast<int>(sites.size()) != num_cells) {
    throw ConfigError("build_hex_torus: coset enumeration failed");
  }
  std::sort(sites.begin(), sites.end(), [](const auto& x, const auto& y) {
    return x.second < y.second;
  });

  topo.bs_positions.resize(2, num_cells);
  for (int c = 0; c < num_cells; ++c) topo.bs_positions.col(c) = sites[c].first;
  return topo;
}

Vec2 reduce_to_fundamental(const Vec2& x, const Topology& topo) {
  Vec2 frac = topo.lattice_inv * x;
  frac[0] -= std::floor(frac[0]);
  frac[1] -= std::floor(frac[1]);
  return topo.lattice * frac;
}

double wrapped_distance(const Vec2& a, const Vec2& b, const Topology& topo) {
  const Vec2 d = reduce_to_fundamental(a, topo) - reduce_to_fundamental(b, topo);
  double best = std::numeric_limits<double>::infinity();
  for (int c1 = -1; c1 <= 1; ++c1) {
    for (int c2 = -1; c2 <= 1; ++c2) {
      const Vec2 shifted = d - c1 * topo.lattice.col(0) - c2 * topo.lattice.col(1);
      best = std::min(best, shifted.norm());
    }
  }
  return best;
}

bool inside_hexagon(const Vec2& offset, double cell_radius) {
  // Voronoi cell of the site lattice: six half-planes at the inradius.
  const double inradius = 0.5 * std::sqrt(3.0) * cell_radius;
  for (int m = 0; m < 6; ++m) {
    const double angle = m * M_PI / 3.0;
    if (offset[0] * std::cos(angle) + offset[1] * std::sin(angle) > inradius) {
      return false;
    }
  }
  return true;
}

UserDrop drop_users(const Topology& topo, const NetworkConfig& cfg, Rng& rng) {
  if (cfg.exclusion_radius >= cfg.cell_radius) {
    throw ConfigError("drop_users: exclusion radius must be below the cell radius");
  }
  const double r = topo.cell_radius;
  const double half_w = 0.5 * std::sqrt(3.0) * r;

  UserDrop drop;
  drop.users_per_cell = cfg.users_per_cell;
  drop.positions.resize(2, cfg.users_per_cell * topo.num_cells());
  for (int l = 0; l < topo.num_cells(); ++l) {
    for (int k = 0; k < cfg.users_per_cell; ++k) {
      Vec2 offset;
      do {
        offset[0] = (2.0 * rng.uniform() - 1.0) * half_w;
        offset[1] = (2.0 * rng.uniform() - 1.0) * r;
      } while (!inside_hexagon(offset, r) || offset.norm() < cfg.exclusion_radius);
      const Vec2 pos = topo.bs_positions.col(l) + offset;
      drop.positions.col(k + cfg.users_per_cell * l) = reduce_to_fundamental(pos, topo);
    }
  }
  return drop;
}

std::vector<int> neighborhood(const Topology& topo, int cell, int size) {
  const int num_cells = topo.num_cells();
  if (cell < 0 || cell >= num_cells || size < 0 || size > num_cells - 1) {
    throw ConfigError("neighborhood: need 0 <= size <= L-1 and a valid cell");
  }
  std::vector<std::pair<double, int>> others;
  others.reserve(num_cells - 1);
  for (int j = 0; j < num_cells; ++j) {
    if (j == cell) continue;
    others.push_back({wrapped_distance(topo.bs_positions.col(cell),
                                       topo.bs_positions.col(j), topo), j});
  }
  std::sort(others.begin(), others.end());

  std::vector<int> omega;
  omega.reserve(size + 1);
  omega.push_back(cell);
  for (int i = 0; i < size; ++i) omega.push_back(others[i].second);
  std::sort(omega.begin(), omega.end());
  return omega;
}

}  // namespace lsfd
