#pragma once

// Scan builders and independent oracles shared by the unit tests and the
// acceptance binary. Oracles use only the geometry primitives and the
// PlaneMap state queries, never the engine's candidate bookkeeping.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "planex/cluster.hpp"
#include "planex/geometry.hpp"
#include "planex/segmentation.hpp"
#include "planex/synth.hpp"
#include "planex/types.hpp"

namespace planex::testing {

/// Pinhole-like grid of rays from the origin looking along +x. Row 0 is on
/// top; `step` is the tangent-plane spacing between neighbors.
inline Vec3 grid_direction(int w, int h, int row, int col, double step) {
  const double y = (static_cast<double>(col) - 0.5 * (w - 1)) * step;
  const double z = -(static_cast<double>(row) - 0.5 * (h - 1)) * step;
  return Vec3(1.0, y, z).normalized();
}

struct PlaneEq {
  Vec3 normal;
  double offset;
};

/// Scan whose pixel k measures plane `assignment[k]` (negative: invalid)
/// with additive radial noise of standard deviation `sigma` (0: exact).
/// `jitter` moves each ray off the grid by up to that fraction of `step`.
inline OrganizedScan assigned_scan(int w, int h, double step, const std::vector<PlaneEq>& planes,
                                   const std::vector<int>& assignment, double sigma,
                                   std::uint64_t seed, double jitter = 0.0) {
  OrganizedScan scan(w, h, Vec3::Zero(), sigma > 0.0 ? sigma : 0.01);
  std::mt19937_64 rng(seed);
  std::mt19937_64 jitter_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> shake(-jitter * step, jitter * step);
  std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t k = scan.index(r, c);
      if (assignment[k] < 0) continue;
      const PlaneEq& p = planes[static_cast<std::size_t>(assignment[k])];
      Vec3 v = grid_direction(w, h, r, c, step);
      if (jitter > 0.0) v = (v / v.x() + Vec3(0.0, shake(jitter_rng), shake(jitter_rng))).normalized();
      double t = p.offset / p.normal.dot(v);
      if (sigma > 0.0) t += noise(rng);
      scan.set_endpoint(k, t * v);
    }
  }
  return scan;
}

/// Random scan of 2 or 3 planes: a creased wall split at a random column,
/// optionally a floor below a random row.
inline OrganizedScan random_plane_scan(std::mt19937_64& rng, int w, int h, int plane_count,
                                       double sigma) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto unit = [&](Vec3 n) { return n.normalized(); };
  std::vector<PlaneEq> planes;
  planes.push_back({unit(Vec3(-1.0, 0.4 + 0.2 * u(rng), 0.1 * u(rng))), -(2.0 + 0.3 * u(rng))});
  planes.push_back({unit(Vec3(-1.0, -0.4 + 0.2 * u(rng), 0.1 * u(rng))), -(2.0 + 0.3 * u(rng))});
  if (plane_count > 2) planes.push_back({unit(Vec3(0.1 * u(rng), 0.1 * u(rng), 1.0)), -0.6});
  std::uniform_int_distribution<int> split_col(2, w - 3);
  std::uniform_int_distribution<int> split_row(h / 2, h - 2);
  const int sc = split_col(rng);
  const int sr = split_row(rng);
  std::vector<int> assignment(static_cast<std::size_t>(w) * h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      int a = c < sc ? 0 : 1;
      if (plane_count > 2 && r >= sr) a = 2;
      assignment[static_cast<std::size_t>(r) * w + c] = a;
    }
  }
  return assigned_scan(w, h, 0.06, planes, assignment, sigma, rng());
}

// ---------------------------------------------------------------------------
// Tetromino shapes by polyomino growth

using Cell = std::array<int, 2>;

/// Translates a cell set so its minimum row and column are 0, sorted.
inline std::vector<Cell> normalize_cells(std::vector<Cell> cells) {
  int r0 = std::numeric_limits<int>::max();
  int c0 = std::numeric_limits<int>::max();
  for (const Cell& c : cells) {
    r0 = std::min(r0, c[0]);
    c0 = std::min(c0, c[1]);
  }
  for (Cell& c : cells) c = {c[0] - r0, c[1] - c0};
  std::sort(cells.begin(), cells.end());
  return cells;
}

/// All fixed tetrominoes (translation classes) except the two straight ones,
/// grown cell by cell from a monomino.
inline std::vector<std::vector<Cell>> oracle_tetromino_shapes() {
  std::set<std::vector<Cell>> current{{{0, 0}}};
  for (int size = 1; size < 4; ++size) {
    std::set<std::vector<Cell>> next;
    for (const auto& shape : current) {
      for (const Cell& c : shape) {
        for (const Cell d : {Cell{-1, 0}, Cell{1, 0}, Cell{0, -1}, Cell{0, 1}}) {
          const Cell n{c[0] + d[0], c[1] + d[1]};
          if (std::find(shape.begin(), shape.end(), n) != shape.end()) continue;
          auto grown = shape;
          grown.push_back(n);
          next.insert(normalize_cells(grown));
        }
      }
    }
    current = std::move(next);
  }
  std::vector<std::vector<Cell>> out;
  for (const auto& s : current) {
    const bool straight = std::all_of(s.begin(), s.end(), [&](const Cell& c) { return c[0] == s[0][0]; }) ||
                          std::all_of(s.begin(), s.end(), [&](const Cell& c) { return c[1] == s[0][1]; });
    if (!straight) out.push_back(s);
  }
  return out;
}

/// Number of placements of the shapes fully inside a w-by-h grid.
inline std::size_t stamp_count(int w, int h) {
  std::size_t n = 0;
  for (const auto& shape : oracle_tetromino_shapes()) {
    int rows = 0, cols = 0;
    for (const Cell& c : shape) {
      rows = std::max(rows, c[0] + 1);
      cols = std::max(cols, c[1] + 1);
    }
    if (rows <= h && cols <= w) n += static_cast<std::size_t>(h - rows + 1) * (w - cols + 1);
  }
  return n;
}

// ---------------------------------------------------------------------------
// Plane fit oracle

/// Offset minimizing the radial objective for a fixed normal: a weighted
/// mean of n·p with weights 1/(n·v)^2.
inline double best_offset(const OrganizedScan& scan, std::span<const RayIndex> members,
                          const Vec3& n) {
  double sw = 0.0, swp = 0.0;
  for (const RayIndex k : members) {
    const Ray& ray = scan.ray(k);
    const double nv = n.dot(ray.direction);
    const double w = 1.0 / (nv * nv);
    sw += w;
    swp += w * n.dot(ray.point);
  }
  return swp / sw;
}

inline double oracle_objective(const OrganizedScan& scan, std::span<const RayIndex> members,
                               const Vec3& n) {
  const double c = best_offset(scan, members, n);
  double sum = 0.0;
  for (const RayIndex k : members) {
    const Ray& ray = scan.ray(k);
    const double rho = (n.dot(ray.point) - c) / n.dot(ray.direction);
    sum += rho * rho;
  }
  return sum;
}

/// Coarse-to-fine grid search. The coarse level covers the whole sphere in
/// spherical angles; each of the best few cells is then refined by a 9x9
/// pattern in the local tangent plane of the current normal, shrinking the
/// pattern whenever its center stays best.
inline double oracle_fit_objective(const OrganizedScan& scan, std::span<const RayIndex> members) {
  const auto feasible = [&](const Vec3& n, double eps) {
    for (const RayIndex k : members) {
      if (std::abs(n.dot(scan.ray(k).direction)) <= eps) return false;
    }
    return true;
  };
  struct Seed {
    double value;
    Vec3 normal;
  };
  std::vector<Seed> seeds;
  const int coarse = 120;
  for (int i = 0; i <= coarse; ++i) {
    for (int j = 0; j < 2 * coarse; ++j) {
      const double theta = M_PI * i / coarse;
      const double phi = M_PI * j / coarse;
      const Vec3 n(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
      if (!feasible(n, 1e-3)) continue;
      seeds.push_back({oracle_objective(scan, members, n), n});
    }
  }
  std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) { return a.value < b.value; });
  seeds.resize(std::min<std::size_t>(seeds.size(), 6));
  double best = std::numeric_limits<double>::infinity();
  for (Seed s : seeds) {
    double window = M_PI / coarse;
    for (int iter = 0; iter < 2000 && window > 1e-13; ++iter) {
      const Vec3 axis = std::abs(s.normal.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
      const Vec3 t1 = (axis - axis.dot(s.normal) * s.normal).normalized();
      const Vec3 t2 = s.normal.cross(t1);
      Seed local = s;
      for (int i = -4; i <= 4; ++i) {
        for (int j = -4; j <= 4; ++j) {
          const Vec3 n = (s.normal + window * (i / 4.0) * t1 + window * (j / 4.0) * t2).normalized();
          if (!feasible(n, 1e-6)) continue;
          const double v = oracle_objective(scan, members, n);
          if (v < local.value) local = {v, n};
        }
      }
      if (local.value < s.value) {
        s = local;
      } else {
        window *= 0.5;
      }
    }
    best = std::min(best, s.value);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Exhaustive candidate oracle

inline bool oracle_close(const OrganizedScan& scan, RayIndex a, RayIndex b, double d) {
  return (scan.ray(a).point - scan.ray(b).point).norm() <= d;
}

inline bool oracle_adjacent(const OrganizedScan& scan, RayIndex a, RayIndex b) {
  const int dr = std::abs(scan.row_of(a) - scan.row_of(b));
  const int dc = std::abs(scan.col_of(a) - scan.col_of(b));
  return dr + dc == 1;
}

/// Whether every 4-adjacent pair with one ray in `a` and one in `b` is
/// within the outlier distance.
inline bool oracle_filter(const OrganizedScan& scan, const std::vector<RayIndex>& a,
                          const std::vector<RayIndex>& b, double d) {
  for (const RayIndex x : a) {
    for (const RayIndex y : b) {
      if (oracle_adjacent(scan, x, y) && !oracle_close(scan, x, y, d)) return false;
    }
  }
  return true;
}

/// Minimum error increment over every feasible create, extend and merge
/// action in the current map, computed from scratch. Empty if none exists.
inline std::optional<double> oracle_min_increment(const OrganizedScan& scan, const PlaneMap& map,
                                                  const PpeConfig& config) {
  RadialFitOptions opts;
  opts.parallel_eps = config.parallel_eps;
  const double d = config.outlier_distance;
  std::optional<double> best;
  const auto offer = [&](double v) {
    if (!best || v < *best) best = v;
  };
  const int w = scan.width(), h = scan.height();

  for (const auto& shape : oracle_tetromino_shapes()) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        std::vector<RayIndex> cells;
        for (const Cell& s : shape) {
          const int rr = r + s[0], cc = c + s[1];
          if (rr >= h || cc >= w) break;
          const RayIndex k = static_cast<RayIndex>(scan.index(rr, cc));
          if (!scan.ray(k).valid || map.owner(k) != k) break;
          cells.push_back(k);
        }
        if (cells.size() != 4 || !oracle_filter(scan, cells, cells, d)) continue;
        const RadialFit fit = fit_plane_radial(scan, cells, opts);
        if (fit.ok()) offer(fit.residual);
      }
    }
  }

  const std::vector<PlaneId> regular = map.regular_ids();
  for (const PlaneId id : regular) {
    const RegularPlane& p = map.regular(id);
    std::set<RayIndex> rays;
    for (const RayIndex m : p.members) {
      for (const RayIndex k : {m - static_cast<RayIndex>(w), m - 1u, m + 1u, m + static_cast<RayIndex>(w)}) {
        if (k >= scan.size() || !oracle_adjacent(scan, m, k)) continue;
        if (scan.ray(k).valid && map.owner(k) == k) rays.insert(k);
      }
    }
    for (const RayIndex k : rays) {
      if (!oracle_filter(scan, p.members, {k}, d)) continue;
      std::vector<RayIndex> members = p.members;
      members.push_back(k);
      std::sort(members.begin(), members.end());
      const RadialFit fit = fit_plane_radial(scan, members, opts);
      if (fit.ok()) offer(fit.residual - p.residual);
    }
  }

  for (std::size_t i = 0; i < regular.size(); ++i) {
    for (std::size_t j = i + 1; j < regular.size(); ++j) {
      const RegularPlane& a = map.regular(regular[i]);
      const RegularPlane& b = map.regular(regular[j]);
      bool touching = false;
      for (const RayIndex x : a.members) {
        for (const RayIndex y : b.members) touching |= oracle_adjacent(scan, x, y);
      }
      if (!touching || !oracle_filter(scan, a.members, b.members, d)) continue;
      std::vector<RayIndex> members = a.members;
      members.insert(members.end(), b.members.begin(), b.members.end());
      std::sort(members.begin(), members.end());
      const RadialFit fit = fit_plane_radial(scan, members, opts);
      if (fit.ok()) offer(fit.residual - a.residual - b.residual);
    }
  }
  return best;
}

/// Checks that the recorded error ledger of a run is monotone and additive.
struct LedgerCheck {
  bool ok = true;
  double worst_gap = 0.0;
  double min_increment = 0.0;
};

inline LedgerCheck check_ledger(const ExtractionResult& result) {
  LedgerCheck check;
  double sum = 0.0;
  for (const AppliedStep& step : result.steps) {
    const double e = step.candidate.error_increment;
    check.min_increment = std::min(check.min_increment, e);
    if (!(e >= 0.0)) check.ok = false;
    sum += e;
    check.worst_gap = std::max(check.worst_gap, std::abs(sum - step.total_error));
  }
  const double final_error = result.map.total_error();
  check.worst_gap = std::max(check.worst_gap, std::abs(sum - final_error));
  if (check.worst_gap > 1e-9) check.ok = false;
  return check;
}

/// Whether two label grids describe the same partition of labeled pixels.
inline bool same_partition(const std::vector<Label>& a, const std::vector<Label>& b) {
  if (a.size() != b.size()) return false;
  std::map<Label, Label> ab, ba;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if ((a[k] == 0) != (b[k] == 0)) return false;
    if (a[k] == 0) continue;
    const auto [i, ni] = ab.emplace(a[k], b[k]);
    const auto [j, nj] = ba.emplace(b[k], a[k]);
    if (i->second != b[k] || j->second != a[k]) return false;
  }
  return true;
}

}  // namespace planex::testing
