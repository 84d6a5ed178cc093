#pragma once

// Hand-built 10x10 label pairs with their Hoover classification worked out
// by hand at the stated threshold. Rectangles are half-open [r0, r1) x [c0, c1).

#include <string>
#include <vector>

#include "planex/segmentation.hpp"
#include "support.hpp"

namespace planex::testing {

struct Rect {
  int r0, r1, c0, c1;
  Label label;
};

inline std::vector<Label> paint(const std::vector<Rect>& rects) {
  std::vector<Label> labels(100, 0);
  for (const Rect& r : rects) {
    for (int row = r.r0; row < r.r1; ++row) {
      for (int col = r.c0; col < r.c1; ++col) labels[static_cast<std::size_t>(row) * 10 + col] = r.label;
    }
  }
  return labels;
}

struct HooverFixture {
  std::string name;
  std::vector<Rect> gt;
  std::vector<Rect> ms;
  double threshold;
  std::size_t correct, over, under, missed, spurious;
  double k;
};

inline std::vector<HooverFixture> hoover_fixtures() {
  return {
      // Same partition, different label values.
      {"identical halves", {{0, 10, 0, 5, 1}, {0, 10, 5, 10, 2}}, {{0, 10, 0, 5, 2}, {0, 10, 5, 10, 1}},
       0.8, 2, 0, 0, 0, 0, 1.0},
      // Each half lies entirely inside the region, jointly 100%.
      {"split in two", {{0, 10, 0, 10, 1}}, {{0, 10, 0, 5, 1}, {0, 10, 5, 10, 2}}, 0.8, 0, 1, 0, 0, 0, 0.0},
      {"two merged", {{0, 10, 0, 5, 1}, {0, 10, 5, 10, 2}}, {{0, 10, 0, 10, 1}}, 0.8, 0, 0, 1, 0, 0, 0.0},
      {"nothing measured", {{0, 10, 0, 5, 1}, {0, 10, 5, 10, 2}}, {}, 0.8, 0, 0, 0, 2, 0, 0.0},
      // Region 2 of ms covers only unlabeled ground truth.
      {"spurious region", {{0, 5, 0, 10, 1}}, {{0, 5, 0, 10, 1}, {5, 10, 0, 10, 2}}, 0.8, 1, 0, 0, 0, 1, 0.5},
      // 60 + 40 pixels, the 40 pixel region is not found.
      {"k example", {{0, 6, 0, 10, 1}, {6, 10, 0, 10, 2}}, {{0, 6, 0, 10, 1}}, 0.8, 1, 0, 0, 1, 0, 0.6},
      {"k with split", {{0, 6, 0, 10, 1}, {6, 10, 0, 10, 2}},
       {{0, 6, 0, 10, 1}, {6, 10, 0, 5, 2}, {6, 10, 5, 10, 3}}, 0.8, 1, 1, 0, 0, 0, 0.6},
      // 80 of 100 pixels: overlap exactly at the threshold.
      {"at threshold", {{0, 10, 0, 10, 1}}, {{0, 8, 0, 10, 1}}, 0.8, 1, 0, 0, 0, 0, 1.0},
      // 79 of 100 pixels.
      {"below threshold", {{0, 10, 0, 10, 1}}, {{0, 7, 0, 10, 1}, {7, 8, 0, 9, 1}}, 0.8, 0, 0, 0, 1, 1, 0.0},
      // ms 1 spills one row into gt 2: 50/50 and 50/60, then 40/50 and 40/40.
      {"small spill", {{0, 5, 0, 10, 1}, {5, 10, 0, 10, 2}}, {{0, 6, 0, 10, 1}, {6, 10, 0, 10, 2}}, 0.8,
       2, 0, 0, 0, 0, 1.0},
      // Same at T = 0.9: 50 < 0.9 * 60 and 40 < 0.9 * 50.
      {"small spill strict", {{0, 5, 0, 10, 1}, {5, 10, 0, 10, 2}}, {{0, 6, 0, 10, 1}, {6, 10, 0, 10, 2}},
       0.9, 0, 0, 0, 2, 2, 0.0},
      // Two rows of spill: 50 < 0.8 * 70 and 30 < 0.8 * 50.
      {"large spill", {{0, 5, 0, 10, 1}, {5, 10, 0, 10, 2}}, {{0, 7, 0, 10, 1}, {7, 10, 0, 10, 2}}, 0.8,
       0, 0, 0, 2, 2, 0.0},
      // gt 1 split into two quarters, gt 2 and 3 merged into one half.
      {"split and merge", {{0, 10, 0, 5, 1}, {0, 5, 5, 10, 2}, {5, 10, 5, 10, 3}},
       {{0, 5, 0, 5, 1}, {5, 10, 0, 5, 2}, {0, 10, 5, 10, 3}}, 0.8, 0, 1, 1, 0, 0, 0.0},
      // Unlabeled pixels still count in K.
      {"small region", {{0, 4, 0, 4, 1}}, {{0, 4, 0, 4, 7}}, 0.8, 1, 0, 0, 0, 0, 0.16},
      // The second part holds only 40 of its 60 pixels inside gt 1.
      {"failed split", {{0, 10, 0, 8, 1}}, {{0, 10, 0, 4, 1}, {0, 10, 4, 10, 2}}, 0.8, 0, 0, 0, 1, 2, 0.0},
      // Three parts, 40 + 40 + 20.
      {"split in three", {{0, 10, 0, 10, 5}}, {{0, 10, 0, 4, 1}, {0, 10, 4, 8, 2}, {0, 10, 8, 10, 3}}, 0.8,
       0, 1, 0, 0, 0, 0.0},
  };
}

/// Radial residual applied to the rays of a rectangle.
struct ResidualRect {
  int r0, r1, c0, c1;
  double delta;
};

/// Every pixel looks at the wall x = 2 and measures its range plus the
/// residual of its rectangle. Each ms region carries the wall's plane.
struct RmseFixture {
  std::string name;
  std::vector<Rect> ms;
  std::vector<ResidualRect> residuals;
  double per_plane, per_ray;
  bool cutoff = false;
};

inline OrganizedScan rmse_scan(const std::vector<ResidualRect>& residuals) {
  std::vector<double> delta(100, 0.0);
  for (const ResidualRect& r : residuals) {
    for (int row = r.r0; row < r.r1; ++row) {
      for (int col = r.c0; col < r.c1; ++col) delta[static_cast<std::size_t>(row) * 10 + col] = r.delta;
    }
  }
  OrganizedScan scan(10, 10, Vec3::Zero(), 0.01);
  for (int row = 0; row < 10; ++row) {
    for (int col = 0; col < 10; ++col) {
      const std::size_t k = scan.index(row, col);
      const Vec3 v = grid_direction(10, 10, row, col, 0.1);
      scan.set_endpoint(k, (2.0 / v.x() + delta[k]) * v);
    }
  }
  return scan;
}

inline Segmentation rmse_segmentation(const std::vector<Rect>& rects) {
  Segmentation seg = segmentation_from_labels(10, 10, paint(rects));
  for (auto& [label, rec] : seg.planes) {
    rec.normal = Vec3::UnitX();
    rec.offset = 2.0;
    rec.has_geometry = true;
  }
  return seg;
}

inline std::vector<RmseFixture> rmse_fixtures() {
  return {
      // sqrt(4 * 1e-6 / 1) and sqrt(4 * 1e-6 / 4).
      {"four rays of 1 mm", {{0, 1, 0, 4, 1}}, {{0, 1, 0, 4, 1e-3}}, 2e-3, 1e-3},
      {"exact planes", {{0, 10, 0, 10, 1}}, {}, 0.0, 0.0},
      // E = 50 * 1e-6 + 25 * 4e-6 = 1.5e-4 over two planes and 100 rays.
      {"two planes",
       {{0, 10, 0, 5, 1}, {0, 10, 5, 10, 2}},
       {{0, 10, 0, 5, 1e-3}, {0, 5, 5, 10, -2e-3}},
       0.008660254037844387,
       0.0012247448713915891},
      // Unlabeled rays do not count: E = 50 * 9e-6 over one plane, 50 rays.
      {"unlabeled rays ignored", {{0, 5, 0, 10, 4}}, {{0, 5, 0, 10, 3e-3}, {5, 10, 0, 10, 0.5}},
       0.021213203435596427, 3e-3},
      // The 20 m plane is above the 10 m cutoff and is skipped.
      {"cutoff", {{0, 10, 0, 5, 1}, {0, 10, 5, 10, 2}}, {{0, 10, 0, 5, 1e-3}, {0, 10, 5, 10, 20.0}},
       0.007071067811865475, 1e-3, true},
      // Without the cutoff: E = 50 * 1e-6 + 50 * 400 = 20000.00005.
      {"no cutoff", {{0, 10, 0, 5, 1}, {0, 10, 5, 10, 2}}, {{0, 10, 0, 5, 1e-3}, {0, 10, 5, 10, 20.0}},
       100.000000125, 14.14213564140862},
  };
}

}  // namespace planex::testing
