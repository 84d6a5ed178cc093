#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "planex/segmentation.hpp"
#include "planex/types.hpp"

namespace planex {

struct MsacConfig {
  /// Maximum orthogonal point-to-plane distance of an inlier, m.
  double inlier_distance = 0.03;
  /// Extraction stops once at most this fraction of the points is left.
  double stop_fraction = 0.05;
  int iterations_per_plane = 500;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Scores of all hypotheses drawn for one extracted plane.
struct MsacRound {
  std::vector<double> scores;
  std::size_t accepted = 0;  // index into scores
  std::size_t inliers = 0;
};

struct MsacResult {
  Segmentation segmentation;
  std::vector<MsacRound> rounds;
  /// Points left unassigned when extraction stopped.
  std::size_t remaining = 0;
  std::size_t total = 0;
};

/// Truncated quadratic cost: sum of min(d^2, a^2) over the points, with d
/// the orthogonal distance to the plane n·x = offset.
double msac_score(std::span<const Vec3> points, const Vec3& normal, double offset,
                  double inlier_distance);

/// Sequential MSAC: repeatedly detect the best-scoring plane among
/// `iterations_per_plane` three-point hypotheses and remove its inliers.
/// Throws TooFewPoints if the scan has fewer than three valid points.
MsacResult msac_extract_detailed(const OrganizedScan& scan, const MsacConfig& config);

Segmentation msac_extract(const OrganizedScan& scan, const MsacConfig& config);

}  // namespace planex
