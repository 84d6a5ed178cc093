#include "planex/msac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "planex/geometry.hpp"
#include "planex/rng.hpp"

namespace planex {

namespace {

// Consecutive collinear samples after which a round gives up.
constexpr int kMaxDegenerateDraws = 10000;

}  // namespace

void MsacConfig::validate() const {
  if (!(inlier_distance > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "inlier distance must be positive");
  }
  if (!(stop_fraction > 0.0 && stop_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "stop fraction must lie in (0, 1]");
  }
  if (iterations_per_plane <= 0) {
    throw Error(ErrorCode::InvalidArgument, "iterations per plane must be positive");
  }
}

double msac_score(std::span<const Vec3> points, const Vec3& normal, double offset,
                  double inlier_distance) {
  const double cap = inlier_distance * inlier_distance;
  double score = 0.0;
  for (const Vec3& p : points) {
    const double d = normal.dot(p) - offset;
    score += std::min(d * d, cap);
  }
  return score;
}

MsacResult msac_extract_detailed(const OrganizedScan& scan, const MsacConfig& config) {
  config.validate();
  std::vector<RayIndex> remaining;
  for (std::size_t k = 0; k < scan.size(); ++k) {
    if (scan.ray(k).valid) remaining.push_back(static_cast<RayIndex>(k));
  }
  if (remaining.size() < 3) {
    throw Error(ErrorCode::TooFewPoints, "MSAC needs at least three valid points");
  }

  MsacResult result;
  result.segmentation = Segmentation(scan.width(), scan.height());
  result.total = remaining.size();
  const double stop_at = config.stop_fraction * static_cast<double>(result.total);
  const double a2 = config.inlier_distance * config.inlier_distance;

  CounterRng rng(config.rng_seed, 0);
  std::vector<Vec3> points;
  Label next_label = 1;

  while (static_cast<double>(remaining.size()) > stop_at && remaining.size() >= 3) {
    points.clear();
    for (const RayIndex k : remaining) points.push_back(scan.ray(k).point);
    const std::size_t n = points.size();

    MsacRound round;
    Vec3 best_normal = Vec3::Zero();
    double best_offset = 0.0;
    double best_score = std::numeric_limits<double>::infinity();
    bool gave_up = false;
    for (int it = 0; it < config.iterations_per_plane; ++it) {
      Vec3 normal;
      int degenerate = 0;
      std::size_t i0 = 0;
      while (true) {
        i0 = rng.below(n);
        std::size_t i1 = rng.below(n);
        std::size_t i2 = rng.below(n);
        const Vec3 ab = points[i1] - points[i0];
        const Vec3 ac = points[i2] - points[i0];
        normal = ab.cross(ac);
        const double scale = ab.norm() * ac.norm();
        if (i0 != i1 && i1 != i2 && i0 != i2 && scale > 0.0 && normal.norm() > 1e-9 * scale) {
          break;
        }
        if (++degenerate >= kMaxDegenerateDraws) {
          gave_up = true;
          break;
        }
      }
      if (gave_up) break;
      normal.normalize();
      const double offset = normal.dot(points[i0]);
      const double score = msac_score(points, normal, offset, config.inlier_distance);
      round.scores.push_back(score);
      if (score < best_score) {
        best_score = score;
        best_normal = normal;
        best_offset = offset;
        round.accepted = round.scores.size() - 1;
      }
    }
    if (round.scores.empty()) break;

    std::vector<RayIndex> inliers;
    std::vector<RayIndex> outliers;
    std::vector<Vec3> inlier_points;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = best_normal.dot(points[i]) - best_offset;
      if (d * d <= a2) {
        inliers.push_back(remaining[i]);
        inlier_points.push_back(points[i]);
      } else {
        outliers.push_back(remaining[i]);
      }
    }
    if (inliers.size() < 3) break;

    round.inliers = inliers.size();
    PlaneRecord record;
    try {
      const PlaneGeometry refit = pca_plane(inlier_points, scan.origin());
      record = {refit.normal, refit.offset(), inliers.size(), true};
    } catch (const Error&) {
      Vec3 normal = best_normal;
      double offset = best_offset;
      if (normal.dot(scan.origin()) - offset < 0.0) {
        normal = -normal;
        offset = -offset;
      }
      record = {normal, offset, inliers.size(), true};
    }
    for (const RayIndex k : inliers) result.segmentation.labels[k] = next_label;
    result.segmentation.planes[next_label] = record;
    ++next_label;
    result.rounds.push_back(std::move(round));
    remaining = std::move(outliers);
    if (gave_up) break;
  }
  result.remaining = remaining.size();
  return result;
}

Segmentation msac_extract(const OrganizedScan& scan, const MsacConfig& config) {
  return msac_extract_detailed(scan, config).segmentation;
}

}  // namespace planex
