#pragma once

#include <string>
#include <vector>

#include "planex/segmentation.hpp"
#include "planex/types.hpp"

namespace planex {

inline constexpr double kHooverThreshold = 0.8;

/// A ground-truth region and the measured regions it was matched with.
struct RegionMatch {
  Label gt = 0;
  std::vector<Label> ms;
};

struct HooverReport {
  double threshold = kHooverThreshold;
  std::size_t gt_regions = 0;
  std::size_t ms_regions = 0;
  std::size_t correct = 0;
  /// correct / gt_regions.
  double f = 0.0;
  std::size_t oversegmented = 0;   // ground-truth regions
  std::size_t undersegmented = 0;  // measured regions
  std::size_t missed = 0;
  std::size_t spurious = 0;
  /// Mean angle between normals of correct pairs, degrees; NaN if no
  /// correct pair has geometry on both sides.
  double mean_angle_deg = 0.0;
  double k_value = 0.0;
  /// NaN unless computed against a scan.
  double rmse = 0.0;
  double rmse_per_ray = 0.0;

  std::vector<RegionMatch> correct_pairs;  // one ms label each
  std::vector<RegionMatch> over_matches;   // gt split into several ms
  /// Undersegmented measured regions: `gt` holds the ms label, `ms` the
  /// ground-truth labels it swallowed.
  std::vector<RegionMatch> under_matches;
  std::vector<Label> missed_labels;
  std::vector<Label> spurious_labels;
};

/// Hoover classification of `ms` against `gt` at the overlap threshold
/// T in (0.5, 1]. Regions are classified as correct first, then as over-
/// and finally as undersegmented; leftovers are missed (gt) or spurious
/// (ms). Label 0 belongs to no region. rmse fields are NaN.
/// Throws DimensionMismatch and InvalidArgument.
HooverReport compare(const Segmentation& gt, const Segmentation& ms,
                     double threshold = kHooverThreshold);

/// Pixels of correctly detected ground-truth regions over all pixels.
double k_value(const Segmentation& gt, const Segmentation& ms, double threshold = kHooverThreshold);

struct RmseOptions {
  enum class Normalization {
    /// sqrt(E / J) with J the number of planes.
    PerPlane,
    /// sqrt(E / N) with N the number of labeled rays.
    PerRay,
  };
  Normalization normalization = Normalization::PerPlane;
  /// Skip planes whose own root-mean-square radial residual exceeds
  /// `cutoff` meters.
  bool apply_cutoff = false;
  double cutoff = 10.0;
};

/// Root of the summed squared radial residuals of labeled rays against
/// their plane. Throws NoPlanes when no plane is left, DimensionMismatch,
/// InvalidArgument for planes without geometry and InconsistentAssignment
/// when a ray misses its plane.
double rmse(const OrganizedScan& scan, const Segmentation& seg, const RmseOptions& options = {});

/// compare() plus both rmse normalizations of `ms` against `scan`. They
/// stay NaN when `ms` has no plane or a labeled ray misses its plane.
HooverReport evaluate(const OrganizedScan& scan, const Segmentation& gt, const Segmentation& ms,
                      double threshold = kHooverThreshold, bool rmse_cutoff = false);

std::string format_table(const HooverReport& report);
/// One "name value unit" line per metric.
std::string format_records(const HooverReport& report);

}  // namespace planex
