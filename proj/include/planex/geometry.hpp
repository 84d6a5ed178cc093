#pragma once

#include <array>
#include <optional>
#include <span>

#include "planex/types.hpp"

namespace planex {

/// Rays whose direction makes |n·v| smaller than this with a plane normal
/// are treated as parallel to the plane.
inline constexpr double kDefaultParallelEps = 1e-6;

/// Distance t > 0 along the ray at which it meets the plane, if any.
std::optional<double> intersect_ray_plane(const Ray& ray, const PlaneGeometry& plane,
                                          double parallel_eps = kDefaultParallelEps);

/// Range to the first plane hit by the ray's axis (minimum positive t).
std::optional<double> predicted_range(const Ray& ray, std::span<const PlaneGeometry> planes,
                                      double parallel_eps = kDefaultParallelEps);

/// Sum of squared radial residuals of every assigned ray against its own
/// plane. `plane_of_ray[k]` indexes into `planes`, negative for unassigned.
/// Throws InconsistentAssignment if an assigned ray misses its plane.
double scan_error(const OrganizedScan& scan, std::span<const int> plane_of_ray,
                  std::span<const PlaneGeometry> planes,
                  double parallel_eps = kDefaultParallelEps);

/// Gaussian log-likelihood of the scan under the first-intersection model.
/// Rays that hit no plane contribute -infinity.
double scan_log_likelihood(const OrganizedScan& scan, std::span<const PlaneGeometry> planes,
                           double parallel_eps = kDefaultParallelEps);

/// Least-squares plane through the points; the normal faces `viewpoint`.
/// Throws DegenerateSet for fewer than three or collinear points.
PlaneGeometry pca_plane(std::span<const Vec3> points, const Vec3& viewpoint = Vec3::Zero());

enum class FitStatus {
  Ok,
  DegenerateSet,
  NoConvergence,
  /// Some member ray is parallel to the plane or hits it behind the sensor.
  Infeasible,
};

struct RadialFit {
  FitStatus status = FitStatus::DegenerateSet;
  PlaneGeometry plane;
  /// Minimum of the summed squared radial residuals, m^2.
  double residual = 0.0;
  int iterations = 0;

  bool ok() const noexcept { return status == FitStatus::Ok; }
};

struct RadialFitOptions {
  int max_iterations = 50;
  double relative_tolerance = 1e-12;
  double parallel_eps = kDefaultParallelEps;
};

/// Plane minimizing the squared radial (along-ray) residuals of the member
/// rays. Gauss-Newton on (tangent-space normal, offset) started from the PCA
/// plane of the endpoints, with a backtracking line search.
RadialFit fit_plane_radial(const OrganizedScan& scan, std::span<const RayIndex> members,
                           const RadialFitOptions& options = {});

/// Throwing variant: DegenerateSet, NoConvergence (also for infeasible fits).
RadialFit fit_plane_radial_or_throw(const OrganizedScan& scan, std::span<const RayIndex> members,
                                    const RadialFitOptions& options = {});

/// Sum over members of ((n·p − c) / (n·v))^2 for a plane n·x = c.
double radial_objective(const OrganizedScan& scan, std::span<const RayIndex> members,
                        const Vec3& normal, double offset);

/// Orthonormal pair spanning the plane perpendicular to `normal`.
std::array<Vec3, 2> tangent_basis(const Vec3& normal);

/// Gradient of radial_objective with respect to (a, b, c) where the normal
/// is normalize(n + a·t1 + b·t2) with (t1, t2) = tangent_basis(n) and the
/// offset is c, evaluated at a = b = 0.
Eigen::Vector3d radial_gradient(const OrganizedScan& scan, std::span<const RayIndex> members,
                                const Vec3& normal, double offset);

}  // namespace planex
