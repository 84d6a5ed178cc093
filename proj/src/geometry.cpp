#include "planex/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace planex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Ratio of middle to largest scatter eigenvalue below which the points are
// considered collinear.
constexpr double kCollinearRatio = 1e-14;
constexpr double kMachineEps = std::numeric_limits<double>::epsilon();

struct Centered {
  Vec3 offset;     // endpoint minus centroid
  Vec3 direction;  // unit ray direction
  double range;
};

// Per-thread scratch for the gathered member data.
thread_local std::vector<Centered> g_scratch;

double centered_objective(std::span<const Centered> pts, const Vec3& n, double c, double eps) {
  double f = 0.0;
  for (const auto& q : pts) {
    const double b = n.dot(q.direction);
    if (std::abs(b) < eps) return kInf;
    const double rho = (n.dot(q.offset) - c) / b;
    f += rho * rho;
  }
  return f;
}

}  // namespace

std::optional<double> intersect_ray_plane(const Ray& ray, const PlaneGeometry& plane,
                                          double parallel_eps) {
  const double denom = plane.normal.dot(ray.direction);
  if (std::abs(denom) < parallel_eps) return std::nullopt;
  const double t = plane.normal.dot(plane.support - ray.start) / denom;
  if (!(t > 0.0)) return std::nullopt;
  return t;
}

std::optional<double> predicted_range(const Ray& ray, std::span<const PlaneGeometry> planes,
                                      double parallel_eps) {
  std::optional<double> best;
  for (const auto& plane : planes) {
    const auto t = intersect_ray_plane(ray, plane, parallel_eps);
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

double scan_error(const OrganizedScan& scan, std::span<const int> plane_of_ray,
                  std::span<const PlaneGeometry> planes, double parallel_eps) {
  if (plane_of_ray.size() != scan.size()) {
    throw Error(ErrorCode::DimensionMismatch, "assignment size differs from scan size");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < scan.size(); ++k) {
    const int id = plane_of_ray[k];
    const Ray& ray = scan.ray(k);
    if (id < 0 || !ray.valid) continue;
    if (static_cast<std::size_t>(id) >= planes.size()) {
      throw Error(ErrorCode::InconsistentAssignment,
                  "ray " + std::to_string(k) + " assigned to unknown plane " + std::to_string(id));
    }
    const auto t = intersect_ray_plane(ray, planes[static_cast<std::size_t>(id)], parallel_eps);
    if (!t) {
      throw Error(ErrorCode::InconsistentAssignment,
                  "ray " + std::to_string(k) + " does not intersect its plane");
    }
    const double residual = ray.range - *t;
    sum += residual * residual;
  }
  return sum;
}

double scan_log_likelihood(const OrganizedScan& scan, std::span<const PlaneGeometry> planes,
                           double parallel_eps) {
  const double sigma = scan.noise_sigma();
  const double norm = -0.5 * std::log(2.0 * std::numbers::pi * sigma * sigma);
  double total = 0.0;
  for (const Ray& ray : scan.rays()) {
    if (!ray.valid) continue;
    const auto t = predicted_range(ray, planes, parallel_eps);
    if (!t) return -kInf;
    const double z = (ray.range - *t) / sigma;
    total += norm - 0.5 * z * z;
  }
  return total;
}

PlaneGeometry pca_plane(std::span<const Vec3> points, const Vec3& viewpoint) {
  if (points.size() < 3) {
    throw Error(ErrorCode::DegenerateSet, "need at least three points");
  }
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - centroid;
    scatter.noalias() += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(scatter);
  const Vec3 values = solver.eigenvalues();
  if (!(values(2) > 0.0) || values(1) <= kCollinearRatio * values(2)) {
    throw Error(ErrorCode::DegenerateSet, "points are collinear");
  }
  Vec3 normal = solver.eigenvectors().col(0).normalized();
  if (normal.dot(viewpoint - centroid) < 0.0) normal = -normal;
  return {centroid, normal};
}

std::array<Vec3, 2> tangent_basis(const Vec3& normal) {
  const Vec3 axis = std::abs(normal.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 t1 = (axis - axis.dot(normal) * normal).normalized();
  return {t1, normal.cross(t1)};
}

double radial_objective(const OrganizedScan& scan, std::span<const RayIndex> members,
                        const Vec3& normal, double offset) {
  double f = 0.0;
  for (const RayIndex q : members) {
    const Ray& ray = scan.ray(q);
    const double rho = (normal.dot(ray.point) - offset) / normal.dot(ray.direction);
    f += rho * rho;
  }
  return f;
}

Eigen::Vector3d radial_gradient(const OrganizedScan& scan, std::span<const RayIndex> members,
                                const Vec3& normal, double offset) {
  const auto [t1, t2] = tangent_basis(normal);
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  for (const RayIndex q : members) {
    const Ray& ray = scan.ray(q);
    const double b = normal.dot(ray.direction);
    const double rho = (normal.dot(ray.point) - offset) / b;
    grad(0) += rho * (t1.dot(ray.point) - rho * t1.dot(ray.direction)) / b;
    grad(1) += rho * (t2.dot(ray.point) - rho * t2.dot(ray.direction)) / b;
    grad(2) += -rho / b;
  }
  return 2.0 * grad;
}

RadialFit fit_plane_radial(const OrganizedScan& scan, std::span<const RayIndex> members,
                           const RadialFitOptions& options) {
  RadialFit out;
  const std::size_t count = members.size();
  if (count < 3) {
    out.status = FitStatus::DegenerateSet;
    return out;
  }

  Vec3 centroid = Vec3::Zero();
  for (const RayIndex q : members) centroid += scan.ray(q).point;
  centroid /= static_cast<double>(count);

  auto& pts = g_scratch;
  pts.resize(count);
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < count; ++i) {
    const Ray& ray = scan.ray(members[i]);
    pts[i] = {ray.point - centroid, ray.direction, ray.range};
    scatter.noalias() += pts[i].offset * pts[i].offset.transpose();
  }
  const std::span<const Centered> view(pts.data(), count);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(scatter);
  const Vec3 values = solver.eigenvalues();
  if (!(values(2) > 0.0) || values(1) <= kCollinearRatio * values(2)) {
    out.status = FitStatus::DegenerateSet;
    return out;
  }

  // Orient so the normal faces most member rays (n·v < 0).
  auto orient = [&](Vec3& n, double& c) {
    std::size_t facing = 0;
    for (const auto& q : view) facing += n.dot(q.direction) < 0.0 ? 1 : 0;
    if (2 * facing < count) {
      n = -n;
      c = -c;
    }
  };

  Vec3 n = solver.eigenvectors().col(0).normalized();
  double c = 0.0;  // offset relative to the centroid
  orient(n, c);

  const double eps = options.parallel_eps;
  double f = centered_objective(view, n, c, eps);
  // Objective level reached by rounding alone; below it steps are noise.
  double max_range = 0.0;
  for (const auto& q : view) max_range = std::max(max_range, q.range);
  const double noise_floor = static_cast<double>(count) * std::pow(64.0 * kMachineEps * max_range, 2);
  if (!std::isfinite(f)) {
    out.status = FitStatus::Infeasible;
    return out;
  }

  bool converged = false;
  int iteration = 0;
  for (; iteration < options.max_iterations; ++iteration) {
    if (f == 0.0) {
      converged = true;
      break;
    }
    const auto [t1, t2] = tangent_basis(n);
    Eigen::Matrix3d normal_matrix = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (const auto& q : view) {
      const double inv_b = 1.0 / n.dot(q.direction);
      const double rho = (n.dot(q.offset) - c) * inv_b;
      const Eigen::Vector3d jac((t1.dot(q.offset) - rho * t1.dot(q.direction)) * inv_b,
                                (t2.dot(q.offset) - rho * t2.dot(q.direction)) * inv_b, -inv_b);
      normal_matrix.noalias() += jac * jac.transpose();
      rhs.noalias() -= jac * rho;
    }
    const Eigen::Vector3d delta = normal_matrix.ldlt().solve(rhs);
    if (!delta.allFinite()) break;

    double step = 1.0;
    bool accepted = false;
    Vec3 n_next;
    double c_next = 0.0;
    double f_next = kInf;
    for (int ls = 0; ls < 40; ++ls) {
      n_next = (n + step * (delta(0) * t1 + delta(1) * t2)).normalized();
      c_next = c + step * delta(2);
      f_next = centered_objective(view, n_next, c_next, eps);
      if (f_next < f) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No representable decrease along the Gauss-Newton direction.
      converged = true;
      break;
    }
    const double decrease = f - f_next;
    n = n_next;
    c = c_next;
    const double previous = f;
    f = f_next;
    if (decrease <= options.relative_tolerance * previous || f <= noise_floor) {
      converged = true;
      ++iteration;
      break;
    }
  }
  out.iterations = iteration;
  if (!converged) {
    out.status = FitStatus::NoConvergence;
    return out;
  }

  orient(n, c);
  for (const auto& q : view) {
    const double rho = (n.dot(q.offset) - c) / n.dot(q.direction);
    if (!(q.range - rho > 0.0)) {
      out.status = FitStatus::Infeasible;
      return out;
    }
  }
  out.status = FitStatus::Ok;
  out.plane = {centroid + c * n, n};
  out.residual = f;
  return out;
}

RadialFit fit_plane_radial_or_throw(const OrganizedScan& scan, std::span<const RayIndex> members,
                                    const RadialFitOptions& options) {
  RadialFit fit = fit_plane_radial(scan, members, options);
  switch (fit.status) {
    case FitStatus::Ok:
      return fit;
    case FitStatus::DegenerateSet:
      throw Error(ErrorCode::DegenerateSet, "member endpoints are collinear");
    case FitStatus::NoConvergence:
      throw Error(ErrorCode::NoConvergence, "radial refinement did not converge");
    case FitStatus::Infeasible:
      throw Error(ErrorCode::NoConvergence, "a member ray is parallel to the fitted plane");
  }
  return fit;
}

}  // namespace planex
