#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace planex {

using Vec3 = Eigen::Vector3d;
using RayIndex = std::uint32_t;

enum class ErrorCode {
  EmptyScan,
  DegenerateSet,
  NoConvergence,
  InconsistentAssignment,
  StaleCandidate,
  TooFewPoints,
  InvalidRecipe,
  DimensionMismatch,
  ParseError,
  IoError,
  NoPlanes,
  EmptyGrid,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// One laser measurement. `point` is the measured endpoint and is the
/// authoritative datum; direction and range are derived from it.
struct Ray {
  Vec3 start = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double range = 0.0;
  Vec3 point = Vec3::Zero();
  bool valid = false;
};

/// Row-major grid of rays sharing a single sensor origin.
class OrganizedScan {
 public:
  OrganizedScan() = default;
  /// All cells start invalid.
  OrganizedScan(int width, int height, const Vec3& origin, double noise_sigma);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return rays_.size(); }
  const Vec3& origin() const noexcept { return origin_; }
  double noise_sigma() const noexcept { return noise_sigma_; }

  const Ray& ray(std::size_t index) const { return rays_[index]; }
  const Ray& at(int row, int col) const { return rays_[index(row, col)]; }
  std::span<const Ray> rays() const noexcept { return rays_; }

  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }
  int row_of(std::size_t index) const noexcept { return static_cast<int>(index / width_); }
  int col_of(std::size_t index) const noexcept { return static_cast<int>(index % width_); }

  /// Sets a valid measurement from its endpoint; direction and range follow
  /// from the origin. Throws InvalidArgument if the endpoint is the origin.
  void set_endpoint(std::size_t index, const Vec3& point);
  /// Sets a valid measurement from direction and range via its endpoint,
  /// so the stored direction and range may differ in the last bits.
  void set_ray(std::size_t index, const Vec3& direction, double range);
  void set_invalid(std::size_t index);

  std::size_t valid_count() const noexcept;

  bool operator==(const OrganizedScan& other) const;

 private:
  int width_ = 0;
  int height_ = 0;
  Vec3 origin_ = Vec3::Zero();
  double noise_sigma_ = 1.0;
  std::vector<Ray> rays_;
};

/// Infinite plane through `support` with unit `normal`.
struct PlaneGeometry {
  Vec3 support = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();

  double offset() const { return normal.dot(support); }
};

/// A plane hypothesis together with the rays it explains. Atomic planes
/// explain exactly one ray; regular planes are fitted to three or more.
struct Plane {
  PlaneGeometry geometry;
  std::vector<RayIndex> members;
  bool atomic = false;
};

}  // namespace planex
