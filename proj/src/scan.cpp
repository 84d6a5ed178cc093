#include "planex/types.hpp"

#include <algorithm>
#include <cmath>

namespace planex {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyScan: return "EmptyScan";
    case ErrorCode::DegenerateSet: return "DegenerateSet";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::InconsistentAssignment: return "InconsistentAssignment";
    case ErrorCode::StaleCandidate: return "StaleCandidate";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::InvalidRecipe: return "InvalidRecipe";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NoPlanes: return "NoPlanes";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

OrganizedScan::OrganizedScan(int width, int height, const Vec3& origin, double noise_sigma)
    : width_(width), height_(height), origin_(origin), noise_sigma_(noise_sigma) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "scan dimensions must be positive");
  }
  if (!(noise_sigma > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "noise sigma must be positive");
  }
  rays_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (auto& ray : rays_) {
    ray.start = origin;
  }
}

void OrganizedScan::set_endpoint(std::size_t index, const Vec3& point) {
  Ray& ray = rays_.at(index);
  const Vec3 delta = point - origin_;
  const double range = delta.norm();
  if (!(range > 0.0) || !std::isfinite(range)) {
    throw Error(ErrorCode::InvalidArgument, "endpoint must differ from the sensor origin");
  }
  ray.start = origin_;
  ray.point = point;
  ray.range = range;
  ray.direction = delta / range;
  ray.valid = true;
}

void OrganizedScan::set_ray(std::size_t index, const Vec3& direction, double range) {
  if (!(range > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "range must be positive");
  }
  // Canonicalize through the endpoint so that saved scans reload exactly.
  set_endpoint(index, origin_ + range * direction.normalized());
}

void OrganizedScan::set_invalid(std::size_t index) {
  Ray& ray = rays_.at(index);
  ray = Ray{};
  ray.start = origin_;
}

std::size_t OrganizedScan::valid_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(rays_.begin(), rays_.end(), [](const Ray& r) { return r.valid; }));
}

bool OrganizedScan::operator==(const OrganizedScan& other) const {
  if (width_ != other.width_ || height_ != other.height_ || origin_ != other.origin_ ||
      noise_sigma_ != other.noise_sigma_) {
    return false;
  }
  for (std::size_t i = 0; i < rays_.size(); ++i) {
    const Ray& a = rays_[i];
    const Ray& b = other.rays_[i];
    if (a.valid != b.valid) return false;
    if (!a.valid) continue;
    if (a.start != b.start || a.direction != b.direction || a.range != b.range ||
        a.point != b.point) {
      return false;
    }
  }
  return true;
}

}  // namespace planex
