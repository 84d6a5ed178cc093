#include "planex/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "planex/geometry.hpp"
#include "planex/rng.hpp"

namespace planex {

namespace {

constexpr double kPlanarTol = 1e-9;
constexpr double kInsideTol = 1e-12;

bool inside_face(const Face& face, const Vec3& p) {
  const std::size_t n = face.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = face.vertices[i];
    const Vec3& b = face.vertices[(i + 1) % n];
    if ((b - a).cross(p - a).dot(face.normal) < -kInsideTol) return false;
  }
  return true;
}

}  // namespace

Face make_face(std::uint32_t id, std::vector<Vec3> vertices) {
  if (vertices.size() < 3) {
    throw Error(ErrorCode::InvalidRecipe, "face " + std::to_string(id) + " has < 3 vertices");
  }
  // Newell's method; the normal follows the winding.
  Vec3 n = Vec3::Zero();
  Vec3 centroid = Vec3::Zero();
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec3& a = vertices[i];
    const Vec3& b = vertices[(i + 1) % vertices.size()];
    n += a.cross(b);
    centroid += a;
  }
  centroid /= static_cast<double>(vertices.size());
  if (!(n.norm() > 1e-15)) {
    throw Error(ErrorCode::InvalidRecipe, "face " + std::to_string(id) + " has zero area");
  }
  Face face;
  face.id = id;
  face.normal = n.normalized();
  face.offset = face.normal.dot(centroid);
  face.vertices = std::move(vertices);
  return face;
}

void SceneModel::validate() const {
  if (faces.empty()) throw Error(ErrorCode::InvalidRecipe, "scene has no faces");
  std::set<std::uint32_t> ids;
  for (const Face& f : faces) {
    const std::string tag = "face " + std::to_string(f.id);
    if (f.id == 0) throw Error(ErrorCode::InvalidRecipe, "face id 0 is reserved");
    if (!ids.insert(f.id).second) throw Error(ErrorCode::InvalidRecipe, tag + " repeats");
    if (f.vertices.size() < 3) throw Error(ErrorCode::InvalidRecipe, tag + " has < 3 vertices");
    for (const Vec3& v : f.vertices) {
      if (std::abs(f.normal.dot(v) - f.offset) > kPlanarTol) {
        throw Error(ErrorCode::InvalidRecipe, tag + " is not planar");
      }
    }
  }
}

Vec3 ScanPattern::direction(int row, int col) const {
  const auto lerp = [](double lo, double hi, int i, int count) {
    if (count <= 1) return 0.5 * (lo + hi);
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  };
  const double az = lerp(azimuth_min, azimuth_max, col, azimuth_count);
  const double el = lerp(elevation_max, elevation_min, row, elevation_count);
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

void ScanPattern::validate() const {
  if (azimuth_count < 1 || elevation_count < 1) {
    throw Error(ErrorCode::InvalidRecipe, "scan pattern counts must be >= 1");
  }
  if (!(azimuth_min <= azimuth_max) || !(elevation_min <= elevation_max)) {
    throw Error(ErrorCode::InvalidRecipe, "scan pattern ranges must be nonempty");
  }
  if (elevation_min < -M_PI / 2 || elevation_max > M_PI / 2) {
    throw Error(ErrorCode::InvalidRecipe, "elevation must lie in [-pi/2, pi/2]");
  }
}

std::optional<Hit> cast_ray(const SceneModel& scene, const Vec3& origin, const Vec3& direction) {
  std::optional<Hit> best;
  for (std::size_t i = 0; i < scene.faces.size(); ++i) {
    const Face& f = scene.faces[i];
    const double nv = f.normal.dot(direction);
    if (nv == 0.0) continue;
    const double t = (f.offset - f.normal.dot(origin)) / nv;
    if (!(t > 0.0)) continue;
    if (best && t >= best->range) continue;
    if (!inside_face(f, origin + t * direction)) continue;
    best = Hit{t, f.id, i};
  }
  return best;
}

namespace {

SyntheticScan make_synthetic(const ScanPattern& pattern, double sigma) {
  pattern.validate();
  SyntheticScan out;
  out.scan = OrganizedScan(pattern.width(), pattern.height(), pattern.origin, sigma);
  out.face_ids.assign(out.scan.size(), 0);
  return out;
}

void finish_truth(const SceneModel& scene, SyntheticScan& out) {
  Segmentation truth(out.scan.width(), out.scan.height());
  for (std::size_t k = 0; k < out.face_ids.size(); ++k) truth.labels[k] = out.face_ids[k];
  for (const Face& f : scene.faces) {
    PlaneRecord rec{f.normal, f.offset, 0, true};
    if (f.normal.dot(out.scan.origin()) - f.offset < 0.0) {
      rec.normal = -rec.normal;
      rec.offset = -rec.offset;
    }
    truth.planes[f.id] = rec;
  }
  truth.sync_planes();
  out.truth = std::move(truth);
}

}  // namespace

SyntheticScan raycast(const SceneModel& scene, const ScanPattern& pattern) {
  scene.validate();
  SyntheticScan out = make_synthetic(pattern, 1e-3);
  for (int row = 0; row < pattern.height(); ++row) {
    for (int col = 0; col < pattern.width(); ++col) {
      const std::size_t k = out.scan.index(row, col);
      const Vec3 v = pattern.direction(row, col);
      const auto hit = cast_ray(scene, pattern.origin, v);
      if (!hit) continue;
      out.scan.set_ray(k, v, hit->range);
      out.face_ids[k] = hit->face_id;
    }
  }
  finish_truth(scene, out);
  return out;
}

SyntheticScan add_noise(const SceneModel& scene, const ScanPattern& pattern,
                        const NoiseModel& noise) {
  if (noise.sigma_angular < 0.0 || noise.sigma_radial < 0.0) {
    throw Error(ErrorCode::InvalidRecipe, "noise sigmas must be nonnegative");
  }
  scene.validate();
  SyntheticScan out = make_synthetic(pattern, noise.sigma_radial > 0.0 ? noise.sigma_radial : 1e-3);
  for (int row = 0; row < pattern.height(); ++row) {
    for (int col = 0; col < pattern.width(); ++col) {
      const std::size_t k = out.scan.index(row, col);
      CounterRng rng(noise.seed, k);
      const double angle = noise.sigma_angular * rng.normal();
      const double phi = 2.0 * M_PI * rng.uniform();
      const double dr = noise.sigma_radial * rng.normal();

      Vec3 v = pattern.direction(row, col);
      if (angle != 0.0) {
        const auto [t1, t2] = tangent_basis(v);
        const Vec3 axis = std::cos(phi) * t1 + std::sin(phi) * t2;
        v = (std::cos(angle) * v + std::sin(angle) * axis.cross(v)).normalized();
      }
      const auto hit = cast_ray(scene, pattern.origin, v);
      if (!hit) continue;
      const double range = hit->range + dr;
      if (!(range > 0.0)) continue;
      out.scan.set_ray(k, v, range);
      out.face_ids[k] = hit->face_id;
    }
  }
  finish_truth(scene, out);
  return out;
}

Segmentation component_truth(const SceneModel& scene, const std::vector<std::uint32_t>& face_ids,
                             int width, int height, const Vec3& origin, std::size_t min_pixels) {
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (face_ids.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "face id grid does not match dimensions");
  }
  std::vector<const Face*> by_id;
  for (const Face& f : scene.faces) {
    if (f.id >= by_id.size()) by_id.resize(f.id + 1, nullptr);
    by_id[f.id] = &f;
  }

  Segmentation seg(width, height);
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> component;
  Label next = 1;
  for (std::size_t start = 0; start < n; ++start) {
    const std::uint32_t id = face_ids[start];
    if (id == 0 || seen[start]) continue;
    component.clear();
    component.push_back(start);
    seen[start] = 1;
    for (std::size_t head = 0; head < component.size(); ++head) {
      const std::size_t k = component[head];
      const int r = static_cast<int>(k / width);
      const int c = static_cast<int>(k % width);
      const int dr[4] = {-1, 0, 0, 1};
      const int dc[4] = {0, -1, 1, 0};
      for (int i = 0; i < 4; ++i) {
        const int rr = r + dr[i];
        const int cc = c + dc[i];
        if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
        const std::size_t j = static_cast<std::size_t>(rr) * width + cc;
        if (seen[j] || face_ids[j] != id) continue;
        seen[j] = 1;
        component.push_back(j);
      }
    }
    if (component.size() < min_pixels) continue;
    for (const std::size_t k : component) seg.labels[k] = next;
    PlaneRecord rec;
    rec.member_count = component.size();
    if (id < by_id.size() && by_id[id] != nullptr) {
      rec.normal = by_id[id]->normal;
      rec.offset = by_id[id]->offset;
      rec.has_geometry = true;
      if (rec.normal.dot(origin) - rec.offset < 0.0) {
        rec.normal = -rec.normal;
        rec.offset = -rec.offset;
      }
    }
    seg.planes[next] = rec;
    ++next;
  }
  return seg;
}

std::vector<std::vector<Vec3>> convex_hull_faces(const std::vector<Vec3>& points) {
  const std::size_t n = points.size();
  if (n < 4) throw Error(ErrorCode::InvalidRecipe, "hull needs at least four points");
  double extent = 0.0;
  for (const Vec3& p : points) extent = std::max(extent, (p - points[0]).norm());
  const double tol = 1e-9 * std::max(extent, 1.0);

  std::vector<std::vector<Vec3>> faces;
  std::vector<std::vector<std::size_t>> seen_sets;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        Vec3 normal = (points[j] - points[i]).cross(points[k] - points[i]);
        if (normal.norm() <= tol * extent) continue;
        normal.normalize();
        double offset = normal.dot(points[i]);
        bool above = false;
        bool below = false;
        for (const Vec3& p : points) {
          const double d = normal.dot(p) - offset;
          above |= d > tol;
          below |= d < -tol;
        }
        if (above && below) continue;
        if (!above && !below) throw Error(ErrorCode::InvalidRecipe, "hull points are coplanar");
        if (above) {
          normal = -normal;
          offset = -offset;
        }
        std::vector<std::size_t> on;
        for (std::size_t m = 0; m < n; ++m) {
          if (std::abs(normal.dot(points[m]) - offset) <= tol) on.push_back(m);
        }
        if (std::find(seen_sets.begin(), seen_sets.end(), on) != seen_sets.end()) continue;
        seen_sets.push_back(on);

        // Drop duplicate points, then order counterclockwise about the normal.
        std::vector<Vec3> verts;
        for (const std::size_t m : on) {
          const bool dup = std::any_of(verts.begin(), verts.end(), [&](const Vec3& v) {
            return (v - points[m]).norm() <= tol;
          });
          if (!dup) verts.push_back(points[m]);
        }
        Vec3 center = Vec3::Zero();
        for (const Vec3& v : verts) center += v;
        center /= static_cast<double>(verts.size());
        const Vec3 uu = tangent_basis(normal)[0];
        const Vec3 ww = normal.cross(uu);
        std::sort(verts.begin(), verts.end(), [&](const Vec3& a, const Vec3& b) {
          return std::atan2((a - center).dot(ww), (a - center).dot(uu)) <
                 std::atan2((b - center).dot(ww), (b - center).dot(uu));
        });
        // Remove vertices lying on an edge between their neighbors.
        std::vector<Vec3> corners;
        for (std::size_t m = 0; m < verts.size(); ++m) {
          const Vec3& prev = verts[(m + verts.size() - 1) % verts.size()];
          const Vec3& next = verts[(m + 1) % verts.size()];
          if ((verts[m] - prev).cross(next - verts[m]).norm() > tol * extent) {
            corners.push_back(verts[m]);
          }
        }
        if (corners.size() >= 3) faces.push_back(std::move(corners));
      }
    }
  }
  if (faces.size() < 4) throw Error(ErrorCode::InvalidRecipe, "degenerate hull");
  return faces;
}

}  // namespace planex
