#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "planex/segmentation.hpp"
#include "planex/types.hpp"

namespace planex {

/// Planar convex polygon with a ground-truth id. The plane is n·x = offset.
struct Face {
  std::uint32_t id = 0;
  std::vector<Vec3> vertices;
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
};

/// Builds a face from its vertices (in boundary order), computing the plane.
/// Throws InvalidRecipe for fewer than three vertices or a zero-area polygon.
Face make_face(std::uint32_t id, std::vector<Vec3> vertices);

struct SceneModel {
  std::string name;
  std::vector<Face> faces;

  /// Throws InvalidRecipe if a face has < 3 vertices, is not planar to
  /// 1e-9 m, or if face ids repeat or are zero.
  void validate() const;
};

/// Equiangular spherical grid. Row 0 has the highest elevation; column 0
/// the lowest azimuth. Direction = (cos el cos az, cos el sin az, sin el).
struct ScanPattern {
  Vec3 origin = Vec3::Zero();
  double azimuth_min = 0.0;
  double azimuth_max = 0.0;
  int azimuth_count = 1;
  double elevation_min = 0.0;
  double elevation_max = 0.0;
  int elevation_count = 1;

  int width() const noexcept { return azimuth_count; }
  int height() const noexcept { return elevation_count; }
  Vec3 direction(int row, int col) const;
  void validate() const;
};

struct NoiseModel {
  double sigma_angular = 0.0;  // rad
  double sigma_radial = 0.0;   // m
  std::uint64_t seed = 0;
};

/// A scan with its ground truth. `face_ids` holds the id of the face hit by
/// each pixel (0 = nothing); `truth` is the ground-truth segmentation.
struct SyntheticScan {
  OrganizedScan scan;
  std::vector<std::uint32_t> face_ids;
  Segmentation truth;
};

/// Nearest positive hit of a ray with the scene's faces.
struct Hit {
  double range = 0.0;
  std::uint32_t face_id = 0;
  std::size_t face_index = 0;
};
std::optional<Hit> cast_ray(const SceneModel& scene, const Vec3& origin, const Vec3& direction);

/// Noise-free raycast. `truth` labels every hit pixel with its face id.
SyntheticScan raycast(const SceneModel& scene, const ScanPattern& pattern);

/// Raycast with noise. Each ray direction is rotated by an angle drawn from
/// N(0, sigma_angular^2) about a uniformly random perpendicular axis, the
/// perturbed ray is intersected with the scene, and N(0, sigma_radial^2) is
/// added to the range. Pixel k draws from stream k of the seed, so results
/// are independent of evaluation order. Zero sigmas reproduce raycast().
SyntheticScan add_noise(const SceneModel& scene, const ScanPattern& pattern,
                        const NoiseModel& noise);

/// Splits every face label into 4-connected components, drops components
/// smaller than `min_pixels`, and numbers the rest 1.. in order of first
/// pixel. Plane records carry the face plane, oriented toward `origin`.
Segmentation component_truth(const SceneModel& scene, const std::vector<std::uint32_t>& face_ids,
                             int width, int height, const Vec3& origin, std::size_t min_pixels);

/// Vertices of the convex hull faces of a point set, each in boundary order
/// and wound counterclockwise seen from outside. Throws InvalidRecipe for
/// flat or degenerate input.
std::vector<std::vector<Vec3>> convex_hull_faces(const std::vector<Vec3>& points);

// Scene recipes -----------------------------------------------------------

struct ObjectSpec {
  /// box: params [sx, sy, sz]. wedge: [sx, sy, sz], a ramp rising along +x.
  /// frustum: [sx, sy, sz, top_scale], top_scale 0 gives a pyramid.
  /// hull: params unused, `points` relative to the pose.
  std::string type;
  std::vector<double> params;
  std::vector<Vec3> points;
  /// Center of the base, m, and rotation about +z, rad.
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
};

struct RandomObjects {
  int count = 0;
  std::vector<std::string> types{"box", "wedge", "frustum"};
  double min_size = 0.3;
  double max_size = 1.2;
  /// Minimum gap between an object's footprint and the walls, m.
  double margin = 0.2;
  /// Minimum horizontal gap between an object's footprint and the sensor, m.
  double sensor_clearance = 0.8;
};

struct SceneRecipe {
  std::string name = "scene";
  Vec3 room_min{-3.0, -3.5, 0.0};
  Vec3 room_max{3.0, 3.5, 3.0};
  std::vector<ObjectSpec> objects;
  RandomObjects random;
  ScanPattern sensor;
  NoiseModel noise;
  /// Ground-truth regions with fewer pixels are labeled 0.
  std::size_t min_region_pixels = 1;

  void validate() const;
};

/// Parses a JSON recipe. Throws InvalidRecipe with the offending field.
SceneRecipe parse_recipe(const std::string& json_text);
SceneRecipe load_recipe(const std::string& path);
std::string recipe_to_json(const SceneRecipe& recipe);

/// Room faces get ids 1..6 (floor, ceiling, x-min, x-max, y-min, y-max);
/// object faces follow in order. Random objects are placed from `seed`.
SceneModel build_scene(const SceneRecipe& recipe, std::uint64_t seed);

/// One noisy scan per seed. The seed drives the object layout, and the
/// noise seed is derived from it and the recipe's noise seed.
std::vector<SyntheticScan> generate_benchmark(const SceneRecipe& recipe,
                                              const std::vector<std::uint64_t>& seeds);

SyntheticScan generate_scan(const SceneRecipe& recipe, std::uint64_t seed);

}  // namespace planex
