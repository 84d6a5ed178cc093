#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "planex/rng.hpp"
#include "planex/synth.hpp"

namespace planex {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidRecipe, what); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(where + " must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) bad("unknown field " + where + "." + it.key());
  }
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where + " must be a number");
  return j.get<double>();
}

Vec3 get_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) bad(where + " must be a 3-element array");
  return {get_number(j[0], where), get_number(j[1], where), get_number(j[2], where)};
}

std::array<double, 2> get_pair(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) bad(where + " must be a 2-element array");
  return {get_number(j[0], where), get_number(j[1], where)};
}

std::vector<double> get_numbers(const json& j, const std::string& where) {
  if (!j.is_array()) bad(where + " must be an array");
  std::vector<double> out;
  for (const json& v : j) out.push_back(get_number(v, where));
  return out;
}

std::uint64_t get_seed(const json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    bad(where + " must be a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

ObjectSpec parse_object(const json& j, const std::string& where) {
  check_keys(j, where, {"type", "params", "points", "pose"});
  ObjectSpec obj;
  if (!j.contains("type") || !j["type"].is_string()) bad(where + ".type must be a string");
  obj.type = j["type"].get<std::string>();
  if (j.contains("params")) obj.params = get_numbers(j["params"], where + ".params");
  if (j.contains("points")) {
    if (!j["points"].is_array()) bad(where + ".points must be an array");
    for (const json& p : j["points"]) obj.points.push_back(get_vec3(p, where + ".points"));
  }
  if (j.contains("pose")) {
    const json& pose = j["pose"];
    check_keys(pose, where + ".pose", {"position", "yaw"});
    if (pose.contains("position")) obj.position = get_vec3(pose["position"], where + ".position");
    if (pose.contains("yaw")) obj.yaw = get_number(pose["yaw"], where + ".yaw");
  }
  return obj;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

std::vector<Vec3> local_points(const ObjectSpec& obj) {
  const auto need = [&](std::size_t n) {
    if (obj.params.size() != n) {
      bad(obj.type + " needs " + std::to_string(n) + " params");
    }
    for (const double p : obj.params) {
      if (!(p >= 0.0) || !std::isfinite(p)) bad(obj.type + " params must be finite and >= 0");
    }
  };
  std::vector<Vec3> pts;
  if (obj.type == "box") {
    need(3);
    const double x = obj.params[0] / 2, y = obj.params[1] / 2, z = obj.params[2];
    for (const double zz : {0.0, z}) {
      for (const double yy : {-y, y}) {
        for (const double xx : {-x, x}) pts.emplace_back(xx, yy, zz);
      }
    }
  } else if (obj.type == "wedge") {
    need(3);
    const double x = obj.params[0] / 2, y = obj.params[1] / 2, z = obj.params[2];
    for (const double yy : {-y, y}) {
      pts.emplace_back(-x, yy, 0.0);
      pts.emplace_back(x, yy, 0.0);
      pts.emplace_back(x, yy, z);
    }
  } else if (obj.type == "frustum") {
    need(4);
    const double x = obj.params[0] / 2, y = obj.params[1] / 2, z = obj.params[2];
    const double s = obj.params[3];
    if (s > 1.0) bad("frustum top_scale must lie in [0, 1]");
    for (const double yy : {-y, y}) {
      for (const double xx : {-x, x}) pts.emplace_back(xx, yy, 0.0);
    }
    if (s == 0.0) {
      pts.emplace_back(0.0, 0.0, z);
    } else {
      for (const double yy : {-y, y}) {
        for (const double xx : {-x, x}) pts.emplace_back(s * xx, s * yy, z);
      }
    }
  } else if (obj.type == "hull") {
    pts = obj.points;
  } else {
    bad("unknown object type '" + obj.type + "'");
  }
  return pts;
}

void add_object(SceneModel& scene, const ObjectSpec& obj, double floor_z) {
  const double c = std::cos(obj.yaw);
  const double s = std::sin(obj.yaw);
  std::vector<Vec3> world;
  for (const Vec3& p : local_points(obj)) {
    world.emplace_back(c * p.x() - s * p.y() + obj.position.x(),
                       s * p.x() + c * p.y() + obj.position.y(), p.z() + obj.position.z());
  }
  std::uint32_t next_id = 1;
  for (const Face& f : scene.faces) next_id = std::max(next_id, f.id + 1);
  for (auto& verts : convex_hull_faces(world)) {
    Face face = make_face(next_id, std::move(verts));
    // A base resting on the floor can never be seen and would coincide with it.
    const bool on_floor = face.normal.z() < -1.0 + 1e-12 && std::abs(face.offset + floor_z) < 1e-9;
    if (on_floor) continue;
    scene.faces.push_back(std::move(face));
    ++next_id;
  }
}

/// Half-diagonal of an object's footprint, for placement checks.
double footprint_radius(const ObjectSpec& obj) {
  double r = 0.0;
  for (const Vec3& p : local_points(obj)) r = std::max(r, std::hypot(p.x(), p.y()));
  return r;
}

}  // namespace

void SceneRecipe::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!(room_min[i] < room_max[i])) bad("room.min must be below room.max on every axis");
  }
  for (int i = 0; i < 3; ++i) {
    if (!(sensor.origin[i] > room_min[i] && sensor.origin[i] < room_max[i])) {
      bad("sensor.origin must lie inside the room");
    }
  }
  sensor.validate();
  if (noise.sigma_angular < 0.0 || noise.sigma_radial < 0.0) bad("noise sigmas must be >= 0");
  if (random.count < 0) bad("random_objects.count must be >= 0");
  if (random.count > 0) {
    if (random.types.empty()) bad("random_objects.types must not be empty");
    for (const std::string& t : random.types) {
      if (t != "box" && t != "wedge" && t != "frustum") {
        bad("random object type '" + t + "' must be box, wedge or frustum");
      }
    }
    if (!(random.min_size > 0.0 && random.min_size <= random.max_size)) {
      bad("random_objects sizes must satisfy 0 < min_size <= max_size");
    }
    if (random.margin < 0.0 || random.sensor_clearance < 0.0) {
      bad("random_objects margin and clearance must be >= 0");
    }
  }
}

SceneRecipe parse_recipe(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  check_keys(j, "recipe",
             {"name", "room", "objects", "random_objects", "sensor", "noise", "min_region_pixels"});
  SceneRecipe r;
  if (j.contains("name")) {
    if (!j["name"].is_string()) bad("name must be a string");
    r.name = j["name"].get<std::string>();
  }
  if (j.contains("room")) {
    check_keys(j["room"], "room", {"min", "max"});
    if (j["room"].contains("min")) r.room_min = get_vec3(j["room"]["min"], "room.min");
    if (j["room"].contains("max")) r.room_max = get_vec3(j["room"]["max"], "room.max");
  }
  if (j.contains("objects")) {
    if (!j["objects"].is_array()) bad("objects must be an array");
    for (std::size_t i = 0; i < j["objects"].size(); ++i) {
      r.objects.push_back(parse_object(j["objects"][i], "objects[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("random_objects")) {
    const json& ro = j["random_objects"];
    check_keys(ro, "random_objects",
               {"count", "types", "min_size", "max_size", "margin", "sensor_clearance"});
    if (ro.contains("count")) {
      if (!ro["count"].is_number_integer()) bad("random_objects.count must be an integer");
      r.random.count = ro["count"].get<int>();
    }
    if (ro.contains("types")) {
      if (!ro["types"].is_array()) bad("random_objects.types must be an array");
      r.random.types.clear();
      for (const json& t : ro["types"]) {
        if (!t.is_string()) bad("random_objects.types must hold strings");
        r.random.types.push_back(t.get<std::string>());
      }
    }
    if (ro.contains("min_size")) r.random.min_size = get_number(ro["min_size"], "min_size");
    if (ro.contains("max_size")) r.random.max_size = get_number(ro["max_size"], "max_size");
    if (ro.contains("margin")) r.random.margin = get_number(ro["margin"], "margin");
    if (ro.contains("sensor_clearance")) {
      r.random.sensor_clearance = get_number(ro["sensor_clearance"], "sensor_clearance");
    }
  }
  if (!j.contains("sensor")) bad("missing field sensor");
  {
    const json& s = j["sensor"];
    check_keys(s, "sensor", {"origin", "azimuth", "elevation", "counts"});
    for (const char* key : {"origin", "azimuth", "elevation", "counts"}) {
      if (!s.contains(key)) bad(std::string("missing field sensor.") + key);
    }
    r.sensor.origin = get_vec3(s["origin"], "sensor.origin");
    const auto az = get_pair(s["azimuth"], "sensor.azimuth");
    const auto el = get_pair(s["elevation"], "sensor.elevation");
    r.sensor.azimuth_min = az[0];
    r.sensor.azimuth_max = az[1];
    r.sensor.elevation_min = el[0];
    r.sensor.elevation_max = el[1];
    const json& counts = s["counts"];
    if (!counts.is_array() || counts.size() != 2 || !counts[0].is_number_integer() ||
        !counts[1].is_number_integer()) {
      bad("sensor.counts must be [columns, rows] integers");
    }
    r.sensor.azimuth_count = counts[0].get<int>();
    r.sensor.elevation_count = counts[1].get<int>();
  }
  if (j.contains("noise")) {
    const json& n = j["noise"];
    check_keys(n, "noise", {"sigma_ang_rad", "sigma_rad_m", "seed"});
    if (n.contains("sigma_ang_rad")) r.noise.sigma_angular = get_number(n["sigma_ang_rad"], "noise.sigma_ang_rad");
    if (n.contains("sigma_rad_m")) r.noise.sigma_radial = get_number(n["sigma_rad_m"], "noise.sigma_rad_m");
    if (n.contains("seed")) r.noise.seed = get_seed(n["seed"], "noise.seed");
  }
  if (j.contains("min_region_pixels")) {
    r.min_region_pixels = get_seed(j["min_region_pixels"], "min_region_pixels");
  }
  r.validate();
  // Fail early on malformed objects.
  for (const ObjectSpec& obj : r.objects) local_points(obj);
  return r;
}

SceneRecipe load_recipe(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open recipe " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_recipe(ss.str());
}

std::string recipe_to_json(const SceneRecipe& r) {
  json j;
  j["name"] = r.name;
  j["room"] = {{"min", vec_json(r.room_min)}, {"max", vec_json(r.room_max)}};
  j["objects"] = json::array();
  for (const ObjectSpec& o : r.objects) {
    json obj{{"type", o.type},
             {"params", o.params},
             {"pose", {{"position", vec_json(o.position)}, {"yaw", o.yaw}}}};
    if (!o.points.empty()) {
      obj["points"] = json::array();
      for (const Vec3& p : o.points) obj["points"].push_back(vec_json(p));
    }
    j["objects"].push_back(obj);
  }
  j["random_objects"] = {{"count", r.random.count},
                         {"types", r.random.types},
                         {"min_size", r.random.min_size},
                         {"max_size", r.random.max_size},
                         {"margin", r.random.margin},
                         {"sensor_clearance", r.random.sensor_clearance}};
  j["sensor"] = {{"origin", vec_json(r.sensor.origin)},
                 {"azimuth", {r.sensor.azimuth_min, r.sensor.azimuth_max}},
                 {"elevation", {r.sensor.elevation_min, r.sensor.elevation_max}},
                 {"counts", {r.sensor.azimuth_count, r.sensor.elevation_count}}};
  j["noise"] = {{"sigma_ang_rad", r.noise.sigma_angular},
                {"sigma_rad_m", r.noise.sigma_radial},
                {"seed", r.noise.seed}};
  j["min_region_pixels"] = r.min_region_pixels;
  return j.dump(2);
}

SceneModel build_scene(const SceneRecipe& recipe, std::uint64_t seed) {
  recipe.validate();
  SceneModel scene;
  scene.name = recipe.name;
  const Vec3& a = recipe.room_min;
  const Vec3& b = recipe.room_max;
  // Room faces, wound so their normals point into the room.
  scene.faces.push_back(make_face(1, {{a.x(), a.y(), a.z()}, {b.x(), a.y(), a.z()},
                                      {b.x(), b.y(), a.z()}, {a.x(), b.y(), a.z()}}));
  scene.faces.push_back(make_face(2, {{a.x(), a.y(), b.z()}, {a.x(), b.y(), b.z()},
                                      {b.x(), b.y(), b.z()}, {b.x(), a.y(), b.z()}}));
  scene.faces.push_back(make_face(3, {{a.x(), a.y(), a.z()}, {a.x(), b.y(), a.z()},
                                      {a.x(), b.y(), b.z()}, {a.x(), a.y(), b.z()}}));
  scene.faces.push_back(make_face(4, {{b.x(), a.y(), a.z()}, {b.x(), a.y(), b.z()},
                                      {b.x(), b.y(), b.z()}, {b.x(), b.y(), a.z()}}));
  scene.faces.push_back(make_face(5, {{a.x(), a.y(), a.z()}, {a.x(), a.y(), b.z()},
                                      {b.x(), a.y(), b.z()}, {b.x(), a.y(), a.z()}}));
  scene.faces.push_back(make_face(6, {{a.x(), b.y(), a.z()}, {b.x(), b.y(), a.z()},
                                      {b.x(), b.y(), b.z()}, {a.x(), b.y(), b.z()}}));

  for (const ObjectSpec& obj : recipe.objects) add_object(scene, obj, a.z());

  const RandomObjects& ro = recipe.random;
  CounterRng rng(seed, 0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  for (int i = 0; i < ro.count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      ObjectSpec obj;
      obj.type = ro.types[rng.below(ro.types.size())];
      const double sx = uniform(ro.min_size, ro.max_size);
      const double sy = uniform(ro.min_size, ro.max_size);
      const double sz = std::min(uniform(ro.min_size, ro.max_size), 0.9 * (b.z() - a.z()));
      obj.params = {sx, sy, sz};
      if (obj.type == "frustum") obj.params.push_back(uniform(0.0, 0.7));
      obj.yaw = uniform(0.0, M_PI);
      const double radius = footprint_radius(obj);
      const double lo_x = a.x() + ro.margin + radius, hi_x = b.x() - ro.margin - radius;
      const double lo_y = a.y() + ro.margin + radius, hi_y = b.y() - ro.margin - radius;
      if (!(lo_x < hi_x && lo_y < hi_y)) continue;
      obj.position = {uniform(lo_x, hi_x), uniform(lo_y, hi_y), a.z()};
      const double gap = std::hypot(obj.position.x() - recipe.sensor.origin.x(),
                                    obj.position.y() - recipe.sensor.origin.y());
      if (gap < radius + ro.sensor_clearance) continue;
      add_object(scene, obj, a.z());
      placed = true;
    }
    if (!placed) bad("could not place random object " + std::to_string(i));
  }
  scene.validate();
  return scene;
}

SyntheticScan generate_scan(const SceneRecipe& recipe, std::uint64_t seed) {
  const SceneModel scene = build_scene(recipe, seed);
  NoiseModel noise = recipe.noise;
  noise.seed = mix64(recipe.noise.seed ^ mix64(seed));
  SyntheticScan out = add_noise(scene, recipe.sensor, noise);
  out.truth = component_truth(scene, out.face_ids, out.scan.width(), out.scan.height(),
                              out.scan.origin(), recipe.min_region_pixels);
  return out;
}

std::vector<SyntheticScan> generate_benchmark(const SceneRecipe& recipe,
                                              const std::vector<std::uint64_t>& seeds) {
  std::vector<SyntheticScan> out;
  out.reserve(seeds.size());
  for (const std::uint64_t seed : seeds) out.push_back(generate_scan(recipe, seed));
  return out;
}

}  // namespace planex
