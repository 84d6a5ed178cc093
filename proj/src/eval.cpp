#include "planex/eval.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "planex/geometry.hpp"

namespace planex {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_dims(const Segmentation& a, const Segmentation& b) {
  if (a.width != b.width || a.height != b.height || a.labels.size() != b.labels.size()) {
    throw Error(ErrorCode::DimensionMismatch, "segmentations differ in size");
  }
}

std::map<Label, std::size_t> region_sizes(const Segmentation& s) {
  std::map<Label, std::size_t> sizes;
  for (const Label l : s.labels) {
    if (l != 0) ++sizes[l];
  }
  return sizes;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

HooverReport compare(const Segmentation& gt, const Segmentation& ms, double threshold) {
  check_dims(gt, ms);
  if (!(threshold > 0.5 && threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0.5, 1]");
  }
  const double t = threshold;
  const auto gt_size = region_sizes(gt);
  const auto ms_size = region_sizes(ms);
  // Overlap table, sparse in both directions.
  std::map<Label, std::map<Label, std::size_t>> by_gt;
  std::map<Label, std::map<Label, std::size_t>> by_ms;
  for (std::size_t k = 0; k < gt.labels.size(); ++k) {
    const Label g = gt.labels[k];
    const Label m = ms.labels[k];
    if (g == 0 || m == 0) continue;
    ++by_gt[g][m];
    ++by_ms[m][g];
  }

  HooverReport rep;
  rep.threshold = t;
  rep.gt_regions = gt_size.size();
  rep.ms_regions = ms_size.size();
  std::set<Label> gt_done;
  std::set<Label> ms_done;

  for (const auto& [g, row] : by_gt) {
    for (const auto& [m, o] : row) {
      const double ov = static_cast<double>(o);
      if (ov >= t * static_cast<double>(gt_size.at(g)) &&
          ov >= t * static_cast<double>(ms_size.at(m)) && !gt_done.count(g) &&
          !ms_done.count(m)) {
        rep.correct_pairs.push_back({g, {m}});
        gt_done.insert(g);
        ms_done.insert(m);
      }
    }
  }

  for (const auto& [g, row] : by_gt) {
    if (gt_done.count(g)) continue;
    std::vector<Label> parts;
    double sum = 0.0;
    for (const auto& [m, o] : row) {
      if (ms_done.count(m)) continue;
      if (static_cast<double>(o) >= t * static_cast<double>(ms_size.at(m))) {
        parts.push_back(m);
        sum += static_cast<double>(o);
      }
    }
    if (parts.size() >= 2 && sum >= t * static_cast<double>(gt_size.at(g))) {
      rep.over_matches.push_back({g, parts});
      gt_done.insert(g);
      ms_done.insert(parts.begin(), parts.end());
    }
  }

  for (const auto& [m, row] : by_ms) {
    if (ms_done.count(m)) continue;
    std::vector<Label> parts;
    double sum = 0.0;
    for (const auto& [g, o] : row) {
      if (gt_done.count(g)) continue;
      if (static_cast<double>(o) >= t * static_cast<double>(gt_size.at(g))) {
        parts.push_back(g);
        sum += static_cast<double>(o);
      }
    }
    if (parts.size() >= 2 && sum >= t * static_cast<double>(ms_size.at(m))) {
      rep.under_matches.push_back({m, parts});
      ms_done.insert(m);
      gt_done.insert(parts.begin(), parts.end());
    }
  }

  for (const auto& [g, n] : gt_size) {
    if (!gt_done.count(g)) rep.missed_labels.push_back(g);
  }
  for (const auto& [m, n] : ms_size) {
    if (!ms_done.count(m)) rep.spurious_labels.push_back(m);
  }

  rep.correct = rep.correct_pairs.size();
  rep.oversegmented = rep.over_matches.size();
  rep.undersegmented = rep.under_matches.size();
  rep.missed = rep.missed_labels.size();
  rep.spurious = rep.spurious_labels.size();
  rep.f = rep.gt_regions == 0 ? 0.0
                              : static_cast<double>(rep.correct) / static_cast<double>(rep.gt_regions);

  double angle_sum = 0.0;
  std::size_t angle_count = 0;
  std::size_t correct_pixels = 0;
  for (const RegionMatch& pair : rep.correct_pairs) {
    correct_pixels += gt_size.at(pair.gt);
    const auto gi = gt.planes.find(pair.gt);
    const auto mi = ms.planes.find(pair.ms[0]);
    if (gi == gt.planes.end() || mi == ms.planes.end()) continue;
    if (!gi->second.has_geometry || !mi->second.has_geometry) continue;
    const double c = std::min(1.0, std::abs(gi->second.normal.normalized().dot(
                                       mi->second.normal.normalized())));
    angle_sum += std::acos(c) * 180.0 / M_PI;
    ++angle_count;
  }
  rep.mean_angle_deg = angle_count == 0 ? kNaN : angle_sum / static_cast<double>(angle_count);
  rep.k_value = gt.labels.empty() ? 0.0
                                  : static_cast<double>(correct_pixels) /
                                        static_cast<double>(gt.labels.size());
  rep.rmse = kNaN;
  rep.rmse_per_ray = kNaN;
  return rep;
}

double k_value(const Segmentation& gt, const Segmentation& ms, double threshold) {
  return compare(gt, ms, threshold).k_value;
}

double rmse(const OrganizedScan& scan, const Segmentation& seg, const RmseOptions& options) {
  if (seg.width != scan.width() || seg.height != scan.height() ||
      seg.labels.size() != scan.size()) {
    throw Error(ErrorCode::DimensionMismatch, "segmentation does not match scan");
  }
  struct Acc {
    double error = 0.0;
    std::size_t rays = 0;
  };
  std::map<Label, Acc> per_plane;
  for (std::size_t k = 0; k < seg.labels.size(); ++k) {
    const Label l = seg.labels[k];
    if (l == 0) continue;
    const Ray& ray = scan.ray(k);
    if (!ray.valid) {
      throw Error(ErrorCode::InconsistentAssignment,
                  "invalid ray " + std::to_string(k) + " carries label " + std::to_string(l));
    }
    const auto it = seg.planes.find(l);
    if (it == seg.planes.end() || !it->second.has_geometry) {
      throw Error(ErrorCode::InvalidArgument, "label " + std::to_string(l) + " has no geometry");
    }
    const auto t = intersect_ray_plane(ray, it->second.geometry());
    if (!t) {
      throw Error(ErrorCode::InconsistentAssignment,
                  "ray " + std::to_string(k) + " misses plane " + std::to_string(l));
    }
    const double d = ray.range - *t;
    Acc& acc = per_plane[l];
    acc.error += d * d;
    ++acc.rays;
  }
  double error = 0.0;
  std::size_t planes = 0;
  std::size_t rays = 0;
  for (const auto& [l, acc] : per_plane) {
    if (options.apply_cutoff &&
        std::sqrt(acc.error / static_cast<double>(acc.rays)) > options.cutoff) {
      continue;
    }
    error += acc.error;
    rays += acc.rays;
    ++planes;
  }
  if (planes == 0) throw Error(ErrorCode::NoPlanes, "no plane to evaluate");
  const double denom = options.normalization == RmseOptions::Normalization::PerPlane
                           ? static_cast<double>(planes)
                           : static_cast<double>(rays);
  return std::sqrt(error / denom);
}

HooverReport evaluate(const OrganizedScan& scan, const Segmentation& gt, const Segmentation& ms,
                      double threshold, bool rmse_cutoff) {
  HooverReport rep = compare(gt, ms, threshold);
  RmseOptions opts;
  opts.apply_cutoff = rmse_cutoff;
  try {
    rep.rmse = rmse(scan, ms, opts);
    opts.normalization = RmseOptions::Normalization::PerRay;
    rep.rmse_per_ray = rmse(scan, ms, opts);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoPlanes && e.code() != ErrorCode::InconsistentAssignment) throw;
    rep.rmse = rep.rmse_per_ray = kNaN;
  }
  return rep;
}

std::string format_table(const HooverReport& r) {
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof buf, "%8s %8s %12s %14s %8s %5s %5s %5s %5s\n", "f [%]", "k [%]",
                "RMSE [mm]", "RMSE/ray [mm]", "a [deg]", "n_o", "n_u", "n_m", "n_s");
  out += buf;
  const auto num = [](double v, double scale, int prec) {
    if (std::isnan(v)) return std::string("-");
    char b[64];
    std::snprintf(b, sizeof b, "%.*f", prec, v * scale);
    return std::string(b);
  };
  std::snprintf(buf, sizeof buf, "%8s %8s %12s %14s %8s %5zu %5zu %5zu %5zu\n",
                num(r.f, 100.0, 1).c_str(), num(r.k_value, 100.0, 1).c_str(),
                num(r.rmse, 1000.0, 1).c_str(), num(r.rmse_per_ray, 1000.0, 2).c_str(),
                num(r.mean_angle_deg, 1.0, 2).c_str(), r.oversegmented, r.undersegmented,
                r.missed, r.spurious);
  out += buf;
  std::snprintf(buf, sizeof buf, "correct %zu of %zu ground-truth regions, %zu measured regions\n",
                r.correct, r.gt_regions, r.ms_regions);
  out += buf;
  return out;
}

std::string format_records(const HooverReport& r) {
  std::string out;
  const auto line = [&](const char* name, const std::string& value, const char* unit) {
    out += name;
    out += ' ';
    out += value;
    out += ' ';
    out += unit;
    out += '\n';
  };
  const auto count = [](std::size_t n) { return std::to_string(n); };
  line("threshold", fmt(r.threshold), "fraction");
  line("gt_regions", count(r.gt_regions), "count");
  line("ms_regions", count(r.ms_regions), "count");
  line("correct", count(r.correct), "count");
  line("f", fmt(r.f), "fraction");
  line("k", fmt(r.k_value), "fraction");
  line("rmse", fmt(r.rmse), "m");
  line("rmse_per_ray", fmt(r.rmse_per_ray), "m");
  line("alpha", fmt(r.mean_angle_deg), "deg");
  line("n_o", count(r.oversegmented), "count");
  line("n_u", count(r.undersegmented), "count");
  line("n_m", count(r.missed), "count");
  line("n_s", count(r.spurious), "count");
  return out;
}

}  // namespace planex
