#include "planex/cli/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include "planex/eval.hpp"
#include "planex/scanio.hpp"

namespace planex::cli {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, what);
}

double to_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || !std::isfinite(v)) {
    invalid("bad number '" + text + "' in " + where);
  }
  return v;
}

void check_names(const ParamSet& params, std::initializer_list<const char*> known,
                 const char* method) {
  const std::set<std::string> names(known.begin(), known.end());
  for (const auto& [name, value] : params) {
    if (!names.count(name)) invalid(std::string("unknown ") + method + " parameter '" + name + "'");
  }
}

bool whole(double v) { return v == std::floor(v); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "ppe") return Method::Ppe;
  if (name == "msac") return Method::Msac;
  invalid("unknown method '" + name + "', expected ppe or msac");
}

const char* to_string(Method method) { return method == Method::Ppe ? "ppe" : "msac"; }

double GridAxis::value(int i) const {
  if (count <= 1) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
}

GridAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) invalid("grid axis '" + spec + "' must read name=lo:hi:n");
  GridAxis axis;
  axis.name = spec.substr(0, eq);
  const std::string rest = spec.substr(eq + 1);
  const auto c1 = rest.find(':');
  const auto c2 = c1 == std::string::npos ? c1 : rest.find(':', c1 + 1);
  if (c2 == std::string::npos) invalid("grid axis '" + spec + "' must read name=lo:hi:n");
  axis.lo = to_double(rest.substr(0, c1), spec);
  axis.hi = to_double(rest.substr(c1 + 1, c2 - c1 - 1), spec);
  const std::string n = rest.substr(c2 + 1);
  int count = -1;
  const auto [p, ec] = std::from_chars(n.data(), n.data() + n.size(), count);
  if (ec != std::errc() || p != n.data() + n.size() || count < 0) {
    invalid("grid axis '" + spec + "' needs a nonnegative integer count");
  }
  axis.count = count;
  return axis;
}

std::pair<std::string, double> parse_assignment(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) invalid("'" + spec + "' must read name=value");
  return {spec.substr(0, eq), to_double(spec.substr(eq + 1), spec)};
}

std::vector<ParamSet> expand_grid(const std::vector<GridAxis>& axes, const ParamSet& fixed) {
  if (axes.empty() && fixed.empty()) throw Error(ErrorCode::EmptyGrid, "no parameters given");
  std::set<std::string> names;
  for (const auto& [name, v] : fixed) names.insert(name);
  for (const GridAxis& a : axes) {
    if (a.count <= 0) throw Error(ErrorCode::EmptyGrid, "grid axis " + a.name + " has no values");
    if (!names.insert(a.name).second) invalid("parameter " + a.name + " given twice");
  }
  std::vector<ParamSet> grid{fixed};
  for (const GridAxis& a : axes) {
    std::vector<ParamSet> next;
    next.reserve(grid.size() * static_cast<std::size_t>(a.count));
    for (const ParamSet& p : grid) {
      for (int i = 0; i < a.count; ++i) {
        ParamSet q = p;
        q[a.name] = a.value(i);
        next.push_back(std::move(q));
      }
    }
    grid = std::move(next);
  }
  return grid;
}

PpeConfig ppe_config(const ParamSet& params) {
  check_names(params, {"e", "sqrt_e", "d", "max_planes"}, "ppe");
  const int stops = static_cast<int>(params.count("e")) + static_cast<int>(params.count("sqrt_e")) +
                    static_cast<int>(params.count("max_planes"));
  if (stops != 1) invalid("ppe needs exactly one of e, sqrt_e, max_planes");
  if (!params.count("d")) invalid("ppe needs the outlier distance d");
  PpeConfig config;
  config.outlier_distance = params.at("d");
  if (params.count("max_planes")) {
    const double n = params.at("max_planes");
    if (!(n >= 1.0) || !whole(n)) invalid("max_planes must be a positive integer");
    config.stopping = StoppingCriterion::planes(static_cast<std::size_t>(n));
  } else {
    const double e = params.count("e") ? params.at("e") : params.at("sqrt_e") * params.at("sqrt_e");
    if (!(e >= 0.0)) invalid("e must be nonnegative");
    config.stopping = StoppingCriterion::increment(e);
  }
  config.validate();
  return config;
}

MsacConfig msac_config(const ParamSet& params) {
  check_names(params, {"a", "b", "iterations", "seed"}, "msac");
  for (const char* name : {"a", "b", "seed"}) {
    if (!params.count(name)) invalid(std::string("msac needs parameter ") + name);
  }
  MsacConfig config;
  config.inlier_distance = params.at("a");
  config.stop_fraction = params.at("b");
  if (params.count("iterations")) {
    const double n = params.at("iterations");
    if (!(n >= 1.0) || !whole(n)) invalid("iterations must be a positive integer");
    config.iterations_per_plane = static_cast<int>(n);
  }
  const double seed = params.at("seed");
  if (!(seed >= 0.0) || !whole(seed) || seed >= 0x1p64) invalid("seed must be a nonnegative integer");
  config.rng_seed = static_cast<std::uint64_t>(seed);
  config.validate();
  return config;
}

Segmentation run_method(Method method, const ParamSet& params, const OrganizedScan& scan) {
  if (method == Method::Ppe) return extract(scan, ppe_config(params)).segmentation;
  return msac_extract(scan, msac_config(params));
}

std::vector<TrainingPair> load_training_set(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::IoError, "not a directory: " + dir);
  std::vector<std::pair<std::string, fs::path>> scans;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string file = entry.path().filename().string();
    for (const std::string suffix : {".opc", ".opc.gz"}) {
      if (file.size() > suffix.size() &&
          file.compare(file.size() - suffix.size(), suffix.size(), suffix) == 0) {
        scans.emplace_back(file.substr(0, file.size() - suffix.size()), entry.path());
      }
    }
  }
  std::sort(scans.begin(), scans.end());
  if (scans.empty()) throw Error(ErrorCode::EmptyGrid, "no training scans in " + dir);
  std::vector<TrainingPair> out;
  for (const auto& [stem, path] : scans) {
    const fs::path labels = fs::path(dir) / (stem + ".labels.pgm");
    if (!fs::exists(labels)) {
      throw Error(ErrorCode::IoError, "missing labels " + labels.string() + " for " + path.string());
    }
    TrainingPair pair{stem, load_scan(path.string()), load_labels(labels.string())};
    check_dimensions(pair.scan, pair.truth);
    out.push_back(std::move(pair));
  }
  return out;
}

bool better_row(const SweepRow& a, const SweepRow& b) {
  if (a.mean_f != b.mean_f) return a.mean_f > b.mean_f;
  const double ra = std::isnan(a.mean_rmse) ? std::numeric_limits<double>::infinity() : a.mean_rmse;
  const double rb = std::isnan(b.mean_rmse) ? std::numeric_limits<double>::infinity() : b.mean_rmse;
  if (ra != rb) return ra < rb;
  return a.params < b.params;
}

SweepResult sweep(Method method, const std::vector<TrainingPair>& training,
                  const std::vector<ParamSet>& grid, double threshold, int threads,
                  const SweepProgress& progress) {
  if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "empty parameter grid");
  if (training.empty()) throw Error(ErrorCode::EmptyGrid, "no training scans");
  // Reject bad parameters before spawning workers.
  for (const ParamSet& p : grid) {
    if (method == Method::Ppe) {
      ppe_config(p);
    } else {
      msac_config(p);
    }
  }

  SweepResult result;
  result.rows.resize(grid.size());
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex mutex;
  std::exception_ptr failure;

  const auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) return;
      try {
        SweepRow row;
        row.params = grid[i];
        for (const TrainingPair& pair : training) {
          const Segmentation ms = run_method(method, grid[i], pair.scan);
          const HooverReport rep = evaluate(pair.scan, pair.truth, ms, threshold);
          row.f.push_back(rep.f);
          row.rmse.push_back(rep.rmse_per_ray);
        }
        double fs = 0.0, rs = 0.0;
        for (std::size_t k = 0; k < row.f.size(); ++k) {
          fs += row.f[k];
          rs += row.rmse[k];
        }
        row.mean_f = fs / static_cast<double>(row.f.size());
        row.mean_rmse = rs / static_cast<double>(row.rmse.size());
        result.rows[i] = std::move(row);
        std::lock_guard lock(mutex);
        ++done;
        if (progress) progress(done, grid.size());
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        next = grid.size();
        return;
      }
    }
  };

  const int n = std::max(1, std::min<int>(threads, static_cast<int>(grid.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    if (better_row(result.rows[i], result.rows[result.best])) result.best = i;
  }
  return result;
}

std::string format_sweep_table(const SweepResult& result) {
  std::string out;
  if (result.rows.empty()) return out;
  for (const auto& [name, v] : result.rows.front().params) out += name + '\t';
  out += "mean_f\tmean_rmse_m\tbest\n";
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const SweepRow& row = result.rows[i];
    for (const auto& [name, v] : row.params) out += fmt(v) + '\t';
    out += fmt(row.mean_f) + '\t' + fmt(row.mean_rmse) + '\t' + (i == result.best ? "1" : "0") + '\n';
  }
  return out;
}

int thread_count_from_env() {
  if (const char* env = std::getenv("PLANEX_THREADS")) {
    const std::string s(env);
    int n = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec == std::errc() && p == s.data() + s.size() && n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace planex::cli
