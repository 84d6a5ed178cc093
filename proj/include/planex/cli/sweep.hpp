#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "planex/cluster.hpp"
#include "planex/msac.hpp"
#include "planex/segmentation.hpp"
#include "planex/types.hpp"

namespace planex::cli {

enum class Method { Ppe, Msac };

Method parse_method(const std::string& name);
const char* to_string(Method method);

/// Parameter values by name. PPE: e, sqrt_e (e = sqrt_e^2), d, max_planes.
/// MSAC: a, b, iterations, seed.
using ParamSet = std::map<std::string, double>;

/// One grid axis "name=lo:hi:n": n evenly spaced values from lo to hi.
struct GridAxis {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  int count = 1;

  double value(int i) const;
};

/// Throws InvalidArgument on malformed specs.
GridAxis parse_axis(const std::string& spec);
/// "name=value"; throws InvalidArgument.
std::pair<std::string, double> parse_assignment(const std::string& spec);

/// Cartesian product of the axes, each point merged with `fixed`. Points
/// are ordered with the last axis varying fastest. Throws EmptyGrid if no
/// parameter is given at all or an axis has zero values, InvalidArgument
/// if a name is given twice.
std::vector<ParamSet> expand_grid(const std::vector<GridAxis>& axes, const ParamSet& fixed);

/// Throws InvalidArgument for unknown, missing or conflicting parameters.
PpeConfig ppe_config(const ParamSet& params);
MsacConfig msac_config(const ParamSet& params);
Segmentation run_method(Method method, const ParamSet& params, const OrganizedScan& scan);

struct TrainingPair {
  std::string name;
  OrganizedScan scan;
  Segmentation truth;
};

/// Every "<stem>.opc" or "<stem>.opc.gz" in `dir` with its
/// "<stem>.labels.pgm", sorted by name. Throws IoError for a scan without
/// labels and EmptyGrid if the directory holds no scan.
std::vector<TrainingPair> load_training_set(const std::string& dir);

struct SweepRow {
  ParamSet params;
  std::vector<double> f;
  std::vector<double> rmse;  // per-ray normalization; NaN without planes
  double mean_f = 0.0;
  double mean_rmse = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // grid order
  std::size_t best = 0;
};

/// Whether row `a` beats row `b`: higher mean f, then lower mean RMSE (NaN
/// counts as worst), then lexicographically smaller parameters.
bool better_row(const SweepRow& a, const SweepRow& b);

using SweepProgress = std::function<void(std::size_t done, std::size_t total)>;

/// Evaluates every grid point on every training pair. Grid points are
/// spread over `threads` workers; results do not depend on the count.
SweepResult sweep(Method method, const std::vector<TrainingPair>& training,
                  const std::vector<ParamSet>& grid, double threshold, int threads,
                  const SweepProgress& progress = {});

/// Tab-separated table with a header row, one row per grid point.
std::string format_sweep_table(const SweepResult& result);

/// PLANEX_THREADS if set to a positive integer, else the hardware count.
int thread_count_from_env();

}  // namespace planex::cli
