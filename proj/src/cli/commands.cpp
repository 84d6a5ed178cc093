#include "planex/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "planex/cli/manifest.hpp"
#include "planex/cli/sweep.hpp"
#include "planex/cluster.hpp"
#include "planex/eval.hpp"
#include "planex/msac.hpp"
#include "planex/rng.hpp"
#include "planex/scanio.hpp"
#include "planex/synth.hpp"

namespace planex::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// "dir/name.ext" -> "dir/name.manifest.json".
std::string manifest_beside(const std::string& file) {
  fs::path p(file);
  std::string stem = p.filename().string();
  for (const char* ext : {".gz", ".json", ".txt", ".tsv", ".png", ".pgm", ".labels", ".opc"}) {
    const std::string e(ext);
    if (stem.size() > e.size() && stem.compare(stem.size() - e.size(), e.size(), e) == 0) {
      stem.resize(stem.size() - e.size());
    }
  }
  return (p.parent_path() / (stem + ".manifest.json")).string();
}

/// File name without directory and scan/label suffixes.
std::string base_name(const std::string& path) {
  std::string name = fs::path(path).filename().string();
  for (const char* ext : {".gz", ".opc", ".pgm", ".labels"}) {
    const std::string e(ext);
    if (name.size() > e.size() && name.compare(name.size() - e.size(), e.size(), e) == 0) {
      name.resize(name.size() - e.size());
    }
  }
  return name;
}

/// "x.labels.pgm" -> "x.planes" if that file exists.
std::string sibling_planes(const std::string& labels_path) {
  const std::string suffix = ".labels.pgm";
  if (labels_path.size() <= suffix.size() ||
      labels_path.compare(labels_path.size() - suffix.size(), suffix.size(), suffix) != 0) {
    return {};
  }
  const std::string planes = labels_path.substr(0, labels_path.size() - suffix.size()) + ".planes";
  return fs::exists(planes) ? planes : std::string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "cannot create directory " + dir);
}

std::string join(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

json params_json(const ParamSet& params) {
  json j = json::object();
  for (const auto& [k, v] : params) j[k] = v;
  return j;
}

struct GenerateArgs {
  std::string recipe, out, prefix = "scan";
  int count = 1;
  std::uint64_t seed = 0;
  bool gzip = false, png = false;
};

struct ExtractArgs {
  std::string scan, out, name;
  bool png = false;
  std::optional<std::size_t> max_planes;
  std::optional<double> max_increment;
  double outlier_dist = 0.0;
  double inlier_dist = 0.0, stop_fraction = 0.0;
  int iterations = 500;
  std::uint64_t seed = 0;
};

struct EvaluateArgs {
  std::string gt, ms, gt_planes, ms_planes, scan, out;
  double threshold = kHooverThreshold;
  bool cutoff = false;
};

struct SweepArgs {
  std::string method, train, out, table;
  std::vector<std::string> grid, set;
  double threshold = kHooverThreshold;
};

struct RenderArgs {
  std::string labels, out;
};

int cmd_generate(const GenerateArgs& a, Manifest& m, std::ostream& err) {
  const SceneRecipe recipe = load_recipe(a.recipe);
  ensure_dir(a.out);
  m.config = json::parse(recipe_to_json(recipe));
  m.config["count"] = a.count;
  m.config["prefix"] = a.prefix;
  m.inputs["recipe"] = a.recipe;
  m.seed = a.seed;
  json files = json::array();
  for (int i = 0; i < a.count; ++i) {
    const std::uint64_t seed = mix64(a.seed ^ mix64(static_cast<std::uint64_t>(i)));
    char stem[64];
    std::snprintf(stem, sizeof stem, "%s_%03d", a.prefix.c_str(), i);
    const SyntheticScan s = generate_scan(recipe, seed);
    const std::string scan_path = join(a.out, std::string(stem) + (a.gzip ? ".opc.gz" : ".opc"));
    const std::string labels_path = join(a.out, std::string(stem) + ".labels.pgm");
    const std::string planes_path = join(a.out, std::string(stem) + ".planes");
    save_scan(s.scan, scan_path);
    save_labels(s.truth, labels_path);
    save_planes(s.truth, planes_path);
    json entry{{"seed", seed}, {"scan", scan_path}, {"labels", labels_path}, {"planes", planes_path},
               {"regions", s.truth.planes.size()}, {"valid_pixels", s.scan.valid_count()}};
    if (a.png) {
      const std::string png = join(a.out, std::string(stem) + ".png");
      save_label_png(s.truth, png);
      entry["png"] = png;
    }
    files.push_back(entry);
    err << "generated " << stem << " (" << s.truth.planes.size() << " regions)\n";
  }
  m.outputs["scans"] = files;
  m.outputs["manifest"] = join(a.out, "manifest.json");
  return 0;
}

void write_segmentation(const Segmentation& seg, const ExtractArgs& a, Manifest& m) {
  ensure_dir(a.out);
  const std::string name = a.name.empty() ? base_name(a.scan) : a.name;
  const std::string labels = join(a.out, name + ".labels.pgm");
  const std::string planes = join(a.out, name + ".planes");
  save_labels(seg, labels);
  save_planes(seg, planes);
  m.outputs["labels"] = labels;
  m.outputs["planes"] = planes;
  if (a.png) {
    const std::string png = join(a.out, name + ".png");
    save_label_png(seg, png);
    m.outputs["png"] = png;
  }
  m.outputs["manifest"] = join(a.out, name + ".manifest.json");
}

int cmd_extract(const std::string& method, const ExtractArgs& a, Manifest& m, std::ostream& err) {
  const OrganizedScan scan = load_scan(a.scan);
  m.inputs["scan"] = a.scan;
  m.config["method"] = method;
  Segmentation seg;
  if (method == "ppe") {
    PpeConfig config;
    config.outlier_distance = a.outlier_dist;
    if (a.max_planes) {
      config.stopping = StoppingCriterion::planes(*a.max_planes);
      m.config["max_planes"] = *a.max_planes;
    } else {
      config.stopping = StoppingCriterion::increment(*a.max_increment);
      m.config["max_increment"] = *a.max_increment;
    }
    m.config["outlier_dist"] = a.outlier_dist;
    const ExtractionResult r = extract(scan, config);
    seg = r.segmentation;
    m.outputs["steps"] = r.steps.size();
    m.outputs["total_error_m2"] = r.steps.empty() ? 0.0 : r.steps.back().total_error;
  } else {
    MsacConfig config;
    config.inlier_distance = a.inlier_dist;
    config.stop_fraction = a.stop_fraction;
    config.iterations_per_plane = a.iterations;
    config.rng_seed = a.seed;
    m.config["inlier_dist"] = a.inlier_dist;
    m.config["stop_fraction"] = a.stop_fraction;
    m.config["iterations"] = a.iterations;
    m.seed = a.seed;
    const MsacResult r = msac_extract_detailed(scan, config);
    seg = r.segmentation;
    m.outputs["unassigned_points"] = r.remaining;
  }
  m.outputs["planes_found"] = seg.planes.size();
  write_segmentation(seg, a, m);
  err << method << ": " << seg.planes.size() << " planes\n";
  return 0;
}

int cmd_evaluate(const EvaluateArgs& a, Manifest& m, std::ostream& out) {
  const std::string gt_planes = a.gt_planes.empty() ? sibling_planes(a.gt) : a.gt_planes;
  const std::string ms_planes = a.ms_planes.empty() ? sibling_planes(a.ms) : a.ms_planes;
  const Segmentation gt = load_segmentation(a.gt, gt_planes);
  const Segmentation ms = load_segmentation(a.ms, ms_planes);
  m.inputs = {{"gt", a.gt}, {"ms", a.ms}, {"gt_planes", gt_planes}, {"ms_planes", ms_planes}};
  m.config = {{"threshold", a.threshold}, {"rmse_cutoff", a.cutoff}};
  HooverReport rep;
  if (!a.scan.empty()) {
    const OrganizedScan scan = load_scan(a.scan);
    check_dimensions(scan, gt);
    check_dimensions(scan, ms);
    m.inputs["scan"] = a.scan;
    rep = evaluate(scan, gt, ms, a.threshold, a.cutoff);
  } else {
    rep = compare(gt, ms, a.threshold);
  }
  const std::string table = format_table(rep);
  const std::string records = format_records(rep);
  out << table << '\n' << records;
  if (!a.out.empty()) {
    write_file(a.out, records);
    m.outputs["report"] = a.out;
  }
  return 0;
}

int cmd_sweep(const SweepArgs& a, Manifest& m, std::ostream& err) {
  const Method method = parse_method(a.method);
  std::vector<GridAxis> axes;
  for (const std::string& g : a.grid) axes.push_back(parse_axis(g));
  ParamSet fixed;
  for (const std::string& s : a.set) {
    const auto [name, value] = parse_assignment(s);
    if (!fixed.emplace(name, value).second) {
      throw Error(ErrorCode::InvalidArgument, "parameter " + name + " given twice");
    }
  }
  const std::vector<ParamSet> grid = expand_grid(axes, fixed);
  const std::vector<TrainingPair> training = load_training_set(a.train);
  const int threads = thread_count_from_env();
  err << "sweep: " << grid.size() << " grid points x " << training.size() << " scans, "
      << threads << " threads\n";
  const SweepResult result =
      sweep(method, training, grid, a.threshold, threads, [&](std::size_t done, std::size_t total) {
        err << "  " << done << "/" << total << "\n";
      });
  const SweepRow& best = result.rows[result.best];

  std::string table_path = a.table;
  if (table_path.empty()) {
    fs::path p(a.out);
    p.replace_extension(".tsv");
    table_path = p.string();
  }
  write_file(table_path, format_sweep_table(result));
  json names = json::array();
  for (const TrainingPair& t : training) names.push_back(t.name);
  const json best_json{{"method", a.method},
                       {"params", params_json(best.params)},
                       {"mean_f", best.mean_f},
                       {"mean_rmse_m", best.mean_rmse},
                       {"grid_points", grid.size()},
                       {"training_scans", names},
                       {"threshold", a.threshold}};
  write_file(a.out, best_json.dump(2) + "\n");

  m.config = {{"method", a.method}, {"grid", a.grid}, {"set", a.set}, {"threshold", a.threshold},
              {"threads", threads}};
  m.inputs["train"] = a.train;
  m.outputs = {{"best", a.out}, {"table", table_path}};
  err << "best: mean f " << best.mean_f << " with " << params_json(best.params).dump() << "\n";
  return 0;
}

int cmd_render(const RenderArgs& a, Manifest& m) {
  const Segmentation seg = load_labels(a.labels);
  save_label_png(seg, a.out);
  m.inputs["labels"] = a.labels;
  m.outputs["png"] = a.out;
  return 0;
}

/// Help text of the innermost subcommand that was selected.
std::string usage_of(const CLI::App& app) {
  const CLI::App* cur = &app;
  while (true) {
    const auto subs = cur->get_subcommands();
    if (subs.empty()) break;
    cur = subs.front();
  }
  return cur->help();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Plane extraction from organized range scans", "planex"};
  app.set_version_flag("--version", std::string("planex ") + kToolVersion);
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* generate = app.add_subcommand("generate", "Generate synthetic scans with ground truth");
  generate->add_option("--recipe", gen.recipe, "Scene recipe (JSON)")->required();
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--count", gen.count, "Number of scans")->check(CLI::NonNegativeNumber);
  generate->add_option("--seed", gen.seed, "Base seed; scan i uses a seed derived from it and i");
  generate->add_option("--prefix", gen.prefix, "File name prefix");
  generate->add_flag("--gzip", gen.gzip, "Compress scan files");
  generate->add_flag("--png", gen.png, "Also write ground-truth label images");

  ExtractArgs ex;
  CLI::App* extract_cmd = app.add_subcommand("extract", "Extract planes from a scan");
  extract_cmd->require_subcommand(1);
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--scan", ex.scan, "Input scan")->required();
    sub->add_option("--out", ex.out, "Output directory")->required();
    sub->add_option("--name", ex.name, "Output base name (default: scan name)");
    sub->add_flag("--png", ex.png, "Also write a label image");
  };
  CLI::App* ppe = extract_cmd->add_subcommand("ppe", "Probabilistic plane extraction");
  common(ppe);
  CLI::Option_group* stop = ppe->add_option_group("stopping", "Exactly one stopping criterion");
  stop->add_option_function<std::size_t>(
          "--max-planes", [&](const std::size_t& n) { ex.max_planes = n; },
          "Stop once this many planes remain (atomic ones included)")
      ->check(CLI::PositiveNumber);
  stop->add_option_function<double>(
          "--max-increment", [&](const double& e) { ex.max_increment = e; },
          "Stop when the cheapest action raises the error by more than this, m^2")
      ->check(CLI::NonNegativeNumber);
  stop->require_option(1);
  ppe->add_option("--outlier-dist", ex.outlier_dist, "Outlier filter distance d, m")
      ->required()
      ->check(CLI::PositiveNumber);
  CLI::App* msac = extract_cmd->add_subcommand("msac", "MSAC baseline");
  common(msac);
  msac->add_option("--inlier-dist", ex.inlier_dist, "Inlier distance a, m")
      ->required()
      ->check(CLI::PositiveNumber);
  msac->add_option("--stop-fraction", ex.stop_fraction, "Stop fraction b")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  msac->add_option("--seed", ex.seed, "Random seed")->required();
  msac->add_option("--iterations", ex.iterations, "Hypotheses per plane")
      ->check(CLI::PositiveNumber);

  EvaluateArgs ev;
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Compare a segmentation to ground truth");
  evaluate_cmd->add_option("--gt", ev.gt, "Ground-truth labels (PGM)")->required();
  evaluate_cmd->add_option("--ms", ev.ms, "Measured labels (PGM)")->required();
  evaluate_cmd->add_option("--gt-planes", ev.gt_planes, "Ground-truth plane list");
  evaluate_cmd->add_option("--ms-planes", ev.ms_planes, "Measured plane list");
  evaluate_cmd->add_option("--scan", ev.scan, "Scan, enables RMSE");
  evaluate_cmd->add_option("--threshold", ev.threshold, "Overlap threshold")
      ->check(CLI::Range(0.5, 1.0));
  evaluate_cmd->add_flag("--rmse-cutoff", ev.cutoff, "Skip planes whose RMSE exceeds 10 m");
  evaluate_cmd->add_option("--out", ev.out, "Also write the records to this file");

  SweepArgs sw;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Grid search of method parameters");
  sweep_cmd->add_option("method", sw.method, "ppe or msac")
      ->required()
      ->check(CLI::IsMember({"ppe", "msac"}));
  sweep_cmd->add_option("--train", sw.train, "Directory of training scans and labels")->required();
  sweep_cmd->add_option("--grid", sw.grid, "Axis name=lo:hi:n (repeatable)");
  sweep_cmd->add_option("--set", sw.set, "Fixed parameter name=value (repeatable)");
  sweep_cmd->add_option("--out", sw.out, "Best-parameter JSON")->required();
  sweep_cmd->add_option("--table", sw.table, "Grid table (default: --out with .tsv)");
  sweep_cmd->add_option("--threshold", sw.threshold, "Overlap threshold")
      ->check(CLI::Range(0.5, 1.0));

  RenderArgs rd;
  CLI::App* render = app.add_subcommand("render", "Write a label image as a color PNG");
  render->add_option("--labels", rd.labels, "Labels (PGM)")->required();
  render->add_option("--out", rd.out, "PNG file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << usage_of(app);
    return 2;
  }
  if (ev.threshold <= 0.5 || sw.threshold <= 0.5) {
    err << "error: --threshold must exceed 0.5\n";
    return 2;
  }

  Manifest manifest;
  manifest.argv = args;
  Stopwatch clock;
  try {
    std::string manifest_path;
    int code = 0;
    if (*generate) {
      manifest.command = "generate";
      code = cmd_generate(gen, manifest, err);
      manifest_path = join(gen.out, "manifest.json");
    } else if (*extract_cmd) {
      const std::string method = *ppe ? "ppe" : "msac";
      manifest.command = "extract " + method;
      code = cmd_extract(method, ex, manifest, err);
      manifest_path = manifest.outputs["manifest"].get<std::string>();
    } else if (*evaluate_cmd) {
      manifest.command = "evaluate";
      code = cmd_evaluate(ev, manifest, out);
      if (!ev.out.empty()) manifest_path = manifest_beside(ev.out);
    } else if (*sweep_cmd) {
      manifest.command = "sweep";
      code = cmd_sweep(sw, manifest, err);
      manifest_path = manifest_beside(sw.out);
    } else if (*render) {
      manifest.command = "render";
      code = cmd_render(rd, manifest);
      manifest_path = manifest_beside(rd.out);
    }
    manifest.wall_time_s = clock.seconds();
    if (!manifest_path.empty()) manifest.write(manifest_path);
    return code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace planex::cli
