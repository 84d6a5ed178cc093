#include "planex/cli/manifest.hpp"

#include "planex/scanio.hpp"

namespace planex::cli {

nlohmann::json Manifest::to_json() const {
  nlohmann::json j;
  j["tool"] = "planex";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["argv"] = argv;
  j["config"] = config;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["seed"] = seed;
  j["wall_time_s"] = wall_time_s;
  return j;
}

void Manifest::write(const std::string& path) const { write_file(path, to_json().dump(2) + "\n"); }

}  // namespace planex::cli
