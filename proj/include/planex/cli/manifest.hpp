#pragma once

#include <chrono>
#include <string>
#include <vector>

#include <json.hpp>

namespace planex::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Record of one CLI invocation, written as JSON beside its outputs.
struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json outputs = nlohmann::json::object();
  nlohmann::json seed;  // null when the command is not seeded
  double wall_time_s = 0.0;

  nlohmann::json to_json() const;
  void write(const std::string& path) const;
};

/// Measures wall time from construction.
class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace planex::cli
