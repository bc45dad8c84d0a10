#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace perco::cli {

inline constexpr const char* kVersion = "percolab 0.1.0";

// Deterministic number formatting for CSV cells: reruns with the same seed
// must produce byte-identical files.
std::string format_num(double v);

// One output directory per run: <root>/<UTC timestamp>-<config hash>/.
class RunDir {
 public:
  RunDir(const std::string& root, const std::string& command,
         const nlohmann::json& config);

  const std::filesystem::path& dir() const { return dir_; }

  // rows are already-formatted cells; a header row is always written.
  void write_csv(const std::string& name,
                 const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) const;

  // record.json: version + command + full config + command outputs.
  void write_record(const nlohmann::json& outputs, double wall_seconds) const;

 private:
  std::filesystem::path dir_;
  std::string command_;
  nlohmann::json config_;
};

}  // namespace perco::cli
