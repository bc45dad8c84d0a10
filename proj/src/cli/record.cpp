#include "cli/record.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "perco/rng.hpp"

namespace perco::cli {

std::string format_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

std::string config_hash(const std::string& command, const nlohmann::json& config) {
  std::uint64_t h = 0x70657263ull;
  for (const char ch : command) h = mix_key(h, static_cast<std::uint64_t>(ch));
  for (const char ch : config.dump()) h = mix_key(h, static_cast<std::uint64_t>(ch));
  char buf[20];
  std::snprintf(buf, sizeof buf, "%08llx",
                static_cast<unsigned long long>(h & 0xffffffffull));
  return buf;
}

}  // namespace

RunDir::RunDir(const std::string& root, const std::string& command,
               const nlohmann::json& config)
    : command_(command), config_(config) {
  const std::string stem = timestamp_utc() + "-" + config_hash(command, config);
  dir_ = std::filesystem::path(root) / stem;
  // A rerun inside the same second reuses the directory; outputs are
  // deterministic so that is harmless.
  std::filesystem::create_directories(dir_);
}

void RunDir::write_csv(const std::string& name,
                       const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) const {
  std::ofstream out(dir_ / name, std::ios::trunc);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

void RunDir::write_record(const nlohmann::json& outputs,
                          double wall_seconds) const {
  nlohmann::json rec;
  rec["version"] = kVersion;
  rec["command"] = command_;
  rec["config"] = config_;
  rec["outputs"] = outputs;
  rec["wall_seconds"] = wall_seconds;
  std::ofstream out(dir_ / "record.json", std::ios::trunc);
  out << rec.dump(2) << "\n";
}

}  // namespace perco::cli
