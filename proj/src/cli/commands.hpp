#pragma once

#include <string>

#include "cli/config.hpp"

namespace perco::cli {

// Each command writes one run directory under out_root and prints its path.
// Returns the process exit code; run_command maps exceptions onto the exit
// code contract (1 bad config, 2 runtime failure).
int cmd_betac(const Config& cfg, const std::string& out_root);
int cmd_twopoint(const Config& cfg, const std::string& out_root);
int cmd_tail(const Config& cfg, const std::string& out_root);
int cmd_hier(const Config& cfg, const std::string& out_root);
int cmd_blocks(const Config& cfg, const std::string& out_root);
int cmd_oracle_check(const Config& cfg, const std::string& out_root);
int cmd_sample(const Config& cfg, const std::string& out_root);

int run_command(const std::string& name, const Config& cfg,
                const std::string& out_root);

}  // namespace perco::cli
