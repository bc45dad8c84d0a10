#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "perco/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Long-range percolation laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_root = "runs";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  app.add_option("--config", config_path, "JSON configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Root RNG seed (overrides config)");
  app.add_option("--threads", threads, "Worker threads, 0 = all cores");
  app.add_option("--out", out_root, "Output root directory");

  for (const auto* name :
       {"betac", "twopoint", "tail", "hier", "blocks", "oracle-check",
        "sample"})
    app.add_subcommand(name)->ignore_case()->fallthrough();

  CLI11_PARSE(app, argc, argv);

  if (const char* env = std::getenv("PERCOLAB_OUT"); env && *env)
    out_root = env;

  perco::cli::Config cfg;
  try {
    cfg = config_path.empty() ? perco::cli::default_config()
                              : perco::cli::load_config(config_path);
    perco::cli::apply_overrides(cfg, seed, threads);
  } catch (const perco::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  const auto subs = app.get_subcommands();
  return perco::cli::run_command(subs.front()->get_name(), cfg, out_root);
}
