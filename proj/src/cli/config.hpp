#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "perco/params.hpp"
#include "perco/point.hpp"
#include "perco/sigma.hpp"

namespace perco::cli {

// One JSON document configures every subcommand; unused blocks are ignored by
// the commands that do not need them. Flags override fields.

struct SigmaConfig {
  enum class Kind { Zeros, Digits, Random };
  Kind kind = Kind::Zeros;
  std::vector<Pt> digits;       // Kind::Digits
  std::uint64_t random_seed = 0;  // Kind::Random
};

struct BetacConfig {
  std::vector<std::int64_t> sides;  // empty: derived from box.side
  std::int64_t replicates = 200;
  double q = 0.0;  // 0: estimator default
  double bracket_lo = 0.05;
  double bracket_hi = 2.0;
  double tol = 1e-3;
};

struct TwopointConfig {
  std::int64_t replicates = 500;
  int origins = 32;
  std::vector<int> radii;  // empty: dyadic up to side/4
  bool sensitivity = true;
};

struct TailConfig {
  std::int64_t replicates = 500;
  std::vector<std::int64_t> grid;  // empty: dyadic up to V/16
};

struct HierConfig {
  // Smallest depth whose profile still has four fit points at L = 4 after
  // the window drops r < 4 and the top octave.
  int levels = 5;
  std::int64_t replicates = 400;
};

struct BlocksConfig {
  int top_level = 4;
  int base_level = 0;
  std::vector<Coord> base;  // empty: origin
  std::int64_t replicates = 2000;
  std::vector<std::int64_t> lambdas = {1, 2, 3, 5};
  std::vector<double> epsilons = {0.1, 0.25};
  std::vector<std::int64_t> ghost_n = {8, 16, 32};
  double theta = 0.0;  // 0: (d - alpha) / 2d
};

struct OracleConfig {
  std::int64_t draws = 100000;
};

struct SampleConfig {
  std::string mode = "layered";  // plain | layered | hier
  int max_level = 0;             // 0: smallest k with L^k >= side
};

struct Config {
  ModelParams model;  // model.beta == 0 with beta_auto means "locate it"
  bool beta_auto = true;
  SigmaConfig sigma;
  std::int64_t box_side = 256;
  std::uint64_t seed = 1;
  int threads = 0;

  BetacConfig betac;
  TwopointConfig twopoint;
  TailConfig tail;
  HierConfig hier;
  BlocksConfig blocks;
  OracleConfig oracle;
  SampleConfig sample;

  nlohmann::json raw;  // parsed document, embedded into every run record

  Config();
};

// Throws config_error with a field-level message ("model.alpha: ...").
Config load_config(const std::string& path);
Config default_config();

void apply_overrides(Config& cfg, std::optional<std::uint64_t> seed,
                     std::optional<int> threads);

// Builds the sigma decomposition at the requested depth (throws config_error
// when explicit digits are shallower than needed).
SigmaDecomposition make_sigma(const Config& cfg, int depth);

}  // namespace perco::cli
