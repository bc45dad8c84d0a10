#include "cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "perco/errors.hpp"

namespace perco::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw config_error(field + ": " + why);
}

void expect_object(const json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "must be an object");
}

void check_keys(const json& j, const std::string& field,
                std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) fail(field.empty() ? key : field + "." + key,
                             "unknown field");
}

double get_num(const json& j, const std::string& field, double lo, double hi) {
  if (!j.is_number()) fail(field, "must be a number");
  const double v = j.get<double>();
  if (!(v >= lo) || !(v <= hi))
    fail(field, "must lie in [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "]");
  return v;
}

std::int64_t get_int(const json& j, const std::string& field, std::int64_t lo,
                     std::int64_t hi) {
  if (!j.is_number_integer()) fail(field, "must be an integer");
  const auto v = j.get<std::int64_t>();
  if (v < lo || v > hi)
    fail(field, "must lie in [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "]");
  return v;
}

template <typename T, typename F>
std::vector<T> get_list(const json& j, const std::string& field, F item) {
  if (!j.is_array()) fail(field, "must be an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(item(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

void parse_model(const json& j, Config& cfg) {
  expect_object(j, "model");
  check_keys(j, "model", {"d", "alpha", "c", "L", "beta"});
  auto& m = cfg.model;
  if (j.contains("d")) m.d = static_cast<int>(get_int(j["d"], "model.d", 1, kMaxDim));
  if (j.contains("L")) m.L = static_cast<int>(get_int(j["L"], "model.L", 2, 1 << 20));
  if (j.contains("alpha")) m.alpha = get_num(j["alpha"], "model.alpha", 1e-9, 1e9);
  if (!(m.alpha > 0.0) || !(m.alpha < m.d))
    fail("model.alpha", "must satisfy 0 < alpha < d");
  if (j.contains("c")) {
    m.c = get_num(j["c"], "model.c", 0.0, 1e18);
    if (!(m.c > 0.0)) fail("model.c", "must be positive");
  }
  if (j.contains("beta")) {
    const auto& b = j["beta"];
    if (b.is_string()) {
      if (b.get<std::string>() != "auto")
        fail("model.beta", "must be a number or \"auto\"");
      cfg.beta_auto = true;
      m.beta = 0.0;
    } else {
      m.beta = get_num(b, "model.beta", 0.0, 1e18);
      cfg.beta_auto = false;
    }
  }
}

void parse_sigma(const json& j, Config& cfg) {
  auto& sg = cfg.sigma;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "zeros") {
      sg.kind = SigmaConfig::Kind::Zeros;
      return;
    }
    if (s.rfind("random:", 0) == 0) {
      sg.kind = SigmaConfig::Kind::Random;
      try {
        sg.random_seed = std::stoull(s.substr(7));
      } catch (const std::exception&) {
        fail("sigma", "random seed must be an unsigned integer");
      }
      return;
    }
    fail("sigma", "must be \"zeros\", \"random:<seed>\", or digit lists");
  }
  if (!j.is_array()) fail("sigma", "must be a string or an array of digit lists");
  sg.kind = SigmaConfig::Kind::Digits;
  for (std::size_t m = 0; m < j.size(); ++m) {
    const std::string field = "sigma[" + std::to_string(m) + "]";
    if (!j[m].is_array() || j[m].size() != static_cast<std::size_t>(cfg.model.d))
      fail(field, "must list exactly d digits");
    Pt digit = Pt::zero(cfg.model.d);
    for (int i = 0; i < cfg.model.d; ++i)
      digit[i] = get_int(j[m][i], field + "[" + std::to_string(i) + "]", 0,
                         cfg.model.L - 1);
    sg.digits.push_back(digit);
  }
}

void parse_betac(const json& j, Config& cfg) {
  expect_object(j, "betac");
  check_keys(j, "betac",
             {"sides", "replicates", "q", "bracket", "tol"});
  auto& b = cfg.betac;
  if (j.contains("sides"))
    b.sides = get_list<std::int64_t>(
        j["sides"], "betac.sides",
        [](const json& it, const std::string& f) { return get_int(it, f, 2, 1ll << 40); });
  if (b.sides.size() == 1) fail("betac.sides", "needs at least two sides");
  for (std::size_t i = 1; i < b.sides.size(); ++i)
    if (b.sides[i] <= b.sides[i - 1]) fail("betac.sides", "must ascend");
  if (!b.sides.empty() && b.sides.back() < 4 * b.sides.front())
    fail("betac.sides", "largest/smallest ratio must be at least 4");
  if (j.contains("replicates"))
    b.replicates = get_int(j["replicates"], "betac.replicates", 1, 1ll << 40);
  if (j.contains("q")) b.q = get_num(j["q"], "betac.q", 0.0, 1.0);
  if (j.contains("bracket")) {
    const auto br = get_list<double>(
        j["bracket"], "betac.bracket",
        [](const json& it, const std::string& f) { return get_num(it, f, 0.0, 1e18); });
    if (br.size() != 2 || !(br[0] > 0.0) || br[1] <= br[0])
      fail("betac.bracket", "must be [lo, hi] with 0 < lo < hi");
    b.bracket_lo = br[0];
    b.bracket_hi = br[1];
  }
  if (j.contains("tol")) {
    b.tol = get_num(j["tol"], "betac.tol", 0.0, 1.0);
    if (!(b.tol > 0.0)) fail("betac.tol", "must be positive");
  }
}

void parse_twopoint(const json& j, Config& cfg) {
  expect_object(j, "twopoint");
  check_keys(j, "twopoint", {"replicates", "origins", "radii", "sensitivity"});
  auto& t = cfg.twopoint;
  if (j.contains("replicates"))
    t.replicates = get_int(j["replicates"], "twopoint.replicates", 2, 1ll << 40);
  if (j.contains("origins"))
    t.origins = static_cast<int>(get_int(j["origins"], "twopoint.origins", 1, 1 << 20));
  if (j.contains("radii"))
    t.radii = get_list<int>(
        j["radii"], "twopoint.radii",
        [](const json& it, const std::string& f) {
          return static_cast<int>(get_int(it, f, 1, 1 << 30));
        });
  for (const int r : t.radii)
    if (r > cfg.box_side / 4)
      fail("twopoint.radii",
           "margin rule requires r <= side/4 (r=" + std::to_string(r) +
               ", side=" + std::to_string(cfg.box_side) + ")");
  if (j.contains("sensitivity")) {
    if (!j["sensitivity"].is_boolean())
      fail("twopoint.sensitivity", "must be a boolean");
    t.sensitivity = j["sensitivity"].get<bool>();
  }
}

void parse_tail(const json& j, Config& cfg) {
  expect_object(j, "tail");
  check_keys(j, "tail", {"replicates", "grid"});
  auto& t = cfg.tail;
  if (j.contains("replicates"))
    t.replicates = get_int(j["replicates"], "tail.replicates", 2, 1ll << 40);
  if (j.contains("grid"))
    t.grid = get_list<std::int64_t>(
        j["grid"], "tail.grid",
        [](const json& it, const std::string& f) { return get_int(it, f, 1, 1ll << 60); });
}

void parse_hier(const json& j, Config& cfg) {
  expect_object(j, "hier");
  check_keys(j, "hier", {"levels", "replicates"});
  auto& h = cfg.hier;
  if (j.contains("levels"))
    h.levels = static_cast<int>(get_int(j["levels"], "hier.levels", 2, 62));
  if (j.contains("replicates"))
    h.replicates = get_int(j["replicates"], "hier.replicates", 2, 1ll << 40);
}

void parse_blocks(const json& j, Config& cfg) {
  expect_object(j, "blocks");
  check_keys(j, "blocks",
             {"top_level", "base_level", "base", "replicates", "lambdas",
              "epsilons", "ghost_n", "theta"});
  auto& b = cfg.blocks;
  if (j.contains("top_level"))
    b.top_level = static_cast<int>(get_int(j["top_level"], "blocks.top_level", 1, 62));
  if (j.contains("base_level"))
    b.base_level =
        static_cast<int>(get_int(j["base_level"], "blocks.base_level", 0, 62));
  if (b.base_level >= b.top_level)
    fail("blocks.base_level", "must be below top_level");
  if (j.contains("base")) {
    const auto xs = get_list<Coord>(
        j["base"], "blocks.base",
        [](const json& it, const std::string& f) {
          return get_int(it, f, -(1ll << 40), 1ll << 40);
        });
    if (xs.size() != static_cast<std::size_t>(cfg.model.d))
      fail("blocks.base", "must list exactly d coordinates");
    b.base.assign(xs.begin(), xs.end());
  }
  if (j.contains("replicates"))
    b.replicates = get_int(j["replicates"], "blocks.replicates", 100, 1ll << 40);
  if (j.contains("lambdas"))
    b.lambdas = get_list<std::int64_t>(
        j["lambdas"], "blocks.lambdas",
        [](const json& it, const std::string& f) { return get_int(it, f, 1, 1ll << 40); });
  if (j.contains("epsilons")) {
    b.epsilons = get_list<double>(
        j["epsilons"], "blocks.epsilons",
        [](const json& it, const std::string& f) { return get_num(it, f, 0.0, 1.0); });
    for (const double e : b.epsilons)
      if (!(e > 0.0) || !(e < 1.0)) fail("blocks.epsilons", "entries must lie in (0, 1)");
  }
  if (j.contains("ghost_n"))
    b.ghost_n = get_list<std::int64_t>(
        j["ghost_n"], "blocks.ghost_n",
        [](const json& it, const std::string& f) { return get_int(it, f, 1, 1ll << 60); });
  if (j.contains("theta")) {
    b.theta = get_num(j["theta"], "blocks.theta", 0.0, 0.5);
    if (!(b.theta > 0.0) || !(b.theta < 0.5))
      fail("blocks.theta", "must lie in (0, 1/2)");
  }
}

void parse_oracle(const json& j, Config& cfg) {
  expect_object(j, "oracle");
  check_keys(j, "oracle", {"draws"});
  if (j.contains("draws"))
    cfg.oracle.draws = get_int(j["draws"], "oracle.draws", 10000, 1ll << 40);
}

void parse_sample(const json& j, Config& cfg) {
  expect_object(j, "sample");
  check_keys(j, "sample", {"mode", "max_level"});
  auto& s = cfg.sample;
  if (j.contains("mode")) {
    if (!j["mode"].is_string()) fail("sample.mode", "must be a string");
    s.mode = j["mode"].get<std::string>();
    if (s.mode != "plain" && s.mode != "layered" && s.mode != "hier")
      fail("sample.mode", "must be plain, layered, or hier");
  }
  if (j.contains("max_level"))
    s.max_level = static_cast<int>(get_int(j["max_level"], "sample.max_level", 1, 62));
}

}  // namespace

Config::Config() {
  model.L = 4;  // together with box_side = 256 = L^4 every command runs as-is
  raw = json::object();
}

Config default_config() { return Config{}; }

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  expect_object(doc, "config");
  check_keys(doc, "",
             {"model", "sigma", "box", "seed", "threads", "betac", "twopoint",
              "tail", "hier", "blocks", "oracle", "sample"});

  Config cfg;
  cfg.raw = doc;
  if (doc.contains("model")) parse_model(doc["model"], cfg);
  cfg.model.validate();
  if (doc.contains("box")) {
    expect_object(doc["box"], "box");
    check_keys(doc["box"], "box", {"side"});
    if (doc["box"].contains("side"))
      cfg.box_side = get_int(doc["box"]["side"], "box.side", 1, 1ll << 40);
  }
  if (doc.contains("sigma")) parse_sigma(doc["sigma"], cfg);
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer())
      fail("seed", "must be an unsigned integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("threads"))
    cfg.threads = static_cast<int>(get_int(doc["threads"], "threads", 0, 1 << 16));
  if (doc.contains("betac")) parse_betac(doc["betac"], cfg);
  if (doc.contains("twopoint")) parse_twopoint(doc["twopoint"], cfg);
  if (doc.contains("tail")) parse_tail(doc["tail"], cfg);
  if (doc.contains("hier")) parse_hier(doc["hier"], cfg);
  if (doc.contains("blocks")) parse_blocks(doc["blocks"], cfg);
  if (doc.contains("oracle")) parse_oracle(doc["oracle"], cfg);
  if (doc.contains("sample")) parse_sample(doc["sample"], cfg);
  return cfg;
}

void apply_overrides(Config& cfg, std::optional<std::uint64_t> seed,
                     std::optional<int> threads) {
  if (seed) {
    cfg.seed = *seed;
    cfg.raw["seed"] = *seed;
  }
  if (threads) {
    if (*threads < 0) fail("threads", "must be nonnegative");
    cfg.threads = *threads;
    cfg.raw["threads"] = *threads;
  }
}

SigmaDecomposition make_sigma(const Config& cfg, int depth) {
  switch (cfg.sigma.kind) {
    case SigmaConfig::Kind::Zeros:
      return SigmaDecomposition::zeros(cfg.model.d, cfg.model.L, depth);
    case SigmaConfig::Kind::Random:
      return SigmaDecomposition::random(cfg.model.d, cfg.model.L, depth,
                                        cfg.sigma.random_seed);
    case SigmaConfig::Kind::Digits: {
      if (static_cast<int>(cfg.sigma.digits.size()) < depth)
        throw config_error("sigma: needs at least " + std::to_string(depth) +
                           " digit levels for this run");
      SigmaDecomposition sg;
      sg.d = cfg.model.d;
      sg.L = cfg.model.L;
      sg.depth = static_cast<int>(cfg.sigma.digits.size());
      sg.digits = cfg.sigma.digits;
      sg.unit_offset = Pt::zero(cfg.model.d);
      sg.finalize();
      return sg;
    }
  }
  throw config_error("sigma: unknown kind");
}

}  // namespace perco::cli
