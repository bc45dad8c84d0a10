#include "cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include "cli/record.hpp"
#include "perco/clusters.hpp"
#include "perco/errors.hpp"
#include "perco/estimators.hpp"
#include "perco/oracle.hpp"
#include "perco/observables.hpp"

namespace perco::cli {

using nlohmann::json;

namespace {

// Phase tags derive independent seed families from the root seed.
constexpr std::uint64_t kPhaseBetac = 1;
constexpr std::uint64_t kPhaseSurvey = 2;
constexpr std::uint64_t kPhaseChain = 3;
constexpr std::uint64_t kPhaseGhost = 4;
constexpr std::uint64_t kPhaseOracle = 5;
constexpr std::uint64_t kPhaseSample = 6;

RandomSource phase_source(const Config& cfg, std::uint64_t phase) {
  return RandomSource{mix_key(cfg.seed, phase), 0};
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

std::vector<std::int64_t> default_betac_sides(std::int64_t box_side) {
  const std::int64_t big = std::max<std::int64_t>(box_side, 16);
  if (big >= 64) return {big / 16, big / 4, big};  // growth-gap bisection
  return {std::max<std::int64_t>(4, big / 4), big};
}

BetacPlan betac_plan(const Config& cfg) {
  BetacPlan plan;
  plan.params = cfg.model;
  plan.sides = cfg.betac.sides.empty() ? default_betac_sides(cfg.box_side)
                                       : cfg.betac.sides;
  plan.replicates = cfg.betac.replicates;
  plan.q = cfg.betac.q;
  plan.bracket_lo = cfg.betac.bracket_lo;
  plan.bracket_hi = cfg.betac.bracket_hi;
  plan.tol = cfg.betac.tol;
  plan.src = phase_source(cfg, kPhaseBetac);
  plan.threads = cfg.threads;
  return plan;
}

// Either the configured beta or a fresh bisection estimate; records both the
// value and how it was obtained.
double resolve_beta(const Config& cfg, json& outputs) {
  if (!cfg.beta_auto) {
    outputs["beta"] = cfg.model.beta;
    outputs["beta_source"] = "config";
    return cfg.model.beta;
  }
  const auto est = estimate_beta_c(betac_plan(cfg));
  outputs["beta"] = est.beta_c;
  outputs["beta_source"] = "bisection";
  outputs["beta_c_hat"] = est.beta_c;
  outputs["beta_bracket"] = {est.lo, est.hi};
  outputs["q"] = est.q;
  return est.beta_c;
}

json fit_json(const PowerFit& fit) {
  json j;
  j["exponent"] = fit.exponent;
  j["stderr"] = fit.se;
  j["prefactor"] = fit.prefactor;
  j["chi2"] = fit.chi2;
  j["window"] = fit.window;
  j["warnings"] = fit.warnings;
  return j;
}

std::vector<std::vector<std::string>> profile_rows(
    const std::vector<ProfilePoint>& table) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : table)
    rows.push_back({format_num(p.r), format_num(p.value), format_num(p.se)});
  return rows;
}

bool profile_monotone(const std::vector<ProfilePoint>& profile) {
  for (std::size_t i = 0; i + 1 < profile.size(); ++i) {
    const auto& a = profile[i];
    const auto& b = profile[i + 1];
    if (b.value > a.value + 3.0 * std::hypot(a.se, b.se)) return false;
  }
  return true;
}

std::string corner_string(const Pt& p) {
  std::string s;
  for (int i = 0; i < p.d; ++i) s += (i ? " " : "") + std::to_string(p[i]);
  return s;
}

json seeds_json(const Config& cfg,
                std::initializer_list<const char*> phases) {
  json j;
  j["root"] = cfg.seed;
  j["phases"] = json::array();
  for (const auto* p : phases) j["phases"].push_back(p);
  j["streams"] = "one per replicate, offset by phase tag";
  return j;
}

}  // namespace

int cmd_betac(const Config& cfg, const std::string& out_root) {
  Timer timer;
  const auto plan = betac_plan(cfg);
  const auto est = estimate_beta_c(plan);

  RunDir run(out_root, "betac", cfg.raw);
  auto curve = est.curve;
  std::sort(curve.begin(), curve.end());
  std::vector<std::vector<std::string>> rows;
  for (const auto& [beta, stat] : curve)
    rows.push_back({format_num(beta), format_num(stat)});
  const bool gap_mode = cfg.betac.q <= 0.0 && plan.sides.size() >= 3;
  run.write_csv("curve.csv",
                {"beta", gap_mode ? "growth_gap" : "ratio_big_over_small"},
                rows);

  json outputs;
  outputs["beta_c_hat"] = est.beta_c;
  outputs["bracket"] = {est.lo, est.hi};
  outputs["q"] = est.q;
  outputs["sides"] = plan.sides;
  outputs["replicates"] = plan.replicates;
  outputs["seeds"] = seeds_json(cfg, {"betac"});
  run.write_record(outputs, timer.seconds());
  std::cout << run.dir().string() << "\n";
  return 0;
}

int cmd_twopoint(const Config& cfg, const std::string& out_root) {
  Timer timer;
  json outputs;
  const double beta = resolve_beta(cfg, outputs);

  SurveyPlan plan;
  plan.params = cfg.model;
  plan.params.beta = beta;
  plan.box = BoxGeometry{cfg.model.d, cfg.box_side};
  plan.replicates = cfg.twopoint.replicates;
  plan.origins = cfg.twopoint.origins;
  plan.radii = cfg.twopoint.radii;
  plan.collect_tail = false;
  plan.src = phase_source(cfg, kPhaseSurvey);
  plan.threads = cfg.threads;
  const auto profile = run_critical_survey(plan).profile;

  const auto fit = fit_power_law(profile);
  const double ref = -(cfg.model.d - cfg.model.alpha);
  const auto trend = compensated_trend(profile, cfg.model.d - cfg.model.alpha);

  RunDir run(out_root, "twopoint", cfg.raw);
  run.write_csv("profile.csv", {"r", "S", "err"}, profile_rows(profile));

  outputs["params"] = {{"d", cfg.model.d},   {"alpha", cfg.model.alpha},
                       {"c", cfg.model.c},   {"L", cfg.model.L},
                       {"beta", beta},       {"side", cfg.box_side}};
  outputs["beta_c_hat"] = outputs.contains("beta_c_hat") ? outputs["beta_c_hat"]
                                                         : json(beta);
  outputs["exponent"] = fit.exponent;
  outputs["stderr"] = fit.se;
  outputs["window"] = fit.window;
  outputs["fit"] = fit_json(fit);
  outputs["reference_exponent"] = ref;
  outputs["reference_exponent_conjectural"] = true;
  outputs["trend_p_upward"] = trend.p_upward;
  outputs["pass_flags"] = {
      {"profile_monotone", profile_monotone(profile)},
      {"no_upward_drift", trend.p_upward > 0.01},
  };
  outputs["seeds"] = seeds_json(cfg, {"betac", "survey"});

  if (cfg.beta_auto && cfg.twopoint.sensitivity) {
    const double width = outputs["beta_bracket"][1].get<double>() -
                         outputs["beta_bracket"][0].get<double>();
    json sens;
    for (const double b : {beta - width, beta + width}) {
      if (!(b > 0.0)) continue;
      auto p2 = plan;
      p2.params.beta = b;
      const auto prof2 = run_critical_survey(p2).profile;
      json item;
      item["beta"] = b;
      try {
        item["exponent"] = fit_power_law(prof2).exponent;
      } catch (const insufficient_samples_error& e) {
        item["error"] = e.what();
      }
      sens.push_back(item);
    }
    outputs["sensitivity"] = sens;
  }
  run.write_record(outputs, timer.seconds());
  std::cout << run.dir().string() << "\n";
  return 0;
}

int cmd_tail(const Config& cfg, const std::string& out_root) {
  Timer timer;
  json outputs;
  const double beta = resolve_beta(cfg, outputs);

  SurveyPlan plan;
  plan.params = cfg.model;
  plan.params.beta = beta;
  plan.box = BoxGeometry{cfg.model.d, cfg.box_side};
  plan.replicates = cfg.tail.replicates;
  plan.origins = 0;
  plan.tail_grid = cfg.tail.grid;
  plan.src = phase_source(cfg, kPhaseSurvey);
  plan.threads = cfg.threads;
  const auto tail = run_critical_survey(plan).tail;

  const auto fit = fit_power_law(tail);
  const double delta_inv = -fit.exponent;
  const double floor = (cfg.model.d - cfg.model.alpha) / (2.0 * cfg.model.d);
  const double reference =
      (cfg.model.d - cfg.model.alpha) / (cfg.model.d + cfg.model.alpha);

  RunDir run(out_root, "tail", cfg.raw);
  run.write_csv("tail.csv", {"n", "tail", "err"}, profile_rows(tail));

  outputs["delta_inverse"] = delta_inv;
  outputs["stderr"] = fit.se;
  outputs["fit"] = fit_json(fit);
  outputs["delta_inverse_floor"] = floor;
  outputs["delta_inverse_reference"] = reference;
  outputs["delta_inverse_reference_conjectural"] = true;
  outputs["pass_flags"] = {
      {"tail_floor", delta_inv + 2.0 * fit.se >= floor},
  };
  outputs["seeds"] = seeds_json(cfg, {"betac", "survey"});
  run.write_record(outputs, timer.seconds());
  std::cout << run.dir().string() << "\n";
  return 0;
}

int cmd_hier(const Config& cfg, const std::string& out_root) {
  Timer timer;
  HierPlan plan;
  plan.params = cfg.model;
  if (cfg.beta_auto) plan.params.beta = 0.0;
  plan.levels = cfg.hier.levels;
  plan.replicates = cfg.hier.replicates;
  plan.betac_replicates = cfg.betac.replicates;
  plan.q = cfg.betac.q;
  plan.src = phase_source(cfg, kPhaseSurvey);
  plan.threads = cfg.threads;
  const auto result = hierarchical_profile(plan);

  RunDir run(out_root, "hier", cfg.raw);
  run.write_csv("hier.csv", {"r", "S", "err"}, profile_rows(result.profile));

  json outputs;
  outputs["beta_c_hat"] = result.beta_c;
  outputs["bracket"] = {result.lo, result.hi};
  outputs["exponent"] = result.fit.exponent;
  outputs["stderr"] = result.fit.se;
  outputs["fit"] = fit_json(result.fit);
  outputs["reference_exponent"] = -(cfg.model.d - cfg.model.alpha);
  outputs["pass_flags"] = {
      {"slope_within_tenth",
       std::abs(result.fit.exponent + cfg.model.d - cfg.model.alpha) <= 0.1},
  };
  outputs["seeds"] = seeds_json(cfg, {"survey"});
  run.write_record(outputs, timer.seconds());
  std::cout << run.dir().string() << "\n";
  return 0;
}

namespace {

// Distinct blocks of `level` actually meeting the box, in vertex order.
std::vector<Block> blocks_at_level(const SigmaDecomposition& sg,
                                   const BoxGeometry& box, int level) {
  std::vector<Block> out;
  std::set<std::vector<Coord>> seen;
  for (std::int64_t v = 0; v < box.vertex_count; ++v) {
    const Block b = block_of(sg, box.point(v), level);
    std::vector<Coord> key(b.corner.c.begin(), b.corner.c.begin() + b.corner.d);
    if (seen.insert(key).second) out.push_back(b);
  }
  return out;
}

}  // namespace

int cmd_blocks(const Config& cfg, const std::string& out_root) {
  Timer timer;
  const int top = cfg.blocks.top_level;
  const auto sg = make_sigma(cfg, top);
  if (cfg.box_side > sg.pow_L(top))
    throw config_error("blocks.top_level: box side " +
                       std::to_string(cfg.box_side) + " exceeds L^top = " +
                       std::to_string(sg.pow_L(top)));
  if (!cfg.blocks.ghost_n.empty() &&
      BoxGeometry{cfg.model.d, cfg.box_side}.vertex_count < 16)
    throw config_error(
        "blocks.ghost_n: box too small for the tail prefactor (needs at "
        "least 16 vertices)");
  json outputs;
  const double beta = resolve_beta(cfg, outputs);

  ChainPlan plan;
  plan.params = cfg.model;
  plan.params.beta = beta;
  plan.sigma = sg;
  plan.box = BoxGeometry{cfg.model.d, cfg.box_side};
  plan.top_level = top;
  plan.base_level = cfg.blocks.base_level;
  plan.base = Pt::zero(cfg.model.d);
  if (!cfg.blocks.base.empty())
    for (int i = 0; i < cfg.model.d; ++i) plan.base[i] = cfg.blocks.base[i];
  plan.replicates = cfg.blocks.replicates;
  plan.src = phase_source(cfg, kPhaseChain);
  plan.threads = cfg.threads;
  const auto chain = run_block_chain(plan);

  RunDir run(out_root, "blocks", cfg.raw);

  std::vector<std::vector<std::string>> grows;
  int families_ok = 0;
  for (const auto& family : chain.goodness) {
    const auto need = (static_cast<int>(std::llround(
                           std::pow(cfg.model.L, cfg.model.d))) +
                       1) /
                      2;
    if (family.good_count >= need) ++families_ok;
    for (const auto& e : family.entries)
      grows.push_back({std::to_string(e.block.level),
                       corner_string(e.block.corner), format_num(e.mean_kmax),
                       format_num(e.se_kmax), format_num(e.mean_susc),
                       format_num(e.se_susc), std::to_string(e.kmax_leq),
                       std::to_string(e.susc_leq), e.good ? "1" : "0",
                       e.ancestrally_good ? "1" : "0"});
  }
  run.write_csv("goodness.csv",
                {"level", "corner", "mean_kmax", "se_kmax", "mean_susc",
                 "se_susc", "kmax_leq", "susc_leq", "good", "ancestral"},
                grows);

  const auto& top_samples = chain.levels.back().kmax;
  const std::vector<double> lambdas(cfg.blocks.lambdas.begin(),
                                    cfg.blocks.lambdas.end());
  const auto tight = tightness_report(top_samples, lambdas, cfg.blocks.epsilons);
  std::vector<std::vector<std::string>> trows;
  for (const auto& row : tight.rows)
    trows.push_back({row.label, format_num(row.threshold),
                     format_num(row.observed), format_num(row.confidence),
                     format_num(row.bound), row.pass ? "1" : "0"});
  run.write_csv("tightness.csv",
                {"row", "threshold", "observed", "confidence_0.999", "bound",
                 "pass"},
                trows);

  const std::vector<ChainLevelSamples> upper(
      chain.levels.begin() + cfg.blocks.base_level, chain.levels.end());
  const auto tvals = estimate_T(upper);
  std::vector<std::vector<std::string>> crows;
  for (const auto& t : tvals)
    crows.push_back(
        {std::to_string(t.k), format_num(t.mean), format_num(t.se)});
  run.write_csv("chain.csv", {"k", "T", "err"}, crows);

  bool ghost_pass = true;
  if (!cfg.blocks.ghost_n.empty()) {
    SurveyPlan splan;
    splan.params = plan.params;
    splan.box = plan.box;
    splan.replicates = cfg.blocks.replicates;
    splan.origins = 0;
    splan.ghost_n = cfg.blocks.ghost_n;
    splan.src = phase_source(cfg, kPhaseGhost);
    splan.threads = cfg.threads;
    const auto survey = run_critical_survey(splan);
    const double theta =
        cfg.blocks.theta > 0.0
            ? cfg.blocks.theta
            : (cfg.model.d - cfg.model.alpha) / (2.0 * cfg.model.d);
    const double A = constrained_prefactor(survey.tail, theta);
    std::vector<std::vector<std::string>> ghrows;
    for (const auto& [n, freqs] : survey.ghost) {
      const auto check = two_ghost_check(A, theta, freqs, plan.params, n);
      ghost_pass = ghost_pass && check.lhs <= check.rhs;
      ghrows.push_back({std::to_string(n), format_num(check.lhs),
                        format_num(check.rhs), format_num(check.ratio)});
    }
    run.write_csv("ghost.csv", {"n", "lhs", "rhs", "ratio"}, ghrows);
    outputs["ghost"] = {{"theta", theta}, {"A", A}, {"pass", ghost_pass}};
  }

  if (plan.box.vertex_count <= 8) {
    std::vector<std::vector<std::string>> erows;
    bool exact_ok = true;
    for (int level = 1; level <= top; ++level) {
      for (const auto& parent : blocks_at_level(sg, plan.box, level)) {
        if (static_cast<int>(block_vertices(sg, plan.box, parent).size()) < 2)
          continue;
        const auto rep =
            exact_good_children(plan.params, sg, plan.box, parent, cfg.threads);
        const auto need =
            (static_cast<int>(std::llround(std::pow(cfg.model.L, cfg.model.d))) +
             1) /
            2;
        exact_ok = exact_ok && rep.good_count >= need;
        for (const auto& ch : rep.children)
          erows.push_back({std::to_string(level),
                           corner_string(parent.corner),
                           corner_string(ch.child.corner),
                           std::to_string(ch.vertices.size()),
                           format_num(ch.mean_kmax),
                           format_num(ch.mean_susceptibility),
                           ch.good ? "1" : "0"});
      }
    }
    run.write_csv("goodness_exact.csv",
                  {"parent_level", "parent_corner", "child_corner", "vertices",
                   "mean_kmax", "mean_susc", "good"},
                  erows);
    outputs["exact_pigeonhole_pass"] = exact_ok;
  }

  outputs["m_hat"] = {{"m", tight.m.m},
                      {"tail_at_m", tight.m.tail_at_m},
                      {"band", {tight.m.band_lo, tight.m.band_hi}}};
  outputs["mean_kmax"] = tight.mean;
  outputs["tightness_pass"] = tight.all_pass;
  outputs["families_meeting_pigeonhole"] = families_ok;
  outputs["family_count"] = static_cast<int>(chain.goodness.size());
  outputs["truncated_blocks"] = chain.truncated;
  outputs["seeds"] = seeds_json(cfg, {"betac", "chain", "ghost"});
  run.write_record(outputs, timer.seconds());
  std::cout << run.dir().string() << "\n";
  return 0;
}

int cmd_oracle_check(const Config& cfg, const std::string& out_root) {
  Timer timer;
  // Fixed micro geometry: d=1 line of 4 sites, L=2, two stored levels.
  ModelParams pr;
  pr.d = 1;
  pr.alpha = 0.5;
  pr.c = 1.0;
  pr.beta = 1.0;
  pr.L = 2;
  const BoxGeometry box{1, 4};
  const auto sg = SigmaDecomposition::zeros(1, 2, 2);
  const auto sg_rand = SigmaDecomposition::random(1, 2, 2, 7);
  const auto inst = plain_instance(pr, box);
  const std::int64_t draws = cfg.oracle.draws;
  const auto src = phase_source(cfg, kPhaseOracle);

  struct Check {
    std::string name;
    SamplerCheckReport report;
  };
  std::vector<Check> checks;

  checks.push_back(
      {"plain", verify_sampler(
                    inst,
                    [&](std::int64_t rep) {
                      return sample_plain(pr, box,
                                          {src.seed, static_cast<std::uint64_t>(rep)})
                          .union_edges();
                    },
                    draws)});
  checks.push_back(
      {"layered", verify_sampler(
                      inst,
                      [&](std::int64_t rep) {
                        return sample_layered(
                                   pr, sg, box, 2,
                                   {mix_key(src.seed, 2),
                                    static_cast<std::uint64_t>(rep)})
                            .union_edges();
                      },
                      draws)});
  checks.push_back(
      {"layered_random_sigma",
       verify_sampler(
           inst,
           [&](std::int64_t rep) {
             return sample_layered(pr, sg_rand, box, 2,
                                   {mix_key(src.seed, 3),
                                    static_cast<std::uint64_t>(rep)})
                 .union_edges();
           },
           draws)});

  // Restricted law of a level-1 block: drop its strict ancestors, compare
  // against the closed-form restricted kernel.
  const Block parent = block_of(sg, Pt::zero(1), 2);
  const Block child = children_of(sg, parent).front();
  const auto inst_eta = restricted_instance(pr, sg, box, parent);
  checks.push_back(
      {"eta_restricted",
       verify_sampler(
           inst_eta,
           [&](std::int64_t rep) {
             const auto cfg_l = sample_layered(
                 pr, sg, box, 2,
                 {mix_key(src.seed, 4), static_cast<std::uint64_t>(rep)});
             return restrict_to_eta(cfg_l, sg, child);
           },
           draws)});

  RunDir run(out_root, "oracle-check", cfg.raw);
  std::vector<std::vector<std::string>> rows;
  bool pass = true;
  double min_p = 1.0;
  for (const auto& c : checks) {
    const double worst = std::min(c.report.min_marginal_p,
                                  c.report.pattern_tested ? c.report.pattern_p
                                                          : 1.0);
    min_p = std::min(min_p, worst);
    pass = pass && worst > 0.001;
    rows.push_back({c.name, std::to_string(c.report.draws),
                    format_num(c.report.min_marginal_p),
                    c.report.pattern_tested ? format_num(c.report.pattern_p)
                                            : "na",
                    format_num(c.report.max_abs_z)});
  }
  run.write_csv("oracle.csv",
                {"check", "draws", "min_marginal_p", "pattern_p", "max_abs_z"},
                rows);
  json outputs;
  outputs["pass"] = pass;
  outputs["min_p"] = min_p;
  outputs["draws"] = draws;
  outputs["seeds"] = seeds_json(cfg, {"oracle"});
  run.write_record(outputs, timer.seconds());
  std::cout << run.dir().string() << "\n";
  if (!pass) {
    std::cerr << "oracle-check: sampler law deviates from the exact law (p = "
              << min_p << " <= 0.001)\n";
    return 2;
  }
  return 0;
}

int cmd_sample(const Config& cfg, const std::string& out_root) {
  Timer timer;
  if (cfg.beta_auto)
    throw config_error("model.beta: sample needs an explicit beta");
  const BoxGeometry box{cfg.model.d, cfg.box_side};
  const auto src = phase_source(cfg, kPhaseSample);

  int level = cfg.sample.max_level;
  if (level == 0) {
    level = 1;
    while (std::pow(cfg.model.L, level) < static_cast<double>(cfg.box_side))
      ++level;
  }

  EdgeConfiguration sample;
  if (cfg.sample.mode == "plain") {
    sample = sample_plain(cfg.model, box, src);
  } else {
    const auto sg = make_sigma(cfg, level);
    if (cfg.box_side > sg.pow_L(level))
      throw config_error("sample.max_level: box side exceeds L^max_level");
    sample = cfg.sample.mode == "layered"
                 ? sample_layered(cfg.model, sg, box, level, src)
                 : sample_hierarchical(cfg.model, sg, box, level, src);
  }

  RunDir run(out_root, "sample", cfg.raw);
  {
    std::ofstream out(run.dir() / "edges.txt", std::ios::trunc);
    std::vector<std::string> header = {
        "mode " + cfg.sample.mode,
        "seed " + std::to_string(cfg.seed),
        "side " + std::to_string(cfg.box_side),
    };
    dump_configuration(out, sample, header);
  }
  json outputs;
  outputs["mode"] = cfg.sample.mode;
  outputs["edges"] = sample.edge_count();
  outputs["distinct_edges"] = static_cast<std::int64_t>(sample.union_edges().size());
  outputs["layers"] = static_cast<int>(sample.layers.size());
  outputs["truncated_blocks"] = sample.truncated_blocks;
  outputs["warnings"] = sample.warnings;
  outputs["seeds"] = seeds_json(cfg, {"sample"});
  run.write_record(outputs, timer.seconds());
  std::cout << run.dir().string() << "\n";
  return 0;
}

int run_command(const std::string& name, const Config& cfg,
                const std::string& out_root) {
  try {
    if (name == "betac") return cmd_betac(cfg, out_root);
    if (name == "twopoint") return cmd_twopoint(cfg, out_root);
    if (name == "tail") return cmd_tail(cfg, out_root);
    if (name == "hier") return cmd_hier(cfg, out_root);
    if (name == "blocks") return cmd_blocks(cfg, out_root);
    if (name == "oracle-check") return cmd_oracle_check(cfg, out_root);
    if (name == "sample") return cmd_sample(cfg, out_root);
    std::cerr << "unknown command: " << name << "\n";
    return 1;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace perco::cli
