#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "perco/box.hpp"
#include "perco/errors.hpp"
#include "perco/observables.hpp"
#include "perco/params.hpp"
#include "perco/rng.hpp"
#include "perco/sampler.hpp"
#include "perco/stats.hpp"

namespace perco {

struct BetacPlan {
  ModelParams params;               // beta is ignored
  std::vector<std::int64_t> sides;  // ascending, largest/smallest ≥ 4
  std::int64_t replicates = 200;
  double q = 0.0;  // normalization exponent; 0 picks the default (d+α)/2d
  double bracket_lo = 0.05;
  double bracket_hi = 2.0;
  double tol = 1e-3;  // relative bracket width to stop at
  int max_widen = 8;
  int max_iters = 80;
  bool hierarchical = false;  // bisect the block-layer-only model instead
  int hier_levels = 0;        // top level for the largest hierarchical box
  RandomSource src;
  int threads = 0;
};

struct BetacResult {
  double beta_c = 0.0;
  double lo = 0.0, hi = 0.0;
  double q = 0.0;  // assumed exponent, or the growth measured at beta_c
  std::vector<std::pair<double, double>> curve;  // (beta, statistic) evals
};

// Locates the crossing of m(β, side) = E|K_max ∩ box| / side^{dq} curves.
// With an explicit q (or just two sides) this bisects the largest/smallest
// ratio statistic around 1. With three or more sides and q = 0 it bisects
// the growth-exponent gap between the upper and lower side pairs instead:
// the root is where all curves cross at once, no exponent assumed up front,
// and the measured growth is returned as q. All β evaluations reuse the
// same replicate streams (coupled draws), so the statistic is a smooth
// deterministic function of β for a fixed seed.
BetacResult estimate_beta_c(const BetacPlan& plan);

struct ProfilePoint {
  double r = 0.0;
  double value = 0.0;
  double se = 0.0;
};

struct SurveyPlan {
  ModelParams params;  // beta set to the study point
  BoxGeometry box;
  std::int64_t replicates = 0;
  int origins = 32;                      // 0 disables the two-point profile
  std::vector<int> radii;                // empty → dyadic up to side/4
  std::vector<std::int64_t> tail_grid;   // empty → dyadic up to V/16
  std::vector<std::int64_t> ghost_n;     // empty disables ghost frequencies
  bool collect_tail = true;
  RandomSource src;
  SamplerOptions sampler;
  int threads = 0;
};

struct SurveyResult {
  std::vector<ProfilePoint> profile;  // r, S(r), batch-means error
  std::vector<ProfilePoint> tail;     // n, P(|K| ≥ n), batch-means error
  Pt ghost_origin;
  // per requested n: displacement → empirical two-large-cluster frequency
  std::vector<std::pair<std::int64_t, std::vector<std::pair<Pt, double>>>> ghost;
  std::int64_t replicates = 0;
};

// One pass of plain sampling at fixed β collecting the two-point profile over
// central origins, the size-biased cluster tail, and the two-ghost event
// frequencies, all from the same replicates.
SurveyResult run_critical_survey(const SurveyPlan& plan);

std::vector<ProfilePoint> two_point_profile(const ModelParams& pr,
                                            const BoxGeometry& box,
                                            std::int64_t replicates,
                                            int origins, RandomSource src,
                                            int threads = 0);

std::vector<ProfilePoint> cluster_tail_profile(const ModelParams& pr,
                                               const BoxGeometry& box,
                                               std::int64_t replicates,
                                               RandomSource src,
                                               int threads = 0);

struct PowerFit {
  double exponent = 0.0;
  double se = 0.0;
  double prefactor = 0.0;  // value at r = 1 implied by the fit
  double chi2 = 0.0;
  std::vector<double> window;  // r values that entered the fit
  std::vector<std::string> warnings;
};

// Weighted least squares of log(value) against log(r). The window drops
// r < 4 and the top octave before fitting and needs ≥ 4 surviving points
// spanning ≥ 2 octaves.
PowerFit fit_power_law(const std::vector<ProfilePoint>& table);

// Smallest A with tail(n) ≤ A·n^{-theta} across the measured points.
double constrained_prefactor(const std::vector<ProfilePoint>& tail,
                             double theta);

// Mann-Kendall trend statistics of value·r^{drift} over the fit window,
// ordered by increasing r. Used to test for upward drift of the compensated
// two-point profile.
stats::MannKendall compensated_trend(const std::vector<ProfilePoint>& table,
                                     double drift);

struct HierPlan {
  ModelParams params;  // beta > 0 runs at that beta; otherwise bisect first
  int levels = 0;      // box side = L^levels
  std::int64_t replicates = 0;
  std::int64_t betac_replicates = 200;
  double q = 0.0;
  RandomSource src;
  int threads = 0;
};

struct HierResult {
  double beta_c = 0.0;
  double lo = 0.0, hi = 0.0;
  std::vector<ProfilePoint> profile;  // r = L^n, connection frequency at level n
  PowerFit fit;
};

// Pure block-layer model on an aligned box of side L^levels: finds its own
// critical point, then fits the per-level connection probability against the
// hierarchical distance.
HierResult hierarchical_profile(const HierPlan& plan);

}  // namespace perco
