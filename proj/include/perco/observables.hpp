#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "perco/box.hpp"
#include "perco/clusters.hpp"
#include "perco/errors.hpp"
#include "perco/params.hpp"
#include "perco/rng.hpp"
#include "perco/sampler.hpp"
#include "perco/sigma.hpp"

namespace perco {

// Per-replicate statistics of one block under its restricted configuration.
struct BlockEnsemble {
  Block block;
  std::vector<std::int64_t> kmax;  // |K_max ∩ B| per replicate
  std::vector<std::int64_t> susc;  // Σ_C |C ∩ B|² per replicate

  std::int64_t replicates() const {
    return static_cast<std::int64_t>(kmax.size());
  }
};

struct MEstimate {
  int m = 2;                // smallest m with empirical tail ≤ 1/e, floored at 2
  double tail_at_m = 0.0;   // empirical P(X ≥ m)
  int band_lo = 2;          // plausible estimates at 95% binomial confidence
  int band_hi = 2;
};

// Typical value of the samples: min{m : P̂(X ≥ m) ≤ 1/e}, never below 2.
// Needs at least 100 replicates.
MEstimate estimate_M(const std::vector<std::int64_t>& samples);

struct GoodnessEntry {
  Block block;
  double mean_kmax = 0.0, se_kmax = 0.0;
  double mean_susc = 0.0, se_susc = 0.0;
  int kmax_leq = 0;  // siblings whose mean kmax is ≥ ours (ties count)
  int susc_leq = 0;
  bool good = false;
  bool ancestrally_good = false;
};

struct GoodnessReport {
  std::vector<GoodnessEntry> entries;
  int good_count = 0;
};

// Flags each of the L^d sibling ensembles: good iff its mean |K_max ∩ B| is
// ≤ that of at least ⌊L^d/2⌋−1 siblings and its restricted susceptibility is
// ≤ that of at least one sibling. Statistical dead heats (|Δ| below twice the
// pooled standard error) count as ≤.
GoodnessReport classify_good(const std::vector<BlockEnsemble>& siblings,
                             const ModelParams& pr);

// Samples of one spine level: statistics of the spine block measured in the
// configuration restricted to that level, plus the cross product against the
// chain's base block.
struct ChainLevelSamples {
  Block block;
  std::vector<std::int64_t> kmax;
  std::vector<std::int64_t> susc;
  std::vector<std::int64_t> cross_base;  // Σ_C |C∩base|·|C∩block|
};

struct TEstimate {
  int k = 0;
  double mean = 0.0;
  double se = 0.0;
};

// T̂_k from the chain: mean cross product between the base block and the
// block k levels up, measured under the latter's restriction. T̂_0 is the
// base block's restricted susceptibility.
std::vector<TEstimate> estimate_T(const std::vector<ChainLevelSamples>& chain);

struct TightnessRow {
  std::string label;
  double threshold = 0.0;   // sample cutoff the row counts against
  double observed = 0.0;    // empirical probability or ratio
  double confidence = 0.0;  // one-sided 0.999 bound on the true value
  double bound = 0.0;       // theorem bound it must respect
  bool pass = false;
};

struct TightnessReport {
  MEstimate m;
  double mean = 0.0;
  double se = 0.0;
  std::vector<TightnessRow> rows;
  bool all_pass = true;
};

// Concentration checks around M̂: exponential upper tail, linear lower tail,
// and the mean-to-typical-value ratio. Rows fail only when violated at
// one-sided 0.999 confidence.
TightnessReport tightness_report(const std::vector<std::int64_t>& samples,
                                 const std::vector<double>& lambdas,
                                 const std::vector<double>& epsilons);

struct GhostCheck {
  std::int64_t n = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

// lhs = Σ_z (e^{βJ(z)}−1)·freq(z)² over displacements from the origin, where
// freq(z) estimates the probability that origin and origin+z lie in distinct
// clusters of size ≥ n each; rhs = 40000·A²/((1−2θ)²·n^{1+2θ}).
GhostCheck two_ghost_check(double A, double theta,
                           const std::vector<std::pair<Pt, double>>& freqs,
                           const ModelParams& pr, std::int64_t n);

struct ChainPlan {
  ModelParams params;
  SigmaDecomposition sigma;
  BoxGeometry box;
  int top_level = 0;   // highest level whose block layer is sampled
  int base_level = 0;  // level of the T profile's base block
  Pt base;             // point whose nested blocks form the spine
  std::int64_t replicates = 0;
  RandomSource src;    // replicate r runs on stream src.stream + r
  SamplerOptions sampler;
  int threads = 0;
};

struct ChainResult {
  std::vector<Block> spine;                          // index = level, 0..N
  std::vector<ChainLevelSamples> levels;             // 0..N
  std::vector<std::vector<BlockEnsemble>> families;  // [ℓ] = children of spine[ℓ+1]
  std::vector<GoodnessReport> goodness;              // per family
  bool truncated = false;
};

// Samples `replicates` layered configurations and walks the nested blocks of
// `base` upward, measuring each level's statistics in the configuration
// restricted to that level. Children of each spine block share a restriction,
// so one labeling per level serves the whole sibling family.
ChainResult run_block_chain(const ChainPlan& plan);

}  // namespace perco
