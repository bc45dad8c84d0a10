#pragma once

#include "perco/edge_config.hpp"
#include "perco/kernels.hpp"
#include "perco/rng.hpp"

namespace perco {

// Standard follows the fastest exact path per displacement class. Coupled
// forces quantile-based counts and prefix-nested placement so that the edge
// set at beta is contained in the edge set at beta' >= beta under the same
// (seed, stream); bisection on beta relies on that.
enum class SampleMode { Standard, Coupled };

struct SamplerOptions {
  SampleMode mode = SampleMode::Standard;
  KernelFn kernel;  // empty: power-law default
  // Above this expected count a class falls back to per-pair Bernoulli.
  double dense_mean_threshold = 1e6;
};

// Independent edges straight from the translation-invariant kernel.
EdgeConfiguration sample_plain(const ModelParams& pr, const BoxGeometry& box,
                               RandomSource src,
                               const SamplerOptions& opts = {});

// Hierarchical split: one remainder layer (thinned against the dominating
// kernel) plus one homogeneous layer per block of level 1..max_level meeting
// the box. The union is distributed exactly as sample_plain.
EdgeConfiguration sample_layered(const ModelParams& pr,
                                 const SigmaDecomposition& sg,
                                 const BoxGeometry& box, int max_level,
                                 RandomSource src,
                                 const SamplerOptions& opts = {});

// Block layers only: percolation driven by the hierarchical part alone.
EdgeConfiguration sample_hierarchical(const ModelParams& pr,
                                      const SigmaDecomposition& sg,
                                      const BoxGeometry& box, int max_level,
                                      RandomSource src,
                                      const SamplerOptions& opts = {});

// Edges visible to the cluster of b: every layer except those of b's strict
// ancestors. Requires a layered configuration built from the same sigma.
std::vector<Edge> restrict_to_eta(const EdgeConfiguration& cfg,
                                  const SigmaDecomposition& sg,
                                  const Block& b);

}  // namespace perco
