#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "perco/box.hpp"
#include "perco/edge_config.hpp"
#include "perco/errors.hpp"
#include "perco/kernels.hpp"
#include "perco/params.hpp"
#include "perco/sigma.hpp"

namespace perco {

inline constexpr int kOracleMaxVertices = 16;
inline constexpr int kOracleMaxEdges = 28;

// A complete instance small enough for exact enumeration: every unordered
// pair carries an open probability. Pairs at probability 0 or 1 are handled
// outside the enumeration (1 means pre-merged), so the 2^E pattern count only
// covers genuinely random pairs.
struct TinyInstance {
  int nv = 0;
  std::vector<double> prob;  // row-major nv*nv, symmetric, zero diagonal

  static TinyInstance empty(int nv);
  double p(int u, int v) const {
    return prob[static_cast<std::size_t>(u) * static_cast<std::size_t>(nv) +
                static_cast<std::size_t>(v)];
  }
  void set_p(int u, int v, double value);
  int random_edge_count() const;
  void validate() const;
};

// Union-find over at most 16 vertices with explicit undo, used by the
// pattern enumerator.
struct SmallDsu {
  std::array<std::uint8_t, kOracleMaxVertices> parent{};
  std::array<std::int8_t, kOracleMaxVertices> size{};

  void reset(int nv);
  int find(int v) const;
  // Returns true and records undo info if a merge happened.
  bool unite(int a, int b, std::pair<std::uint8_t, std::uint8_t>* undo);
  void undo(std::pair<std::uint8_t, std::uint8_t> rec);
};

// Evaluates per-pattern statistics and returns their exact expectations.
// eval(dsu, out) must write the same number of entries every call and may
// only depend on the connectivity partition, never on individual edge
// states. Results are identical for every thread count.
std::vector<double> expected_stats(
    const TinyInstance& inst,
    const std::function<void(const SmallDsu&, std::vector<double>&)>& eval,
    int threads = 0);

// Reference enumerator: plain loop over all 2^E bitmasks, no pruning.
// Exists to validate the pruned traversal and as the benchmark baseline.
std::vector<double> expected_stats_reference(
    const TinyInstance& inst,
    const std::function<void(const SmallDsu&, std::vector<double>&)>& eval);

double exact_connection_probability(const TinyInstance& inst, int x, int y);

// law[s] = P(|K(x)| = s) for s in 1..nv (index 0 unused).
std::vector<double> exact_cluster_law(const TinyInstance& inst, int x);

// law[m] = P(max cluster intersection with B equals m), m in 0..|B|.
std::vector<double> exact_kmax_law(const TinyInstance& inst,
                                   const std::vector<int>& B);

double exact_mean_kmax(const TinyInstance& inst, const std::vector<int>& B);
double exact_mean_restricted_susceptibility(const TinyInstance& inst,
                                            const std::vector<int>& B);

// Builds the instance whose pairwise rates are the restricted kernel of the
// children of `parent` over the whole box (siblings share that kernel).
TinyInstance restricted_instance(const ModelParams& pr,
                                 const SigmaDecomposition& sg,
                                 const BoxGeometry& box, const Block& parent);

// Plain J-percolation instance over the whole box.
TinyInstance plain_instance(const ModelParams& pr, const BoxGeometry& box);

struct ChildStats {
  Block child;
  std::vector<int> vertices;  // instance indices of child ∩ box
  double mean_kmax = 0.0;
  double mean_susceptibility = 0.0;
  bool good = false;
};

struct ExactChildrenReport {
  Block parent;
  std::vector<ChildStats> children;
  int good_count = 0;
};

// Exact expectations per child of `parent` under the shared restricted law,
// plus goodness flags from exact comparisons (ties count as ≤).
ExactChildrenReport exact_good_children(const ModelParams& pr,
                                        const SigmaDecomposition& sg,
                                        const BoxGeometry& box,
                                        const Block& parent, int threads = 0);

struct MarginalCheck {
  int u = 0;
  int v = 0;
  double exact = 0.0;
  double empirical = 0.0;
  double z = 0.0;
  double p_value = 1.0;
};

struct SamplerCheckReport {
  std::int64_t draws = 0;
  std::vector<MarginalCheck> marginals;
  double min_marginal_p = 1.0;
  bool pattern_tested = false;
  double pattern_p = 1.0;
  double max_abs_z = 0.0;
};

// Compares empirical frequencies from `draw` (called once per replicate,
// returning the open edge set deduplicated across layers) against the exact
// per-pair law, plus a full-pattern chi-square when 2^E is small.
SamplerCheckReport verify_sampler(
    const TinyInstance& inst,
    const std::function<std::vector<Edge>(std::int64_t)>& draw,
    std::int64_t count);

}  // namespace perco
