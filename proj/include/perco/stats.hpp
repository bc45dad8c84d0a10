#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "perco/rng.hpp"

namespace perco::stats {

struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  double value() const { return s; }
};

// Binomial quantile at u, computed by a CDF walk. Monotone in p for fixed u,
// which the coupled sampler relies on.
std::int64_t binomial_inversion(std::int64_t n, double p, double u);

// Hoermann's transformed-rejection sampler; requires 0 < p <= 0.5, n*p >= 10.
std::int64_t binomial_btrs(std::int64_t n, double p, Rng& rng);

// Inversion for small means, BTRS above; force_inversion keeps the quantile
// path regardless of the mean (shared-uniform coupling across beta).
std::int64_t sample_binomial(std::int64_t n, double p, Rng& rng,
                             bool force_inversion);

struct Interval {
  double lo = 0.0, hi = 1.0;
};

// Two-sided Clopper-Pearson interval at confidence `conf`.
Interval clopper_pearson(std::int64_t k, std::int64_t n, double conf);

// One-sided lower confidence bound on a binomial proportion.
double binomial_lower_bound(std::int64_t k, std::int64_t n, double conf);

// Regularized incomplete gamma Q(a,x) and beta I_x(a,b).
double gamma_q(double a, double x);
double inc_beta(double a, double b, double x);

// Survival functions.
double chisq_sf(double x, double dof);
double norm_sf(double z);

struct LinFit {
  double slope = 0.0, intercept = 0.0;
  double se_slope = 0.0, se_intercept = 0.0;
  double chi2 = 0.0;
  int n = 0;
};

// Weighted least squares, weights w = 1/sigma^2.
LinFit weighted_linfit(std::span<const double> x, std::span<const double> y,
                       std::span<const double> w);

struct MannKendall {
  double s = 0.0;
  double z = 0.0;
  double p_upward = 1.0;  // small value = significant increasing trend
};

MannKendall mann_kendall(std::span<const double> y);

struct MeanErr {
  double mean = 0.0, se = 0.0;
};

// Batch-means standard error over contiguous batches of replicates.
MeanErr batch_means(std::span<const double> values, int batches);

}  // namespace perco::stats
