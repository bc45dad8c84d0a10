#include "perco/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace perco::stats {

std::int64_t binomial_inversion(std::int64_t n, double p, double u) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  const double q = 1.0 - p;
  const double pq = p / q;
  std::int64_t k = 0;
  double lpmf0 = static_cast<double>(n) * std::log1p(-p);
  double pmf, cdf;
  if (lpmf0 < -690.0) {
    // pmf(0) underflows; skip to 12 sigma below the mean. The pmf there is
    // always representable (the large-deviation rate stays near z^2/2 ~ 72,
    // unlike further out where it blows past 745 and exp() flushes to zero),
    // and the skipped cdf mass ~ 1e-33 sits far below the 2^-53 resolution
    // of the uniform draw, so the computed quantile is unaffected.
    const double mean = static_cast<double>(n) * p;
    const double sd = std::sqrt(mean * q);
    k = std::max<std::int64_t>(0, static_cast<std::int64_t>(mean - 12.0 * sd));
    const double lp = std::lgamma(static_cast<double>(n) + 1.0) -
                      std::lgamma(static_cast<double>(k) + 1.0) -
                      std::lgamma(static_cast<double>(n - k) + 1.0) +
                      static_cast<double>(k) * std::log(p) +
                      static_cast<double>(n - k) * std::log1p(-p);
    pmf = std::exp(lp);
  } else {
    pmf = std::exp(lpmf0);
  }
  cdf = pmf;
  while (u > cdf && k < n) {
    pmf *= static_cast<double>(n - k) / static_cast<double>(k + 1) * pq;
    ++k;
    cdf += pmf;
    if (pmf <= 0.0 && cdf < u) return k;  // numeric tail exhausted
  }
  return k;
}

std::int64_t binomial_btrs(std::int64_t n, double p, Rng& rng) {
  // Transformed rejection with squeeze (Hoermann 1993), p <= 0.5, n*p >= 10.
  const double nd = static_cast<double>(n);
  const double np = nd * p;
  const double q = 1.0 - p;
  const double spq = std::sqrt(np * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = np + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double urvr = 0.86 * v_r;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double lpq = std::log(p / q);
  const auto m = static_cast<std::int64_t>((nd + 1.0) * p);
  const double h = std::lgamma(static_cast<double>(m) + 1.0) +
                   std::lgamma(static_cast<double>(n - m) + 1.0);
  for (;;) {
    double v = rng.uniform01();
    double u;
    if (v <= urvr) {
      u = v / v_r - 0.43;
      return static_cast<std::int64_t>(
          std::floor((2.0 * a / (0.5 - std::abs(u)) + b) * u + c));
    }
    if (v >= v_r) {
      u = rng.uniform01() - 0.5;
    } else {
      u = v / v_r - 0.93;
      u = (u < 0.0 ? -0.5 : 0.5) - u;
      v = rng.uniform01() * v_r;
    }
    const double us = 0.5 - std::abs(u);
    const auto k =
        static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + c));
    if (k < 0 || k > n) continue;
    v = v * alpha / (a / (us * us) + b);
    const double kd = static_cast<double>(k);
    if (std::log(v) <= h - std::lgamma(kd + 1.0) -
                           std::lgamma(static_cast<double>(n - k) + 1.0) +
                           (kd - static_cast<double>(m)) * lpq)
      return k;
  }
}

std::int64_t sample_binomial(std::int64_t n, double p, Rng& rng,
                             bool force_inversion) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  const bool flip = p > 0.5;
  const double ps = flip ? 1.0 - p : p;
  const double mean = static_cast<double>(n) * ps;
  std::int64_t k;
  if (force_inversion || mean < 30.0) {
    // Complement via 1-u keeps the map u -> k equal to the true quantile
    // function for every p, hence monotone in p under a shared u.
    const double u = rng.uniform01();
    k = flip ? n - binomial_inversion(n, ps, 1.0 - u)
             : binomial_inversion(n, ps, u);
  } else {
    k = binomial_btrs(n, ps, rng);
    if (flip) k = n - k;
  }
  return k;
}

namespace {

// Incomplete gamma helpers (series for x < a+1, continued fraction above).
double gamma_p_series(double a, double x) {
  double sum = 1.0 / a, term = sum, ap = a;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double md = static_cast<double>(m);
    const double m2 = 2.0 * md;
    double aa = md * (b - md) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + md) * (qab + md) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h;
}

double beta_quantile(double prob, double a, double b) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (inc_beta(a, b, mid) < prob)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) -
                             std::lgamma(b) + a * std::log(x) +
                             b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double chisq_sf(double x, double dof) { return gamma_q(0.5 * dof, 0.5 * x); }

double norm_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

Interval clopper_pearson(std::int64_t k, std::int64_t n, double conf) {
  if (n <= 0 || k < 0 || k > n)
    throw std::domain_error("clopper_pearson: bad counts");
  const double a = 1.0 - conf;
  Interval iv;
  iv.lo = (k == 0) ? 0.0
                   : beta_quantile(a / 2.0, static_cast<double>(k),
                                   static_cast<double>(n - k) + 1.0);
  iv.hi = (k == n) ? 1.0
                   : beta_quantile(1.0 - a / 2.0, static_cast<double>(k) + 1.0,
                                   static_cast<double>(n - k));
  return iv;
}

double binomial_lower_bound(std::int64_t k, std::int64_t n, double conf) {
  if (n <= 0 || k < 0 || k > n)
    throw std::domain_error("binomial_lower_bound: bad counts");
  if (k == 0) return 0.0;
  return beta_quantile(1.0 - conf, static_cast<double>(k),
                       static_cast<double>(n - k) + 1.0);
}

LinFit weighted_linfit(std::span<const double> x, std::span<const double> y,
                       std::span<const double> w) {
  if (x.size() != y.size() || x.size() != w.size() || x.size() < 2)
    throw std::domain_error("weighted_linfit: need >= 2 matched points");
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  if (det <= 0.0) throw std::domain_error("weighted_linfit: degenerate x");
  LinFit f;
  f.n = static_cast<int>(x.size());
  f.slope = (sw * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  f.se_slope = std::sqrt(sw / det);
  f.se_intercept = std::sqrt(sxx / det);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    f.chi2 += w[i] * r * r;
  }
  return f;
}

MannKendall mann_kendall(std::span<const double> y) {
  const auto n = static_cast<std::int64_t>(y.size());
  if (n < 3) throw std::domain_error("mann_kendall: need >= 3 points");
  double s = 0.0;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j) {
      if (y[j] > y[i])
        s += 1.0;
      else if (y[j] < y[i])
        s -= 1.0;
    }
  const double nd = static_cast<double>(n);
  const double var = nd * (nd - 1.0) * (2.0 * nd + 5.0) / 18.0;
  MannKendall mk;
  mk.s = s;
  if (s > 0)
    mk.z = (s - 1.0) / std::sqrt(var);
  else if (s < 0)
    mk.z = (s + 1.0) / std::sqrt(var);
  mk.p_upward = norm_sf(mk.z);
  return mk;
}

MeanErr batch_means(std::span<const double> values, int batches) {
  const auto n = static_cast<std::int64_t>(values.size());
  if (n < 2) throw std::domain_error("batch_means: need >= 2 values");
  batches = static_cast<int>(std::max<std::int64_t>(2, std::min<std::int64_t>(batches, n)));
  const std::int64_t per = n / batches;
  std::vector<double> bm;
  bm.reserve(static_cast<std::size_t>(batches));
  KahanSum total;
  for (int b = 0; b < batches; ++b) {
    const std::int64_t lo = b * per;
    const std::int64_t hi = (b == batches - 1) ? n : lo + per;
    KahanSum s;
    for (std::int64_t i = lo; i < hi; ++i) s.add(values[static_cast<std::size_t>(i)]);
    bm.push_back(s.value() / static_cast<double>(hi - lo));
  }
  for (double v : values) total.add(v);
  double mean = total.value() / static_cast<double>(n);
  double var = 0.0;
  for (double m : bm) var += (m - mean) * (m - mean);
  var /= static_cast<double>(batches - 1);
  MeanErr me;
  me.mean = mean;
  me.se = std::sqrt(var / static_cast<double>(batches));
  return me;
}

}  // namespace perco::stats
