#ifndef PTAIL_STATS_HPP
#define PTAIL_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "ptail/errors.hpp"

namespace ptail {

// Standard normal cdf.  For z >= 0 evaluated through erf; the negative
// branch is reflected so that Phi(-z) + Phi(z) == 1 holds exactly.
inline double normal_cdf(double z) {
  if (z < 0.0) return 1.0 - normal_cdf(-z);
  return 0.5 + 0.5 * std::erf(z / 1.4142135623730951);
}

// Asymptotic Kolmogorov distribution K(lambda) = P(sup|B(t)| <= lambda).
// Dual series (theta-transformed for small lambda), both truncated at
// 100 terms.
inline double kolmogorov_cdf(double lambda) {
  if (lambda <= 0.0) return 0.0;
  constexpr int kMaxTerms = 100;
  constexpr double kPi = 3.14159265358979323846;
  if (lambda < 1.18) {
    const double f = kPi * kPi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k <= kMaxTerms; ++k) {
      const double term = std::exp(-f * (2 * k - 1) * (2 * k - 1));
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    return std::sqrt(2.0 * kPi) / lambda * sum;
  }
  double sum = 0.0;
  for (int k = 1; k <= kMaxTerms; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-18) break;
  }
  return std::clamp(1.0 - 2.0 * sum, 0.0, 1.0);
}

inline double kolmogorov_pvalue(double lambda) {
  return std::clamp(1.0 - kolmogorov_cdf(lambda), 0.0, 1.0);
}

// One-sample KS statistic against a cdf evaluator; values must be sorted
// ascending.  D = max_i max(i/n - F(v_i), F(v_i) - (i-1)/n).
inline double ks_statistic(std::span<const double> sorted_values,
                           const std::function<double(double)>& cdf) {
  if (sorted_values.empty()) throw PreconditionError("ks_statistic: empty sample");
  const double n = static_cast<double>(sorted_values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted_values.size(); ++i) {
    const double f = cdf(sorted_values[i]);
    const double di = static_cast<double>(i);
    d = std::max(d, std::max((di + 1.0) / n - f, f - di / n));
  }
  return d;
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample KS test with the asymptotic p-value (lambda = sqrt(n) D).
inline KsResult ks_test(std::vector<double> values,
                        const std::function<double(double)>& cdf) {
  std::sort(values.begin(), values.end());
  KsResult r;
  r.statistic = ks_statistic(values, cdf);
  r.p_value = kolmogorov_pvalue(std::sqrt(static_cast<double>(values.size())) *
                                r.statistic);
  return r;
}

// Two-sample KS test.  Ties across samples are handled by advancing both
// empirical cdfs through every observation equal to the current value
// before measuring the gap.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw PreconditionError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  KsResult r;
  r.statistic = d;
  const double n_eff = na * nb / (na + nb);
  r.p_value = kolmogorov_pvalue(std::sqrt(n_eff) * d);
  return r;
}

namespace detail {

// Regularized lower incomplete gamma P(a, x); series for x < a+1,
// Lentz continued fraction otherwise.
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw PreconditionError("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int n = 1; n < 500; ++n) {
    const double an = -n * (n - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

}  // namespace detail

// Upper tail of the chi-square distribution with df degrees of freedom.
inline double chi_square_pvalue(double statistic, double df) {
  if (statistic <= 0.0) return 1.0;
  return std::clamp(1.0 - detail::gamma_p(df / 2.0, statistic / 2.0), 0.0, 1.0);
}

struct ChiSquareResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

// Goodness-of-fit chi-square of observed counts against expected counts.
// Cells with expected count zero must have zero observations.
inline ChiSquareResult chi_square_gof(std::span<const double> observed,
                                      std::span<const double> expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw PreconditionError("chi_square_gof: size mismatch");
  ChiSquareResult r;
  std::size_t used = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) {
      if (observed[i] > 0.0)
        throw PreconditionError("chi_square_gof: mass on zero-expectation cell");
      continue;
    }
    const double diff = observed[i] - expected[i];
    r.statistic += diff * diff / expected[i];
    ++used;
  }
  r.df = static_cast<double>(used > 1 ? used - 1 : 1);
  r.p_value = chi_square_pvalue(r.statistic, r.df);
  return r;
}

// Independence chi-square on an r x c contingency table (row-major counts).
inline ChiSquareResult chi_square_independence(
    const std::vector<std::vector<double>>& table) {
  if (table.empty() || table.front().empty())
    throw PreconditionError("chi_square_independence: empty table");
  const std::size_t rows = table.size();
  const std::size_t cols = table.front().size();
  std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (table[i].size() != cols)
      throw PreconditionError("chi_square_independence: ragged table");
    for (std::size_t j = 0; j < cols; ++j) {
      row_sum[i] += table[i][j];
      col_sum[j] += table[i][j];
      total += table[i][j];
    }
  }
  if (total <= 0.0)
    throw PreconditionError("chi_square_independence: empty counts");
  ChiSquareResult r;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double e = row_sum[i] * col_sum[j] / total;
      if (e <= 0.0) continue;
      const double diff = table[i][j] - e;
      r.statistic += diff * diff / e;
    }
  }
  r.df = static_cast<double>((rows - 1) * (cols - 1));
  r.p_value = chi_square_pvalue(r.statistic, r.df);
  return r;
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // denominator n-1
  double skewness = 0.0;
};

inline Moments sample_moments(std::span<const double> values) {
  if (values.size() < 2)
    throw PreconditionError("sample_moments: need at least 2 values");
  const double n = static_cast<double>(values.size());
  Moments m;
  for (double v : values) m.mean += v;
  m.mean /= n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : values) {
    const double d = v - m.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m.variance = m2 / (n - 1.0);
  const double m2n = m2 / n;
  m.skewness = m2n > 0.0 ? (m3 / n) / std::pow(m2n, 1.5) : 0.0;
  return m;
}

inline double median(std::vector<double> values) {
  if (values.empty()) throw PreconditionError("median: empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace ptail

#endif  // PTAIL_STATS_HPP
