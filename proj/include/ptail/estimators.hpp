#ifndef PTAIL_ESTIMATORS_HPP
#define PTAIL_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ptail/errors.hpp"
#include "ptail/io.hpp"
#include "ptail/sample.hpp"

namespace ptail {

// Threshold choice: a fixed level y, or the (k+1)-th top order statistic.
struct ThresholdSpec {
  enum class Mode { kFixedLevel, kTopK };
  Mode mode = Mode::kFixedLevel;
  double level = 0.0;
  std::size_t k = 0;

  static ThresholdSpec fixed_level(double y) {
    return {Mode::kFixedLevel, y, 0};
  }
  static ThresholdSpec top_k(std::size_t k) { return {Mode::kTopK, 0.0, k}; }
};

struct ThresholdResolution {
  double y_n = 0.0;
  std::size_t n_exceed = 0;  // N_n, strict exceedances
  double p_hat = 0.0;        // N_n / n
  std::size_t n = 0;
  // Top-k resolution with ties at the order statistic makes N_n < k.
  bool tied_at_threshold = false;
};

inline ThresholdResolution resolve_threshold(const SampleSet& sample,
                                             const ThresholdSpec& spec) {
  if (sample.n == 0) throw PreconditionError("resolve_threshold: empty sample");
  ThresholdResolution res;
  res.n = sample.n;
  if (spec.mode == ThresholdSpec::Mode::kFixedLevel) {
    if (!std::isfinite(spec.level))
      throw ConfigError("threshold level must be finite");
    res.y_n = spec.level;
  } else {
    if (spec.k < 1 || spec.k >= sample.n)
      throw PreconditionError("resolve_threshold: top-k requires 1 <= k < n");
    // y_n = (k+1)-th largest response
    std::vector<double> sorted(sample.y);
    std::nth_element(sorted.begin(), sorted.begin() + spec.k, sorted.end(),
                     std::greater<double>());
    res.y_n = sorted[spec.k];
  }
  for (double v : sample.y)
    if (v > res.y_n) ++res.n_exceed;
  res.p_hat = static_cast<double>(res.n_exceed) /
              static_cast<double>(sample.n);
  if (spec.mode == ThresholdSpec::Mode::kTopK)
    res.tied_at_threshold = res.n_exceed != spec.k;
  return res;
}

// Hill-type estimator: mean log-excess over the threshold.
inline double hill_estimate(const SampleSet& sample,
                            const ThresholdResolution& res) {
  if (res.n_exceed == 0)
    throw NoExceedancesError("hill_estimate: no exceedances above y_n = " +
                             format_double(res.y_n));
  double acc = 0.0;
  for (double v : sample.y)
    if (v > res.y_n) acc += std::log(v / res.y_n);
  return acc / static_cast<double>(res.n_exceed);
}

// Pseudo empirical distribution of the covariates of exceedances,
// C_hat(x) = (1/N_n) #{i : Y_i > y_n, X_i <= x componentwise}.
inline double integrated_skedasis_estimate(const SampleSet& sample,
                                           const ThresholdResolution& res,
                                           std::span<const double> x) {
  if (res.n_exceed == 0)
    throw NoExceedancesError("integrated_skedasis_estimate: no exceedances");
  if (x.size() != sample.d)
    throw PreconditionError("integrated_skedasis_estimate: dimension mismatch");
  std::size_t count = 0;
  for (std::size_t i = 0; i < sample.n; ++i) {
    if (!(sample.y[i] > res.y_n)) continue;
    const auto xi = sample.covariate(i);
    bool below = true;
    for (std::size_t j = 0; j < sample.d; ++j)
      if (xi[j] > x[j]) {
        below = false;
        break;
      }
    if (below) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(res.n_exceed);
}

// Kernel skedasis estimator with a box window of sup-norm half-width h
// (strict inequality, window volume (2h)^d):
//   sigma_hat(x) = n #{window and exceed} / (#{window} N_n).
inline double kernel_skedasis_estimate(const SampleSet& sample,
                                       const ThresholdResolution& res,
                                       std::span<const double> x, double h) {
  if (!(h > 0.0))
    throw PreconditionError("kernel_skedasis_estimate: bandwidth must be > 0");
  if (x.size() != sample.d)
    throw PreconditionError("kernel_skedasis_estimate: dimension mismatch");
  if (res.n_exceed == 0)
    throw NoExceedancesError("kernel_skedasis_estimate: no exceedances");
  std::size_t in_window = 0, in_window_exceed = 0;
  double nearest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sample.n; ++i) {
    const auto xi = sample.covariate(i);
    double dist = 0.0;
    for (std::size_t j = 0; j < sample.d; ++j)
      dist = std::max(dist, std::abs(x[j] - xi[j]));
    nearest = std::min(nearest, dist);
    if (dist < h) {
      ++in_window;
      if (sample.y[i] > res.y_n) ++in_window_exceed;
    }
  }
  if (in_window == 0)
    throw EmptyWindowError(
        "kernel_skedasis_estimate: empty window; smallest bandwidth capturing "
        "a point is h > " + format_double(nearest),
        nearest);
  return static_cast<double>(sample.n) *
         static_cast<double>(in_window_exceed) /
         (static_cast<double>(in_window) * static_cast<double>(res.n_exceed));
}

namespace detail {

// Shared Weissman kernel; 'a' is the (possibly sigma-adjusted) level.
inline double weissman_at(const ThresholdResolution& res, double gamma_hat,
                          double a) {
  if (!(a > 0.0)) throw PreconditionError("quantile level must be > 0");
  if (!(res.p_hat > 0.0))
    throw NoExceedancesError("weissman: p_hat = 0, no exceedances");
  return res.y_n * std::pow(res.p_hat / a, gamma_hat);
}

}  // namespace detail

// Weissman extrapolated quantile q_hat(alpha) = y_n (p_hat/alpha)^gamma_hat.
inline double weissman_quantile(const ThresholdResolution& res,
                                double gamma_hat, double alpha) {
  if (alpha >= 1.0)
    throw PreconditionError("weissman_quantile: alpha must be < 1");
  return detail::weissman_at(res, gamma_hat, alpha);
}

// Plug-in conditional extreme quantile; equals the Weissman estimator
// evaluated at alpha / sigma_hat by construction.
inline double conditional_extreme_quantile(const ThresholdResolution& res,
                                           double gamma_hat, double sigma_hat,
                                           double alpha) {
  if (!(sigma_hat > 0.0))
    throw DegenerateDataError(
        "conditional_extreme_quantile: skedasis estimate " +
        format_double(sigma_hat) + " is not positive");
  if (!(alpha > 0.0) || alpha >= 1.0)
    throw PreconditionError("conditional_extreme_quantile: alpha outside (0,1)");
  return detail::weissman_at(res, gamma_hat, alpha / sigma_hat);
}

// One estimation request evaluated on a sample: gamma, C_hat and
// sigma_hat at query points, conditional quantiles at (alpha, x) pairs.
struct EstimateReport {
  ThresholdResolution threshold;
  double bandwidth = 0.0;
  double gamma_hat = 0.0;
  std::vector<std::vector<double>> query_points;
  std::vector<double> sigma_hat;
  std::vector<double> c_hat;
  std::vector<double> alphas;
  // quantiles[a][p]: level alphas[a] at query point p
  std::vector<std::vector<double>> quantiles;

  std::string to_csv() const {
    std::ostringstream out;
    out << "quantity,point,value\n";
    out << "y_n,," << format_double(threshold.y_n) << '\n';
    out << "n_exceed,," << threshold.n_exceed << '\n';
    out << "p_hat,," << format_double(threshold.p_hat) << '\n';
    out << "bandwidth,," << format_double(bandwidth) << '\n';
    out << "gamma_hat,," << format_double(gamma_hat) << '\n';
    auto point_label = [](std::span<const double> x) {
      std::string s;
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (j) s += ';';
        s += format_double(x[j]);
      }
      return s;
    };
    for (std::size_t p = 0; p < query_points.size(); ++p) {
      out << "c_hat," << point_label(query_points[p]) << ','
          << format_double(c_hat[p]) << '\n';
      out << "sigma_hat," << point_label(query_points[p]) << ','
          << format_double(sigma_hat[p]) << '\n';
    }
    for (std::size_t a = 0; a < alphas.size(); ++a)
      for (std::size_t p = 0; p < query_points.size(); ++p)
        out << "quantile," << format_double(alphas[a]) << ';'
            << point_label(query_points[p]) << ','
            << format_double(quantiles[a][p]) << '\n';
    return out.str();
  }
};

inline EstimateReport estimate_all(const SampleSet& sample,
                                   const ThresholdSpec& spec,
                                   std::vector<std::vector<double>> points,
                                   std::vector<double> alphas, double h) {
  EstimateReport report;
  report.threshold = resolve_threshold(sample, spec);
  report.bandwidth = h;
  report.gamma_hat = hill_estimate(sample, report.threshold);
  report.query_points = std::move(points);
  report.alphas = std::move(alphas);
  for (const auto& x : report.query_points) {
    report.c_hat.push_back(
        integrated_skedasis_estimate(sample, report.threshold, x));
    report.sigma_hat.push_back(
        kernel_skedasis_estimate(sample, report.threshold, x, h));
  }
  for (double a : report.alphas) {
    std::vector<double> row;
    for (std::size_t p = 0; p < report.query_points.size(); ++p)
      row.push_back(conditional_extreme_quantile(
          report.threshold, report.gamma_hat, report.sigma_hat[p], a));
    report.quantiles.push_back(std::move(row));
  }
  return report;
}

}  // namespace ptail

#endif  // PTAIL_ESTIMATORS_HPP
