#ifndef PTAIL_MONTECARLO_HPP
#define PTAIL_MONTECARLO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ptail/errors.hpp"
#include "ptail/estimators.hpp"
#include "ptail/io.hpp"
#include "ptail/model.hpp"
#include "ptail/rng.hpp"
#include "ptail/sample.hpp"
#include "ptail/stats.hpp"

namespace ptail {

enum class ExperimentKind { kGamma, kIntegratedC, kSkedasis, kQuantile };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kGamma: return "gamma";
    case ExperimentKind::kIntegratedC: return "integratedC";
    case ExperimentKind::kSkedasis: return "skedasis";
    case ExperimentKind::kQuantile: return "quantile";
  }
  return "?";
}

struct McConfig {
  TailModel model;
  std::size_t n = 0;
  ThresholdSpec threshold;
  double bandwidth = 0.0;      // kernel experiments
  double alpha_n = 0.0;        // quantile experiments
  std::vector<std::vector<double>> eval_points;
  std::size_t replications = 0;
  std::uint64_t root_seed = 0;
  std::size_t threads = 0;     // 0 = hardware concurrency
};

// Default schedules: concrete instantiations of the rate conditions.
// p_n shrinks like n^(-1/2) but keeps n p_n >= 100; the bandwidth
// shrinks like n^(-1/5) but keeps n p_n (2h)^d >= 50; the extrapolation
// level is p_n^2.
inline double default_exceedance_fraction(std::size_t n) {
  const double nn = static_cast<double>(n);
  double p = 1.0 / std::sqrt(nn);
  p = std::max(p, std::min(1.0, 100.0 / nn));
  return std::min(p, 0.5);
}

inline double default_bandwidth(std::size_t n, double p_n, std::size_t d) {
  const double nn = static_cast<double>(n);
  double h = std::pow(nn, -0.2);
  const double floor_h =
      0.5 * std::pow(50.0 / (nn * p_n), 1.0 / static_cast<double>(d));
  return std::min(std::max(h, floor_h), 0.5);
}

inline double default_extrapolation_alpha(double p_n) { return p_n * p_n; }

struct NormalityDiagnostics {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double ks_distance = 0.0;
  double ks_pvalue = 1.0;
};

// Moments plus a KS comparison against the standard normal.
inline NormalityDiagnostics normality_diagnostics(
    std::span<const double> values) {
  if (values.size() < 2)
    throw PreconditionError("normality_diagnostics: need at least 2 values");
  NormalityDiagnostics d;
  const Moments m = sample_moments(values);
  d.mean = m.mean;
  d.variance = m.variance;
  d.skewness = m.skewness;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  d.ks_distance = ks_statistic(sorted, [](double z) { return normal_cdf(z); });
  d.ks_pvalue = kolmogorov_pvalue(
      std::sqrt(static_cast<double>(values.size())) * d.ks_distance);
  return d;
}

// Pass bands for the standardized statistic of each experiment kind.
struct McChecks {
  bool check_mean = false;
  double mean_abs_max = 0.0;
  bool check_variance = false;
  double variance_lo = 0.0;
  double variance_hi = 0.0;
  bool check_ks = false;
  double ks_p_min = 0.0;
};

inline McChecks default_checks(ExperimentKind kind) {
  McChecks c;
  switch (kind) {
    case ExperimentKind::kGamma:
      c.check_mean = true;
      c.mean_abs_max = 0.1;
      c.check_variance = true;
      c.variance_lo = 0.85;
      c.variance_hi = 1.15;
      c.check_ks = true;
      c.ks_p_min = 0.01;
      break;
    case ExperimentKind::kIntegratedC:
      c.check_variance = true;
      c.variance_lo = 0.8;
      c.variance_hi = 1.2;
      break;
    case ExperimentKind::kSkedasis:
      c.check_variance = true;
      c.variance_lo = 0.8;
      c.variance_hi = 1.2;
      c.check_ks = true;
      c.ks_p_min = 0.01;
      break;
    case ExperimentKind::kQuantile:
      c.check_mean = true;
      c.mean_abs_max = 0.15;
      c.check_variance = true;
      c.variance_lo = 0.75;
      c.variance_hi = 1.25;
      break;
  }
  return c;
}

struct McReport {
  ExperimentKind kind = ExperimentKind::kGamma;
  std::size_t replications = 0;
  std::size_t failures = 0;
  std::vector<double> statistics;       // successful replications, in order
  std::vector<double> ratio_errors;     // quantile kind: |q_hat/q - 1|
  NormalityDiagnostics diagnostics;
  double target_variance = 1.0;         // after standardization
  McChecks checks;
  bool mean_ok = true;
  bool variance_ok = true;
  bool ks_ok = true;
  bool failures_ok = true;
  bool pass = false;

  std::string to_csv() const {
    std::ostringstream out;
    out << "metric,value\n";
    out << "kind," << to_string(kind) << '\n';
    out << "replications," << replications << '\n';
    out << "failures," << failures << '\n';
    out << "usable," << statistics.size() << '\n';
    out << "mean," << format_double(diagnostics.mean) << '\n';
    out << "variance," << format_double(diagnostics.variance) << '\n';
    out << "skewness," << format_double(diagnostics.skewness) << '\n';
    out << "ks_distance," << format_double(diagnostics.ks_distance) << '\n';
    out << "ks_p," << format_double(diagnostics.ks_pvalue) << '\n';
    out << "target_variance," << format_double(target_variance) << '\n';
    out << "mean_ok," << mean_ok << '\n';
    out << "variance_ok," << variance_ok << '\n';
    out << "ks_ok," << ks_ok << '\n';
    out << "failures_ok," << failures_ok << '\n';
    out << "pass," << pass << '\n';
    return out.str();
  }

  std::string raw_csv() const {
    std::ostringstream out;
    out << "replication,statistic\n";
    for (std::size_t r = 0; r < statistics.size(); ++r)
      out << r << ',' << format_double(statistics[r]) << '\n';
    return out.str();
  }
};

namespace detail {

struct RepOutcome {
  bool ok = false;
  double statistic = 0.0;
  double ratio_error = 0.0;
};

inline double expected_exceedance_fraction(const McConfig& cfg) {
  if (cfg.threshold.mode == ThresholdSpec::Mode::kTopK)
    return static_cast<double>(cfg.threshold.k) / static_cast<double>(cfg.n);
  return unconditional_tail(cfg.model, cfg.threshold.level);
}

inline void check_preconditions(const McConfig& cfg, ExperimentKind kind,
                                std::size_t point_index) {
  cfg.model.validate();
  if (cfg.replications < 2)
    throw PreconditionError("montecarlo: replication count below minimum (2)");
  if (cfg.n < 2) throw PreconditionError("montecarlo: n too small");
  const double p = expected_exceedance_fraction(cfg);
  const double np = static_cast<double>(cfg.n) * p;
  if (np < 50.0)
    throw PreconditionError(
        "montecarlo: rate sanity violated, n*p_n = " + format_double(np) +
        " < 50");
  const bool needs_point = kind != ExperimentKind::kGamma;
  if (needs_point) {
    if (point_index >= cfg.eval_points.size())
      throw PreconditionError("montecarlo: evaluation point missing");
    if (!cfg.model.covariates.in_support(cfg.eval_points[point_index]))
      throw PreconditionError("montecarlo: evaluation point outside support");
  }
  if (kind == ExperimentKind::kSkedasis || kind == ExperimentKind::kQuantile) {
    if (!(cfg.bandwidth > 0.0))
      throw PreconditionError("montecarlo: bandwidth must be > 0");
    if (cfg.model.covariates.kind != CovariateKind::kUniformBox)
      throw PreconditionError(
          "montecarlo: kernel experiments need uniform-box covariates");
    const double vh = std::pow(2.0 * cfg.bandwidth,
                               static_cast<double>(cfg.model.covariates.dim));
    if (np * vh < 50.0)
      throw PreconditionError(
          "montecarlo: rate sanity violated, n*p_n*V_h = " +
          format_double(np * vh) + " < 50");
  }
  if (kind == ExperimentKind::kIntegratedC) {
    const double c =
        true_integrated_skedasis(cfg.model, cfg.eval_points[point_index]);
    if (!(c > 0.0) || !(c < 1.0))
      throw PreconditionError(
          "montecarlo: C(x) = " + format_double(c) +
          " degenerate; pick an interior evaluation point");
  }
  if (kind == ExperimentKind::kQuantile) {
    // validates the level against the tail regime
    true_conditional_quantile(cfg.model, cfg.eval_points[point_index],
                              cfg.alpha_n);
  }
}

inline RepOutcome run_replication(const McConfig& cfg, ExperimentKind kind,
                                  std::size_t point_index, std::size_t r) {
  RepOutcome out;
  const SampleSet sample =
      sample_dataset(cfg.model, cfg.n, stream_seed(cfg.root_seed, r));
  try {
    const ThresholdResolution res = resolve_threshold(sample, cfg.threshold);
    const double n_exc = static_cast<double>(res.n_exceed);
    switch (kind) {
      case ExperimentKind::kGamma: {
        const double gamma_hat = hill_estimate(sample, res);
        out.statistic = std::sqrt(n_exc) * (gamma_hat - cfg.model.gamma) /
                        cfg.model.gamma;
        break;
      }
      case ExperimentKind::kIntegratedC: {
        const auto& x = cfg.eval_points[point_index];
        const double c_hat = integrated_skedasis_estimate(sample, res, x);
        const double c = true_integrated_skedasis(cfg.model, x);
        out.statistic =
            std::sqrt(n_exc) * (c_hat - c) / std::sqrt(c * (1.0 - c));
        break;
      }
      case ExperimentKind::kSkedasis: {
        const auto& x = cfg.eval_points[point_index];
        const double sigma_hat =
            kernel_skedasis_estimate(sample, res, x, cfg.bandwidth);
        const double sigma = cfg.model.sigma(x);
        const double f = cfg.model.covariates.density(x);
        const double vh =
            std::pow(2.0 * cfg.bandwidth,
                     static_cast<double>(cfg.model.covariates.dim));
        out.statistic = std::sqrt(static_cast<double>(cfg.n) * res.p_hat * vh * f) *
                        (sigma_hat - sigma) / std::sqrt(sigma);
        break;
      }
      case ExperimentKind::kQuantile: {
        const auto& x = cfg.eval_points[point_index];
        const double gamma_hat = hill_estimate(sample, res);
        const double sigma_hat =
            kernel_skedasis_estimate(sample, res, x, cfg.bandwidth);
        const double q_hat = conditional_extreme_quantile(res, gamma_hat,
                                                          sigma_hat, cfg.alpha_n);
        const double q = true_conditional_quantile(cfg.model, x, cfg.alpha_n);
        out.statistic = std::sqrt(static_cast<double>(cfg.n) * res.p_hat) /
                        std::log(res.p_hat / cfg.alpha_n) *
                        std::log(q_hat / q) / cfg.model.gamma;
        out.ratio_error = std::abs(q_hat / q - 1.0);
        break;
      }
    }
    out.ok = true;
  } catch (const DegenerateDataError&) {
    out.ok = false;  // counted against the failure budget
  }
  return out;
}

}  // namespace detail

// Runs the replication experiment for one statistic kind at one
// evaluation point.  Replication r draws its sample from the stream
// seeded by (root_seed, r) only, so the report is bit-identical however
// the replications are scheduled across threads.
inline McReport run_experiment(const McConfig& cfg, ExperimentKind kind,
                               std::size_t point_index = 0,
                               const McChecks* checks_override = nullptr) {
  detail::check_preconditions(cfg, kind, point_index);
  const std::size_t reps = cfg.replications;
  std::vector<detail::RepOutcome> outcomes(reps);

  std::size_t threads = cfg.threads != 0
                            ? cfg.threads
                            : std::max<std::size_t>(
                                  1, std::thread::hardware_concurrency());
  threads = std::min(threads, reps);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&](std::size_t t) {
    for (std::size_t r = t; r < reps; r += threads) {
      try {
        outcomes[r] = detail::run_replication(cfg, kind, point_index, r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (threads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  McReport report;
  report.kind = kind;
  report.replications = reps;
  report.checks = checks_override ? *checks_override : default_checks(kind);
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++report.failures;
      continue;
    }
    report.statistics.push_back(o.statistic);
    if (kind == ExperimentKind::kQuantile)
      report.ratio_errors.push_back(o.ratio_error);
  }
  report.failures_ok =
      static_cast<double>(report.failures) <= 0.05 * static_cast<double>(reps);
  if (report.statistics.size() >= 2) {
    report.diagnostics = normality_diagnostics(report.statistics);
    const McChecks& c = report.checks;
    report.mean_ok =
        !c.check_mean || std::abs(report.diagnostics.mean) <= c.mean_abs_max;
    report.variance_ok = !c.check_variance ||
                         (report.diagnostics.variance >= c.variance_lo &&
                          report.diagnostics.variance <= c.variance_hi);
    report.ks_ok = !c.check_ks || report.diagnostics.ks_pvalue > c.ks_p_min;
  } else {
    report.mean_ok = report.variance_ok = report.ks_ok = false;
  }
  report.pass = report.failures_ok && report.mean_ok && report.variance_ok &&
                report.ks_ok;
  return report;
}

}  // namespace ptail

#endif  // PTAIL_MONTECARLO_HPP
