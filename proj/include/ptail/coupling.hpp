#ifndef PTAIL_COUPLING_HPP
#define PTAIL_COUPLING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ptail/errors.hpp"
#include "ptail/io.hpp"
#include "ptail/model.hpp"
#include "ptail/rng.hpp"
#include "ptail/sample.hpp"
#include "ptail/stats.hpp"

namespace ptail {

// Finitely supported probability distribution on R^d points.
struct DiscreteDistribution {
  std::vector<std::vector<double>> points;
  std::vector<double> probabilities;

  void validate() const {
    if (points.empty() || points.size() != probabilities.size())
      throw ConfigError("discrete distribution: points/probabilities mismatch");
    double sum = 0.0;
    for (double p : probabilities) {
      if (p < 0.0) throw ConfigError("discrete distribution: negative mass");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw ConfigError("discrete distribution: mass sums to " +
                        std::to_string(sum));
  }

  std::size_t draw_index(Rng& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      acc += probabilities[i];
      if (u < acc) return i;
    }
    return probabilities.size() - 1;
  }
};

namespace detail {

inline bool aligned(const DiscreteDistribution& p,
                    const DiscreteDistribution& q) {
  if (p.points.size() != q.points.size()) return false;
  for (std::size_t i = 0; i < p.points.size(); ++i)
    if (p.points[i] != q.points[i]) return false;
  return true;
}

inline std::size_t draw_weighted(Rng& rng, std::span<const double> weights,
                                 double total) {
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  // land on the last positive weight
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  throw PreconditionError("draw_weighted: all weights zero");
}

}  // namespace detail

// Total variation distance between two distributions on a common support.
inline double total_variation_discrete(const DiscreteDistribution& p,
                                       const DiscreteDistribution& q) {
  if (!detail::aligned(p, q))
    throw PreconditionError("total_variation_discrete: misaligned supports");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.probabilities.size(); ++i)
    acc += std::abs(p.probabilities[i] - q.probabilities[i]);
  return 0.5 * acc;
}

// Rewrites two distributions on the union of their supports so that the
// aligned operations apply.
inline std::pair<DiscreteDistribution, DiscreteDistribution> align_supports(
    const DiscreteDistribution& p, const DiscreteDistribution& q) {
  std::vector<std::vector<double>> support = p.points;
  for (const auto& pt : q.points)
    if (std::find(support.begin(), support.end(), pt) == support.end())
      support.push_back(pt);
  auto rebuild = [&support](const DiscreteDistribution& d) {
    DiscreteDistribution out;
    out.points = support;
    out.probabilities.assign(support.size(), 0.0);
    for (std::size_t i = 0; i < d.points.size(); ++i) {
      const auto it = std::find(support.begin(), support.end(), d.points[i]);
      out.probabilities[static_cast<std::size_t>(it - support.begin())] +=
          d.probabilities[i];
    }
    return out;
  };
  return {rebuild(p), rebuild(q)};
}

// Maximal coupling of two aligned discrete distributions: with
// probability 1 - TV both draws come from the normalized overlap
// min(p_i, q_i) (and coincide); otherwise they come independently from
// the normalized positive and negative residuals (and differ, since the
// residuals have disjoint supports).  P(outputs differ) = TV exactly.
inline std::pair<std::size_t, std::size_t> maximal_coupling_draw(
    const DiscreteDistribution& p, const DiscreteDistribution& q, Rng& rng) {
  if (!detail::aligned(p, q))
    throw PreconditionError("maximal_coupling_draw: misaligned supports");
  const std::size_t m = p.probabilities.size();
  std::vector<double> overlap(m), pos(m), neg(m);
  double tv = 0.0, overlap_mass = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    overlap[i] = std::min(p.probabilities[i], q.probabilities[i]);
    pos[i] = std::max(p.probabilities[i] - q.probabilities[i], 0.0);
    neg[i] = std::max(q.probabilities[i] - p.probabilities[i], 0.0);
    tv += pos[i];
    overlap_mass += overlap[i];
  }
  if (rng.uniform() >= tv) {
    const std::size_t i = detail::draw_weighted(rng, overlap, overlap_mass);
    return {i, i};
  }
  const std::size_t i = detail::draw_weighted(rng, pos, tv);
  const std::size_t j = detail::draw_weighted(rng, neg, tv);
  return {i, j};
}

// One draw of the coupling between the model and its limit exceedance
// model:  E is the exceedance flag, (x_tilde, y_tilde) reconstructs an
// observation of the model, (x_star, y_star) follows the limit law
// sigma(x) P_X (x) Pareto(alpha) for y_star/y_n, and z is the shared
// Pareto(1) variate driving both responses.
struct CouplingDraw {
  bool exceed = false;
  std::size_t x_tilde_index = 0;
  std::size_t x_star_index = 0;
  double y_tilde = 0.0;
  double y_star = 0.0;
  double z = 1.0;
};

// Conditional law of X given an exceedance above level, and the limit
// law sigma(x) P_X, both exact from the model.
inline DiscreteDistribution exceedance_covariate_law(const TailModel& model,
                                                     double level) {
  DiscreteDistribution d;
  d.points = model.covariates.points;
  double total = 0.0;
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    const double w = model.covariates.probabilities[i] *
                     conditional_tail(model, d.points[i], level);
    d.probabilities.push_back(w);
    total += w;
  }
  for (double& w : d.probabilities) w /= total;
  return d;
}

inline DiscreteDistribution limit_covariate_law(const TailModel& model) {
  DiscreteDistribution d;
  d.points = model.covariates.points;
  double total = 0.0;
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    const double w =
        model.covariates.probabilities[i] * model.sigma(d.points[i]);
    d.probabilities.push_back(w);
    total += w;
  }
  for (double& w : d.probabilities) w /= total;
  return d;
}

// Coupling construction between exceedances of the model above y_n and
// the limit model.  For each i:
//   E ~ Bernoulli(Fbar(y_n)), Z ~ Pareto(1), Y* = y_n Z^(1/alpha).
//   If E = 1: (X~, X*) from the maximal coupling of P_{X|Y>y_n} and
//             sigma(x) P_X, and Y~ = U_{X~}(Z / Fbar_{X~}(y_n)).
//   If E = 0: (X~, Y~) ~ P_{(X,Y) | Y <= y_n} and X* ~ sigma(x) P_X,
//             independently.
// Requires finite-discrete covariates: the maximal coupling needs both
// covariate laws explicitly; bin a continuous design first.
inline std::vector<CouplingDraw> coupling_construction(const TailModel& model,
                                                       std::size_t n,
                                                       double y_n,
                                                       std::uint64_t seed) {
  model.validate();
  if (model.covariates.kind != CovariateKind::kFiniteDiscrete)
    throw PreconditionError(
        "coupling_construction: continuous covariates unsupported; "
        "discretize the design into a finite-discrete model first");
  if (!(y_n >= model.y0))
    throw PreconditionError("coupling_construction: y_n must be >= y0");
  const double p_n = model.base_tail(y_n);
  const DiscreteDistribution exceed_law = exceedance_covariate_law(model, y_n);
  const DiscreteDistribution limit_law = limit_covariate_law(model);
  const auto& atoms = model.covariates.points;

  // below-threshold covariate law: weight_i ~ P_X(x_i) F_{x_i}(y_n)
  DiscreteDistribution below_law;
  below_law.points = atoms;
  {
    double total = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const double w = model.covariates.probabilities[i] *
                       (1.0 - conditional_tail(model, atoms[i], y_n));
      below_law.probabilities.push_back(w);
      total += w;
    }
    for (double& w : below_law.probabilities) w /= total;
  }

  const double gamma = model.gamma;
  const double tail_at_y0 = model.base_tail(model.y0);
  std::vector<CouplingDraw> draws(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    CouplingDraw& d = draws[i];
    d.exceed = rng.bernoulli(p_n);
    d.z = rng.pareto1();
    d.y_star = y_n * std::pow(d.z, gamma);
    if (d.exceed) {
      const auto [it, is] = maximal_coupling_draw(exceed_law, limit_law, rng);
      d.x_tilde_index = it;
      d.x_star_index = is;
      const double fbar_yn = conditional_tail(model, atoms[it], y_n);
      d.y_tilde = conditional_tail_quantile(model, atoms[it], d.z / fbar_yn);
    } else {
      d.x_tilde_index = below_law.draw_index(rng);
      d.x_star_index = limit_law.draw_index(rng);
      // inverse transform of F_x restricted below y_n
      const auto& xt = atoms[d.x_tilde_index];
      const double sigma = model.sigma(xt);
      const double q = sigma * tail_at_y0;
      const double fx_yn = 1.0 - conditional_tail(model, xt, y_n);
      const double v = rng.uniform() * fx_yn;
      if (v < 1.0 - q) {
        d.y_tilde = v * model.y0 / (1.0 - q);
      } else {
        d.y_tilde = model.base_tail_inverse((1.0 - v) / sigma);
      }
    }
  }
  return draws;
}

struct ThinningResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Empirical check of the thinning identity: the maximum of g(Y_i) over
// Bernoulli-retained indices has the same law as the maximum over the
// first nu(n) draws, nu(n) the number of marks (g = identity here).
// Both functionals are computed from the same draws per replication and
// compared across replications by a two-sample KS test.  The maximum
// over an empty retained set is -infinity on both sides.
inline ThinningResult thinning_equivalence_test(std::size_t n,
                                                double bernoulli_p,
                                                std::size_t reps,
                                                std::uint64_t seed) {
  if (reps < 100)
    throw PreconditionError("thinning_equivalence_test: reps must be >= 100");
  if (bernoulli_p < 0.0 || bernoulli_p > 1.0)
    throw ConfigError("thinning_equivalence_test: p outside [0,1]");
  if (n == 0) throw PreconditionError("thinning_equivalence_test: n == 0");
  constexpr double kEmptyMax = -std::numeric_limits<double>::infinity();
  std::vector<double> marked(reps), block(reps);
  std::vector<double> y(n);
  std::vector<bool> mark(n);
  for (std::size_t r = 0; r < reps; ++r) {
    Rng rng(stream_seed(seed, r));
    std::size_t nu = 0;
    for (std::size_t i = 0; i < n; ++i) y[i] = rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
      mark[i] = rng.bernoulli(bernoulli_p);
      if (mark[i]) ++nu;
    }
    double a = kEmptyMax, b = kEmptyMax;
    for (std::size_t i = 0; i < n; ++i)
      if (mark[i]) a = std::max(a, y[i]);
    for (std::size_t i = 0; i < nu; ++i) b = std::max(b, y[i]);
    marked[r] = a;
    block[r] = b;
  }
  if (bernoulli_p == 0.0 || bernoulli_p == 1.0) {
    // both sides are the same deterministic functional of the draws
    for (std::size_t r = 0; r < reps; ++r)
      if (marked[r] != block[r] && !(std::isinf(marked[r]) && std::isinf(block[r])))
        throw PreconditionError("thinning_equivalence_test: degenerate case mismatch");
  }
  const KsResult ks = ks_two_sample(marked, block);
  return {ks.statistic, ks.p_value};
}

// Empirical verification of the coupling properties: exact identities on
// the exact-pareto family, bounded deviations on the hall family,
// marginal and independence diagnostics for the limit sample.
struct CouplingReport {
  std::size_t n = 0;
  std::size_t n_exceed = 0;
  double y_n = 0.0;
  double p_n = 0.0;
  double rate_a_n = 0.0;              // A(1/p_n)
  double mismatch_rate = 0.0;         // P(X~ != X* | E = 1)
  double max_ratio_deviation = 0.0;   // max_{E=1} |Y*/Y~ - 1|
  KsResult pareto_marginal;           // Y*/y_n against Pareto(alpha)
  ChiSquareResult covariate_marginal; // X* against sigma(x) P_X
  ChiSquareResult independence;       // Y* bins vs X* atoms among E = 1
  ThinningResult thinning;
  double bound_constant = 0.0;        // M used for the violation flags
  bool ratio_bound_violated = false;
  bool mismatch_bound_violated = false;

  std::string to_csv() const {
    std::ostringstream out;
    out << "metric,value\n";
    out << "n," << n << '\n';
    out << "n_exceed," << n_exceed << '\n';
    out << "y_n," << format_double(y_n) << '\n';
    out << "p_n," << format_double(p_n) << '\n';
    out << "rate_A_n," << format_double(rate_a_n) << '\n';
    out << "mismatch_rate," << format_double(mismatch_rate) << '\n';
    out << "max_ratio_deviation," << format_double(max_ratio_deviation) << '\n';
    out << "pareto_ks_stat," << format_double(pareto_marginal.statistic) << '\n';
    out << "pareto_ks_p," << format_double(pareto_marginal.p_value) << '\n';
    out << "covariate_chi2_stat," << format_double(covariate_marginal.statistic)
        << '\n';
    out << "covariate_chi2_p," << format_double(covariate_marginal.p_value)
        << '\n';
    out << "independence_chi2_stat," << format_double(independence.statistic)
        << '\n';
    out << "independence_chi2_p," << format_double(independence.p_value) << '\n';
    out << "thinning_ks_stat," << format_double(thinning.statistic) << '\n';
    out << "thinning_ks_p," << format_double(thinning.p_value) << '\n';
    out << "bound_constant," << format_double(bound_constant) << '\n';
    out << "ratio_bound_violated," << (ratio_bound_violated ? 1 : 0) << '\n';
    out << "mismatch_bound_violated," << (mismatch_bound_violated ? 1 : 0)
        << '\n';
    return out.str();
  }
};

struct CouplingReportOptions {
  // Bound constant for the violation flags.  Default: fitted constant
  // from the hall-family calibration grid (~0.6), times 3.
  double bound_constant = 1.8;
  std::size_t thinning_n = 50;
  std::size_t thinning_reps = 500;
  std::uint64_t thinning_seed = 1;
};

inline CouplingReport verify_coupling_report(
    const std::vector<CouplingDraw>& draws, const TailModel& model, double y_n,
    const CouplingReportOptions& options = {}) {
  if (draws.empty())
    throw PreconditionError("verify_coupling_report: no draws");
  CouplingReport report;
  report.n = draws.size();
  report.y_n = y_n;
  report.p_n = model.base_tail(y_n);
  report.rate_a_n = second_order_rate(model, 1.0 / report.p_n);
  report.bound_constant = options.bound_constant;

  std::size_t mismatches = 0;
  std::vector<double> exceed_ratios;  // y_star among E=1, for binning
  for (const CouplingDraw& d : draws) {
    if (!d.exceed) continue;
    ++report.n_exceed;
    if (d.x_tilde_index != d.x_star_index) ++mismatches;
    report.max_ratio_deviation = std::max(
        report.max_ratio_deviation, std::abs(d.y_star / d.y_tilde - 1.0));
    exceed_ratios.push_back(d.y_star);
  }
  if (report.n_exceed == 0)
    throw NoExceedancesError("verify_coupling_report: no E = 1 draws");
  report.mismatch_rate = static_cast<double>(mismatches) /
                         static_cast<double>(report.n_exceed);

  // Proposition point 2: Y*/y_n ~ Pareto(alpha) and X* ~ sigma(x) P_X,
  // over all draws (E arbitrary).
  const double alpha = model.alpha();
  std::vector<double> rescaled;
  rescaled.reserve(draws.size());
  for (const CouplingDraw& d : draws) rescaled.push_back(d.y_star / y_n);
  report.pareto_marginal = ks_test(std::move(rescaled), [alpha](double v) {
    return v <= 1.0 ? 0.0 : 1.0 - std::pow(v, -alpha);
  });
  const DiscreteDistribution limit_law = limit_covariate_law(model);
  std::vector<double> observed(limit_law.probabilities.size(), 0.0);
  std::vector<double> expected(limit_law.probabilities.size(), 0.0);
  for (const CouplingDraw& d : draws) observed[d.x_star_index] += 1.0;
  for (std::size_t i = 0; i < expected.size(); ++i)
    expected[i] = limit_law.probabilities[i] * static_cast<double>(draws.size());
  report.covariate_marginal = chi_square_gof(observed, expected);

  // Proposition point 3: Y* independent of (X~, X*) among E = 1,
  // via a contingency table of quartile bins of Y* against X* atoms.
  if (report.n_exceed >= 8) {
    std::vector<double> sorted(exceed_ratios);
    std::sort(sorted.begin(), sorted.end());
    const auto quartile = [&sorted](double q) {
      return sorted[std::min(sorted.size() - 1,
                             static_cast<std::size_t>(q * static_cast<double>(
                                                              sorted.size())))];
    };
    const double q1 = quartile(0.25), q2 = quartile(0.5), q3 = quartile(0.75);
    std::vector<std::vector<double>> table(
        limit_law.probabilities.size(), std::vector<double>(4, 0.0));
    for (const CouplingDraw& d : draws) {
      if (!d.exceed) continue;
      const std::size_t bin =
          d.y_star <= q1 ? 0 : d.y_star <= q2 ? 1 : d.y_star <= q3 ? 2 : 3;
      table[d.x_star_index][bin] += 1.0;
    }
    report.independence = chi_square_independence(table);
  }

  report.thinning = thinning_equivalence_test(
      options.thinning_n, report.p_n, options.thinning_reps,
      options.thinning_seed);

  // Bound flags: the Proposition asserts deviations <= M A_n for some M.
  // A small absolute floor keeps float noise on the exact family from
  // tripping the flag when A_n = 0.
  const double budget = options.bound_constant * report.rate_a_n + 1e-9;
  report.ratio_bound_violated = report.max_ratio_deviation > budget;
  report.mismatch_bound_violated = report.mismatch_rate > budget;
  return report;
}

inline std::string draws_to_csv(const std::vector<CouplingDraw>& draws,
                                const TailModel& model) {
  const auto& atoms = model.covariates.points;
  const bool scalar = model.covariates.dim == 1;
  std::ostringstream out;
  out << "E,xtilde,ytilde,xstar,ystar,z\n";
  for (const CouplingDraw& d : draws) {
    const double xt = scalar ? atoms[d.x_tilde_index].front()
                             : static_cast<double>(d.x_tilde_index);
    const double xs = scalar ? atoms[d.x_star_index].front()
                             : static_cast<double>(d.x_star_index);
    out << (d.exceed ? 1 : 0) << ',' << format_double(xt) << ','
        << format_double(d.y_tilde) << ',' << format_double(xs) << ','
        << format_double(d.y_star) << ',' << format_double(d.z) << '\n';
  }
  return out.str();
}

}  // namespace ptail

#endif  // PTAIL_COUPLING_HPP
