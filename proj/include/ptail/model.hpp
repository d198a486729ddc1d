#ifndef PTAIL_MODEL_HPP
#define PTAIL_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ptail/covariate.hpp"
#include "ptail/errors.hpp"
#include "ptail/skedasis.hpp"

namespace ptail {

enum class TailFamily { kExactPareto, kHall };

inline std::string to_string(TailFamily f) {
  return f == TailFamily::kExactPareto ? "exact-pareto" : "hall";
}

// Proportional-tail data generating process.
//
// The conditional survival function of Y given X = x is
//   Fbar_x(y) = sigma(x) Fbar_base(y)          for y >= y0,
//   Fbar_x(y) = 1 - (1 - q(x)) y / y0          for 0 <= y < y0,
// with q(x) = sigma(x) Fbar_base(y0) the conditional tail mass above the
// body cutoff and a uniform body carrying the rest.  Base tails:
//   exact-pareto:  Fbar_base(y) = y^-alpha,                       y >= 1
//   hall:          Fbar_base(y) = y^-alpha (1 + c y^-beta)/(1+c), y >= 1
// Since sigma integrates to one, the unconditional tail equals
// Fbar_base above y0; the proportionality is exact, not asymptotic.
struct TailModel {
  double gamma = 0.5;
  double y0 = 1.0;
  TailFamily family = TailFamily::kExactPareto;
  double hall_beta = 0.0;
  double hall_c = 0.0;
  SkedasisSpec skedasis;
  CovariateSpec covariates;

  double alpha() const { return 1.0 / gamma; }

  double sigma(std::span<const double> x) const { return skedasis(x); }

  double base_tail(double y) const {
    if (y <= 1.0) return 1.0;
    const double a = alpha();
    if (family == TailFamily::kExactPareto) return std::pow(y, -a);
    return std::pow(y, -a) * (1.0 + hall_c * std::pow(y, -hall_beta)) /
           (1.0 + hall_c);
  }

  // Inverse of base_tail on [1, inf): the y with Fbar_base(y) = s.
  // Closed form for exact-pareto; bisection for hall (the tail is
  // strictly decreasing), bracket doubled until it contains the root,
  // absolute tolerance 1e-12, at most 200 iterations.
  double base_tail_inverse(double s) const {
    if (!(s > 0.0) || s > 1.0)
      throw PreconditionError("base_tail_inverse: s outside (0,1]");
    if (family == TailFamily::kExactPareto) return std::pow(s, -gamma);
    double lo = 1.0, hi = 2.0;
    while (base_tail(hi) > s) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e300) throw PreconditionError("base_tail_inverse: no bracket");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      (base_tail(mid) > s ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  void validate() const {
    if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
    if (!(y0 >= 1.0)) throw ConfigError("y0 must be >= 1");
    if (family == TailFamily::kHall) {
      if (!(hall_beta > 0.0)) throw ConfigError("tail.beta must be > 0");
      if (!(hall_c >= 0.0) || hall_c >= 1.0)
        throw ConfigError("tail.c must lie in [0,1)");
    }
    covariates.validate();
    const double integral =
        raw_skedasis_integral(skedasis, covariates) / skedasis.normalization;
    if (std::abs(integral - 1.0) > 1e-12)
      throw ConfigError("skedasis not normalized: integral = " +
                        std::to_string(integral));
    const double bound =
        skedasis_upper_bound(skedasis, covariates) * base_tail(y0);
    if (bound > 1.0 + 1e-12)
      throw ConfigError("sup sigma * Fbar_base(y0) = " + std::to_string(bound) +
                        " exceeds 1; increase y0");
  }
};

// Conditional survival function Fbar_x(y), exact per the model definition.
inline double conditional_tail(const TailModel& model,
                               std::span<const double> x, double y) {
  if (!model.covariates.in_support(x))
    throw PreconditionError("conditional_tail: x outside covariate support");
  if (y >= model.y0) return model.sigma(x) * model.base_tail(y);
  if (y <= 0.0) return 1.0;
  const double q = model.sigma(x) * model.base_tail(model.y0);
  return 1.0 - (1.0 - q) * (y / model.y0);
}

// Conditional tail quantile U_x(t) = Fbar_x^{-1}(1/t), tail branch only.
inline double conditional_tail_quantile(const TailModel& model,
                                        std::span<const double> x, double t) {
  if (!model.covariates.in_support(x))
    throw PreconditionError("conditional_tail_quantile: x outside support");
  const double sigma = model.sigma(x);
  const double t_min = 1.0 / (sigma * model.base_tail(model.y0));
  if (t < t_min)
    throw PreconditionError(
        "conditional_tail_quantile: t below tail branch; minimal admissible "
        "t = " + std::to_string(t_min));
  if (model.family == TailFamily::kExactPareto)
    return std::pow(sigma * t, model.gamma);
  return model.base_tail_inverse(1.0 / (sigma * t));
}

// Unconditional survival function Fbar(y); equals the base tail above y0
// because sigma integrates to one.
inline double unconditional_tail(const TailModel& model, double y) {
  if (y >= model.y0) return model.base_tail(y);
  if (y <= 0.0) return 1.0;
  return 1.0 - (1.0 - model.base_tail(model.y0)) * (y / model.y0);
}

// Unconditional tail quantile U(t) = Fbar^{-1}(1/t) (valid while 1/t is
// below the unconditional tail mass above y0, where Fbar = Fbar_base).
inline double unconditional_tail_quantile(const TailModel& model, double t) {
  if (!(t >= 1.0 / model.base_tail(model.y0)))
    throw PreconditionError("unconditional_tail_quantile: t below tail branch");
  return model.base_tail_inverse(1.0 / t);
}

// Second-order rate function A(t) of the regular-variation condition.
// The hall tail gives
//   sup_{z>1/2} |Fbar(zy)/(z^-alpha Fbar(y)) - 1|
//     = c y^-beta sup_{z>1/2}|z^-beta - 1| / (1 + c y^-beta),
// and with y = U(t) ~ t^gamma this is of order c kappa t^(-beta/alpha),
// kappa = sup_{z>1/2}|z^-beta - 1| = max(2^beta - 1, 1).
inline double second_order_rate(const TailModel& model, double t) {
  if (!(t > 1.0)) throw PreconditionError("second_order_rate: t must be > 1");
  if (model.family == TailFamily::kExactPareto) return 0.0;
  const double kappa = std::max(std::pow(2.0, model.hall_beta) - 1.0, 1.0);
  return model.hall_c * kappa *
         std::pow(t, -model.hall_beta / model.alpha());
}

// True conditional quantile q(a|x) = F_x^{-1}(1-a), tail regime only.
inline double true_conditional_quantile(const TailModel& model,
                                        std::span<const double> x, double a) {
  if (!model.covariates.in_support(x))
    throw PreconditionError("true_conditional_quantile: x outside support");
  const double tail_mass = model.sigma(x) * model.base_tail(model.y0);
  if (!(a > 0.0) || a >= tail_mass)
    throw PreconditionError(
        "true_conditional_quantile: level " + std::to_string(a) +
        " is in the body regime (tail mass " + std::to_string(tail_mass) + ")");
  return conditional_tail_quantile(model, x, 1.0 / a);
}

// Integrated skedasis C(x) = int_{u <= x} sigma(u) P_X(du), componentwise.
inline double true_integrated_skedasis(const TailModel& model,
                                       std::span<const double> x) {
  const auto& cov = model.covariates;
  if (x.size() != cov.dim)
    throw PreconditionError("true_integrated_skedasis: dimension mismatch");
  if (cov.kind == CovariateKind::kFiniteDiscrete) {
    double acc = 0.0;
    for (std::size_t i = 0; i < cov.points.size(); ++i) {
      bool below = true;
      for (std::size_t j = 0; j < cov.dim; ++j)
        if (cov.points[i][j] > x[j]) {
          below = false;
          break;
        }
      if (below)
        acc += cov.probabilities[i] * model.skedasis(cov.points[i]);
    }
    return acc;
  }
  double acc = 1.0;
  for (std::size_t j = 1; j < cov.dim; ++j) {
    if (x[j] < 0.0) return 0.0;
    acc *= std::min(x[j], 1.0);
  }
  if (x[0] < 0.0) return 0.0;
  return acc * model.skedasis.raw_profile_integral(std::min(x[0], 1.0)) /
         model.skedasis.normalization;
}

}  // namespace ptail

#endif  // PTAIL_MODEL_HPP
