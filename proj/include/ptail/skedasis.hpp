#ifndef PTAIL_SKEDASIS_HPP
#define PTAIL_SKEDASIS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ptail/covariate.hpp"
#include "ptail/errors.hpp"

namespace ptail {

enum class SkedasisFamily { kConstant, kAffine, kLogAffine, kStep };

inline std::string to_string(SkedasisFamily f) {
  switch (f) {
    case SkedasisFamily::kConstant: return "constant";
    case SkedasisFamily::kAffine: return "affine";
    case SkedasisFamily::kLogAffine: return "log-affine";
    case SkedasisFamily::kStep: return "step";
  }
  return "?";
}

// Skedasis function sigma(x).  All families are profiles in the first
// covariate coordinate:
//   constant:   params = {level},   raw(t) = level
//   affine:     params = {a, b},    raw(t) = a + b t
//   log-affine: params = {a, b},    raw(t) = exp(a + b t)
//   step:       params = {v1..vm},  raw(t) = v_j on the j-th of m
//               equal-width bins of [0, 1]
// sigma(x) = raw(x[0]) / normalization, and normalize() fixes the
// constant so that sigma integrates to one against the covariate law.
struct SkedasisSpec {
  SkedasisFamily family = SkedasisFamily::kConstant;
  std::vector<double> params{1.0};
  double normalization = 1.0;

  double raw(double t) const {
    switch (family) {
      case SkedasisFamily::kConstant:
        return params.at(0);
      case SkedasisFamily::kAffine:
        return params.at(0) + params.at(1) * t;
      case SkedasisFamily::kLogAffine:
        return std::exp(params.at(0) + params.at(1) * t);
      case SkedasisFamily::kStep: {
        const std::size_t m = params.size();
        if (t < 0.0 || t > 1.0)
          throw ConfigError("step skedasis evaluated outside [0,1]");
        std::size_t j = static_cast<std::size_t>(t * static_cast<double>(m));
        if (j >= m) j = m - 1;
        return params[j];
      }
    }
    return 0.0;
  }

  double operator()(std::span<const double> x) const {
    return raw(x.front()) / normalization;
  }

  // Integral of raw over [0, v], v in [0, 1] (uniform-box profile).
  double raw_profile_integral(double v) const {
    switch (family) {
      case SkedasisFamily::kConstant:
        return params.at(0) * v;
      case SkedasisFamily::kAffine:
        return params.at(0) * v + 0.5 * params.at(1) * v * v;
      case SkedasisFamily::kLogAffine: {
        const double a = params.at(0), b = params.at(1);
        if (b == 0.0) return std::exp(a) * v;
        return std::exp(a) * (std::exp(b * v) - 1.0) / b;
      }
      case SkedasisFamily::kStep: {
        const std::size_t m = params.size();
        const double width = 1.0 / static_cast<double>(m);
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          const double lo = width * static_cast<double>(j);
          if (v <= lo) break;
          acc += params[j] * (std::min(v, lo + width) - lo);
        }
        return acc;
      }
    }
    return 0.0;
  }
};

namespace detail {

// Minimum of the raw family over the covariate support, with the point
// where it is attained (used for the positivity diagnostic).
inline std::pair<double, double> raw_minimum(const SkedasisSpec& s,
                                             const CovariateSpec& cov) {
  if (cov.kind == CovariateKind::kFiniteDiscrete) {
    double best = s.raw(cov.points.front().front());
    double at = cov.points.front().front();
    for (const auto& p : cov.points) {
      const double v = s.raw(p.front());
      if (v < best) {
        best = v;
        at = p.front();
      }
    }
    return {best, at};
  }
  switch (s.family) {
    case SkedasisFamily::kConstant:
      return {s.params.at(0), 0.0};
    case SkedasisFamily::kAffine:
      // monotone: minimum at an endpoint of [0, 1]
      return s.params.at(1) >= 0.0
                 ? std::pair{s.params.at(0), 0.0}
                 : std::pair{s.params.at(0) + s.params.at(1), 1.0};
    case SkedasisFamily::kLogAffine:
      return {std::exp(s.params.at(0) + std::min(0.0, s.params.at(1))),
              s.params.at(1) >= 0.0 ? 0.0 : 1.0};
    case SkedasisFamily::kStep: {
      const std::size_t m = s.params.size();
      std::size_t jmin = 0;
      for (std::size_t j = 1; j < m; ++j)
        if (s.params[j] < s.params[jmin]) jmin = j;
      return {s.params[jmin],
              (static_cast<double>(jmin) + 0.5) / static_cast<double>(m)};
    }
  }
  return {0.0, 0.0};
}

inline double raw_maximum(const SkedasisSpec& s, const CovariateSpec& cov) {
  if (cov.kind == CovariateKind::kFiniteDiscrete) {
    double best = s.raw(cov.points.front().front());
    for (const auto& p : cov.points) best = std::max(best, s.raw(p.front()));
    return best;
  }
  switch (s.family) {
    case SkedasisFamily::kConstant:
      return s.params.at(0);
    case SkedasisFamily::kAffine:
      return std::max(s.params.at(0), s.params.at(0) + s.params.at(1));
    case SkedasisFamily::kLogAffine:
      return std::exp(s.params.at(0) + std::max(0.0, s.params.at(1)));
    case SkedasisFamily::kStep:
      return *std::max_element(s.params.begin(), s.params.end());
  }
  return 0.0;
}

}  // namespace detail

// Integral of the raw family against the covariate law, in closed form.
inline double raw_skedasis_integral(const SkedasisSpec& s,
                                    const CovariateSpec& cov) {
  if (cov.kind == CovariateKind::kFiniteDiscrete) {
    double acc = 0.0;
    for (std::size_t i = 0; i < cov.points.size(); ++i)
      acc += cov.probabilities[i] * s.raw(cov.points[i].front());
    return acc;
  }
  return s.raw_profile_integral(1.0);
}

// Fixes the normalization constant so that sigma is a P_X-density.
// Rejects families that are not strictly positive on the support,
// naming a point where positivity fails.
inline SkedasisSpec normalize_skedasis(SkedasisSpec raw,
                                       const CovariateSpec& cov) {
  if (raw.family == SkedasisFamily::kStep &&
      cov.kind == CovariateKind::kFiniteDiscrete) {
    for (const auto& p : cov.points)
      if (p.front() < 0.0 || p.front() > 1.0)
        throw ConfigError("step skedasis requires support inside [0,1]");
  }
  const auto [min_value, at] = detail::raw_minimum(raw, cov);
  if (!(min_value > 0.0))
    throw ConfigError("skedasis family non-positive at x = " +
                      std::to_string(at));
  raw.normalization = raw_skedasis_integral(raw, cov);
  return raw;
}

// sup_x sigma(x) over the covariate support (normalized scale).
inline double skedasis_upper_bound(const SkedasisSpec& s,
                                   const CovariateSpec& cov) {
  return detail::raw_maximum(s, cov) / s.normalization;
}

}  // namespace ptail

#endif  // PTAIL_SKEDASIS_HPP
