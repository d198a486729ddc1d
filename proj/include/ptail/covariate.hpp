#ifndef PTAIL_COVARIATE_HPP
#define PTAIL_COVARIATE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ptail/errors.hpp"
#include "ptail/rng.hpp"

namespace ptail {

enum class CovariateKind { kUniformBox, kFiniteDiscrete };

inline std::string to_string(CovariateKind k) {
  return k == CovariateKind::kUniformBox ? "uniform-box" : "finite-discrete";
}

// Covariate law P_X: either uniform on [0,1]^d (density f = 1) or a
// finite set of atoms with probabilities.
struct CovariateSpec {
  CovariateKind kind = CovariateKind::kUniformBox;
  std::size_t dim = 1;
  std::vector<std::vector<double>> points;  // discrete atoms, each of size dim
  std::vector<double> probabilities;

  static CovariateSpec uniform_box(std::size_t dim) {
    CovariateSpec c;
    c.kind = CovariateKind::kUniformBox;
    c.dim = dim;
    return c;
  }

  static CovariateSpec finite_discrete(std::vector<std::vector<double>> points,
                                       std::vector<double> probabilities) {
    CovariateSpec c;
    c.kind = CovariateKind::kFiniteDiscrete;
    c.points = std::move(points);
    c.probabilities = std::move(probabilities);
    c.dim = c.points.empty() ? 0 : c.points.front().size();
    c.validate();
    return c;
  }

  void validate() const {
    if (dim == 0) throw ConfigError("covariate.dim must be positive");
    if (kind == CovariateKind::kUniformBox) return;
    if (points.empty() || points.size() != probabilities.size())
      throw ConfigError("covariate points/probabilities mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].size() != dim)
        throw ConfigError("covariate point dimension mismatch");
      if (probabilities[i] < 0.0)
        throw ConfigError("covariate probability negative");
      sum += probabilities[i];
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw ConfigError("covariate probabilities sum to " +
                        std::to_string(sum) + ", expected 1");
  }

  bool in_support(std::span<const double> x) const {
    if (x.size() != dim) return false;
    if (kind == CovariateKind::kUniformBox) {
      for (double v : x)
        if (v < 0.0 || v > 1.0) return false;
      return true;
    }
    for (const auto& p : points) {
      bool match = true;
      for (std::size_t j = 0; j < dim; ++j)
        if (p[j] != x[j]) {
          match = false;
          break;
        }
      if (match) return true;
    }
    return false;
  }

  // Density of P_X at x; defined for the uniform-box case.
  double density(std::span<const double> x) const {
    if (kind != CovariateKind::kUniformBox)
      throw PreconditionError("density evaluator requires uniform-box covariates");
    return in_support(x) ? 1.0 : 0.0;
  }

  // Draws one covariate into out (size dim).  Discrete atoms are drawn
  // by inverse cdf in declaration order.
  void draw(Rng& rng, std::span<double> out) const {
    if (kind == CovariateKind::kUniformBox) {
      for (std::size_t j = 0; j < dim; ++j) out[j] = rng.uniform();
      return;
    }
    const std::size_t i = draw_index(rng);
    for (std::size_t j = 0; j < dim; ++j) out[j] = points[i][j];
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

}  // namespace ptail

#endif  // PTAIL_COVARIATE_HPP
