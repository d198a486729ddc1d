#ifndef PTAIL_SAMPLE_HPP
#define PTAIL_SAMPLE_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ptail/io.hpp"
#include "ptail/model.hpp"
#include "ptail/rng.hpp"

namespace ptail {

// Immutable observation set: n covariate rows (row-major, d columns) and
// n responses, with sampling provenance.
struct SampleSet {
  std::size_t n = 0;
  std::size_t d = 1;
  std::vector<double> x;  // n * d, row-major
  std::vector<double> y;
  std::uint64_t seed = 0;
  std::string model_id;

  std::span<const double> covariate(std::size_t i) const {
    return {x.data() + i * d, d};
  }

  std::string to_csv() const {
    std::ostringstream out;
    for (std::size_t j = 0; j < d; ++j) out << 'x' << (j + 1) << ',';
    out << "y\n";
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j)
        out << format_double(x[i * d + j]) << ',';
      out << format_double(y[i]) << '\n';
    }
    return out.str();
  }

  static SampleSet from_csv(const std::string& text) {
    SampleSet s;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty sample CSV");
    const auto header = split(trim(line), ',');
    if (header.size() < 2 || trim(header.back()) != "y")
      throw ConfigError("sample CSV header must be x1,...,xd,y");
    s.d = header.size() - 1;
    while (std::getline(in, line)) {
      const std::string t = trim(line);
      if (t.empty()) continue;
      const auto cells = split(t, ',');
      if (cells.size() != s.d + 1)
        throw ConfigError("sample CSV row has " + std::to_string(cells.size()) +
                          " cells, expected " + std::to_string(s.d + 1));
      for (std::size_t j = 0; j < s.d; ++j)
        s.x.push_back(parse_double(cells[j], "covariate"));
      s.y.push_back(parse_double(cells.back(), "response"));
      ++s.n;
    }
    if (s.n == 0) throw ConfigError("sample CSV has no data rows");
    return s;
  }
};

// Draws n i.i.d. observations from the model.  Covariates come first in
// the stream, then one uniform decides tail-vs-body and doubles as the
// inverse-transform input, so a fixed (model, n, seed) reproduces the
// sample bit for bit.
inline SampleSet sample_dataset(const TailModel& model, std::size_t n,
                                std::uint64_t seed) {
  if (n < 1) throw PreconditionError("sample_dataset: n must be >= 1");
  model.validate();
  SampleSet s;
  s.n = n;
  s.d = model.covariates.dim;
  s.seed = seed;
  s.model_id = to_string(model.family) + "/" + to_string(model.skedasis.family);
  s.x.resize(n * s.d);
  s.y.resize(n);
  Rng rng(seed);
  const double tail_at_y0 = model.base_tail(model.y0);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> xi{s.x.data() + i * s.d, s.d};
    model.covariates.draw(rng, xi);
    const double sigma = model.sigma(xi);
    const double q = sigma * tail_at_y0;  // conditional tail mass above y0
    const double u = rng.uniform();
    if (u < q) {
      s.y[i] = model.base_tail_inverse(u / sigma);
    } else {
      s.y[i] = model.y0 * (1.0 - u) / (1.0 - q);
    }
  }
  return s;
}

}  // namespace ptail

#endif  // PTAIL_SAMPLE_HPP
