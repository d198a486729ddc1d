#ifndef PTAIL_ERRORS_HPP
#define PTAIL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ptail {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid model/configuration input (bad parameter, malformed file, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// The data cannot support the requested estimate (no exceedances,
// empty kernel window, non-positive skedasis estimate, ...).
class DegenerateDataError : public Error {
 public:
  explicit DegenerateDataError(const std::string& what) : Error(what) {}
};

class NoExceedancesError : public DegenerateDataError {
 public:
  explicit NoExceedancesError(const std::string& what)
      : DegenerateDataError(what) {}
};

// Empty kernel window; carries the infimum bandwidth that would capture
// at least one covariate.
class EmptyWindowError : public DegenerateDataError {
 public:
  EmptyWindowError(const std::string& what, double min_bandwidth)
      : DegenerateDataError(what), min_bandwidth(min_bandwidth) {}
  double min_bandwidth;
};

// A structural precondition is violated (replication count too small,
// rate sanity proxy broken, unsupported configuration, ...).
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error(what) {}
};

}  // namespace ptail

#endif  // PTAIL_ERRORS_HPP
