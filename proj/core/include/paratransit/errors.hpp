#pragma once

#include <stdexcept>
#include <string>

namespace paratransit {

/// Malformed input file or document. The message carries field or line context.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The instance cannot be served (e.g. a demand above vehicle capacity).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input exceeds a configured size cap of an exact method.
class SizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A search limit was hit before any feasible solution was known.
class NoIncumbentError : public std::runtime_error {
 public:
  NoIncumbentError(const std::string& what, double best_bound)
      : std::runtime_error(what), best_bound_(best_bound) {}
  double best_bound() const noexcept { return best_bound_; }

 private:
  double best_bound_;
};

}  // namespace paratransit
