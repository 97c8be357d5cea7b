#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace betachart {

// Invalid argument to a numerical routine (non-finite, out of support, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or unusable input data: missing columns, bad cells, y outside
// the unit interval, rank-deficient designs.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative procedure failed to converge. Carries the last iterate so the
// caller can inspect or restart from it.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what, std::vector<double> last_iterate = {},
                            int iterations = 0)
      : std::runtime_error(what), last_(std::move(last_iterate)), iterations_(iterations) {}

  const std::vector<double>& last_iterate() const noexcept { return last_; }
  int iterations() const noexcept { return iterations_; }

 private:
  std::vector<double> last_;
  int iterations_;
};

// Monte Carlo run could not produce a usable estimate (too many failed fits).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller combined arguments that do not make sense together.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace betachart
