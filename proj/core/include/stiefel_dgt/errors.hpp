#pragma once

#include <stdexcept>
#include <string>

namespace stiefel_dgt {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConnectivityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MixingInvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateInstanceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when an iterate blows up; carries where and how badly.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long iteration, double worst_entry)
      : std::runtime_error("divergence at iteration " + std::to_string(iteration) +
                           " (worst entry magnitude " + std::to_string(worst_entry) + ")"),
        iteration_(iteration),
        worst_entry_(worst_entry) {}

  long iteration() const { return iteration_; }
  double worst_entry() const { return worst_entry_; }

 private:
  long iteration_;
  double worst_entry_;
};

}  // namespace stiefel_dgt
