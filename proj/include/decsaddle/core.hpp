#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace decsaddle {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Per-node vectors stacked column-wise: column i holds node i's block (d x m).
template <typename Scalar>
using Stack = Matrix<Scalar>;

/// Raised when a parameter schedule leaves one of its feasibility windows.
class InfeasibleParameters : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an iterate or metric stops being finite.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the graph builders and spectral analysis on invalid topologies.
class TopologyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Cumulative cost of a run. All counters only ever grow.
struct CostCounters {
  std::uint64_t grad_units = 0;
  std::uint64_t comm_rounds = 0;
  std::uint64_t bits = 0;

  friend bool operator==(const CostCounters&, const CostCounters&) = default;
};

inline bool counters_nondecreasing(const CostCounters& before, const CostCounters& after) {
  return after.grad_units >= before.grad_units && after.comm_rounds >= before.comm_rounds &&
         after.bits >= before.bits;
}

}  // namespace decsaddle
