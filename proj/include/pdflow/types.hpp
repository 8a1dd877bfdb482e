#ifndef PDFLOW_TYPES_HPP
#define PDFLOW_TYPES_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pdflow {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Singular values / eigenvalues below this fraction of the largest count as zero.
inline constexpr double kRankRelTol = 1e-9;

/// Input data breaks a stated invariant (nonpositive weight, bad dimensions,
/// violated feasibility assumption, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Graph topology is unusable (disconnected, duplicate edge, self-loop).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integration produced a nonfinite or exploding state.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Scenario text could not be parsed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

template <typename Derived>
void require_size(const Eigen::MatrixBase<Derived>& v, Index expected,
                  const char* what) {
  if (v.size() != expected) {
    throw ValidationError(std::string(what) + ": expected size " +
                          std::to_string(expected) + ", got " +
                          std::to_string(v.size()));
  }
}

}  // namespace detail
}  // namespace pdflow

#endif  // PDFLOW_TYPES_HPP
