#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lyapbound {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent operand shapes (non-square A, mismatched b/c lengths, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Lifted state dimension n^i above the configured cap.
class DimensionCapError : public Error {
 public:
  using Error::Error;
};

// A is singular; the step response has no finite equilibrium.
class SingularDynamics : public Error {
 public:
  using Error::Error;
};

// Malformed or invalid system description file.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Bisection interval contains no feasible shift.
class NoFeasibleAlpha : public Error {
 public:
  using Error::Error;
};

inline constexpr std::int64_t kDefaultDimCap = 4096;

}  // namespace lyapbound
