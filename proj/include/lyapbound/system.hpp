#pragma once

#include "lyapbound/types.hpp"

#include <optional>
#include <string>

namespace lyapbound {

// Single-input single-output LTI system: xdot = A x + b u, y = c x.
struct LtiSystem {
  Matrix a;
  Vector b;
  RowVector c;
  std::string name;

  Index order() const { return a.rows(); }
  void validate() const;
};

// Polytopic LTV family: xdot = A(t) x + b u with A(t) in {A + lambda*Delta,
// lambda in [-1, 1]}. delta may be zero, degenerating to the LTI case.
struct UncertainSystem {
  Matrix a;
  Matrix delta;
  Vector b;
  RowVector c;
  std::string name;

  Index order() const { return a.rows(); }
  bool has_uncertainty() const { return delta.norm() > 0.0; }
  LtiSystem nominal() const { return LtiSystem{a, b, c, name}; }
  void validate() const;
};

// Parsed system file; delta is present iff the file carries a "Delta" field.
struct ParsedSystem {
  UncertainSystem system;
  bool has_delta = false;
};

ParsedSystem parse_system(const std::string& path);
ParsedSystem parse_system_text(const std::string& text);
std::string write_system(const UncertainSystem& sys, bool include_delta);

}  // namespace lyapbound
