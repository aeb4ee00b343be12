#pragma once

#include "lyapbound/system.hpp"
#include "lyapbound/types.hpp"

#include <cstdint>

namespace lyapbound {

// Level i of the LTI hierarchy: the generator of the lifted dynamics of
// (x tensor ... tensor x), together with the lifted input/output vectors.
struct HierarchyLevel {
  int level = 1;
  Index dim = 0;
  Matrix a_mat;     // n^i x n^i
  Vector b_vec;     // i-fold Kronecker power of b
  RowVector c_vec;  // i-fold Kronecker power of c
};

Matrix kron_product(const Matrix& a, const Matrix& b);
Matrix kron_power(const Matrix& a, int i,
                  std::int64_t dim_cap = kDefaultDimCap);
Vector lift_vector(const Vector& x, int i,
                   std::int64_t dim_cap = kDefaultDimCap);

// Generator of the level-i lifted dynamics:
//   L_1 = A,   L_i = I_n (x) L_{i-1} + A (x) I_{n^{i-1}}.
// Linear in the entries of A, which is what makes vertex certification work.
Matrix hierarchy_matrix(const Matrix& a, int i,
                        std::int64_t dim_cap = kDefaultDimCap);

HierarchyLevel build_level(const Matrix& a, const Vector& b, const RowVector& c,
                           int i, std::int64_t dim_cap = kDefaultDimCap);
HierarchyLevel build_level(const LtiSystem& sys, int i,
                           std::int64_t dim_cap = kDefaultDimCap);

}  // namespace lyapbound
