#include "lyapbound/kron.hpp"

#include <cmath>
#include <string>

namespace lyapbound {

namespace {

void check_level(int i) {
  if (i < 1) {
    throw DimensionError("hierarchy level must be >= 1, got " +
                         std::to_string(i));
  }
}

void check_cap(std::int64_t rows, std::int64_t cols, std::int64_t cap) {
  if (rows > cap || cols > cap) {
    throw DimensionCapError("lifted dimension " +
                            std::to_string(std::max(rows, cols)) +
                            " exceeds cap " + std::to_string(cap));
  }
}

std::int64_t ipow(std::int64_t base, int exp, std::int64_t cap) {
  std::int64_t r = 1;
  for (int k = 0; k < exp; ++k) {
    r *= base;
    if (r > cap) return r;
  }
  return r;
}

}  // namespace

Matrix kron_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index r = 0; r < a.rows(); ++r) {
    for (Index s = 0; s < a.cols(); ++s) {
      out.block(r * b.rows(), s * b.cols(), b.rows(), b.cols()) = a(r, s) * b;
    }
  }
  return out;
}

Matrix kron_power(const Matrix& a, int i, std::int64_t dim_cap) {
  check_level(i);
  check_cap(ipow(a.rows(), i, dim_cap), ipow(a.cols(), i, dim_cap), dim_cap);
  Matrix out = a;
  for (int k = 2; k <= i; ++k) {
    out = kron_product(a, out);
  }
  return out;
}

Vector lift_vector(const Vector& x, int i, std::int64_t dim_cap) {
  return Vector{kron_power(x, i, dim_cap)};
}

Matrix hierarchy_matrix(const Matrix& a, int i, std::int64_t dim_cap) {
  check_level(i);
  if (a.rows() != a.cols()) {
    throw DimensionError("hierarchy_matrix requires a square matrix, got " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  }
  const Index n = a.rows();
  check_cap(ipow(n, i, dim_cap), ipow(n, i, dim_cap), dim_cap);
  const Matrix eye_n = Matrix::Identity(n, n);
  Matrix level = a;  // L_1 = A
  for (int k = 2; k <= i; ++k) {
    level = kron_product(eye_n, level) +
            kron_product(a, Matrix::Identity(level.rows(), level.rows()));
  }
  return level;
}

HierarchyLevel build_level(const Matrix& a, const Vector& b, const RowVector& c,
                           int i, std::int64_t dim_cap) {
  if (a.rows() != a.cols() || b.size() != a.rows() || c.size() != a.rows()) {
    throw DimensionError("build_level: inconsistent system dimensions");
  }
  HierarchyLevel lvl;
  lvl.level = i;
  lvl.a_mat = hierarchy_matrix(a, i, dim_cap);
  lvl.b_vec = lift_vector(b, i, dim_cap);
  lvl.c_vec = RowVector{kron_power(c, i, dim_cap)};
  lvl.dim = lvl.a_mat.rows();
  return lvl;
}

HierarchyLevel build_level(const LtiSystem& sys, int i, std::int64_t dim_cap) {
  return build_level(sys.a, sys.b, sys.c, i, dim_cap);
}

}  // namespace lyapbound
