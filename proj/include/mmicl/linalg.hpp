#pragma once

#include <cmath>

#include <Eigen/Core>

#include "mmicl/error.hpp"

namespace mmicl {

/// Inner product accumulated in double.
///
/// Four interleaved partial sums are combined in a fixed order, so the result
/// depends only on the inputs and never on the SIMD width of the target.
template <typename DerivedA, typename DerivedB>
double dot(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  const Eigen::Index n = a.size();
  if (b.size() != n) {
    throw Error(ErrorCode::DimMismatch,
                std::to_string(n) + " vs " + std::to_string(b.size()));
  }
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  Eigen::Index i = 0;
  for (; i + 4 <= n; i += 4) {
    acc[0] += static_cast<double>(a.coeff(i)) * static_cast<double>(b.coeff(i));
    acc[1] += static_cast<double>(a.coeff(i + 1)) * static_cast<double>(b.coeff(i + 1));
    acc[2] += static_cast<double>(a.coeff(i + 2)) * static_cast<double>(b.coeff(i + 2));
    acc[3] += static_cast<double>(a.coeff(i + 3)) * static_cast<double>(b.coeff(i + 3));
  }
  for (; i < n; ++i) {
    acc[0] += static_cast<double>(a.coeff(i)) * static_cast<double>(b.coeff(i));
  }
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

template <typename Derived>
double norm(const Eigen::MatrixBase<Derived>& a) {
  return std::sqrt(dot(a, a));
}

/// Cosine from a precomputed inner product and norms.
inline double cosine_from(double inner, double norm_a, double norm_b) {
  return inner / (norm_a * norm_b);
}

template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  const double inner = dot(a, b);
  const double na = norm(a);
  const double nb = norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw Error(ErrorCode::ZeroNorm, "cosine of a zero-norm vector");
  }
  return cosine_from(inner, na, nb);
}

}  // namespace mmicl
