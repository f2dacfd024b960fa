#pragma once

// Brute-force reference implementations for the test oracles. These
// deliberately avoid the library's own code paths (and Eigen's product
// kernels) so that they fail independently.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ufpgd/rng.hpp"
#include "ufpgd/types.hpp"

namespace support {

using ufpgd::Complex;
using ufpgd::ComplexMatrix;

inline ComplexMatrix naive_product(const ComplexMatrix& a,
                                   const ComplexMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("naive_product");
  ComplexMatrix out = ComplexMatrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      Complex acc(0.0, 0.0);
      for (Eigen::Index k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

inline double naive_fro_norm(const ComplexMatrix& a) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) acc += std::norm(a(i, j));
  }
  return std::sqrt(acc);
}

inline double naive_l21_norm(const ComplexMatrix& a) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    double col = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) col += std::norm(a(i, j));
    acc += std::sqrt(col);
  }
  return acc;
}

// Gaussian elimination with partial pivoting; solves a x = rhs for a
// square complex a.
inline ComplexMatrix solve_gaussian(ComplexMatrix a, ComplexMatrix rhs) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || rhs.rows() != n) {
    throw std::invalid_argument("solve_gaussian");
  }
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    for (Eigen::Index r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (std::abs(a(pivot, col)) == 0.0) {
      throw std::runtime_error("solve_gaussian: singular");
    }
    if (pivot != col) {
      a.row(pivot).swap(a.row(col));
      rhs.row(pivot).swap(rhs.row(col));
    }
    for (Eigen::Index r = col + 1; r < n; ++r) {
      Complex factor = a(r, col) / a(col, col);
      a.row(r) -= factor * a.row(col);
      rhs.row(r) -= factor * rhs.row(col);
    }
  }
  ComplexMatrix x = ComplexMatrix::Zero(n, rhs.cols());
  for (Eigen::Index row = n; row-- > 0;) {
    for (Eigen::Index j = 0; j < rhs.cols(); ++j) {
      Complex acc = rhs(row, j);
      for (Eigen::Index k = row + 1; k < n; ++k) acc -= a(row, k) * x(k, j);
      x(row, j) = acc / a(row, row);
    }
  }
  return x;
}

inline ComplexMatrix random_matrix(Eigen::Index rows, Eigen::Index cols,
                                   ufpgd::Rng& rng) {
  ComplexMatrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = rng.complex_gaussian();
  }
  return out;
}

inline double rel_err(double expected, double actual) {
  return std::abs(expected - actual) /
         std::max({std::abs(expected), std::abs(actual), 1e-300});
}

}  // namespace support
