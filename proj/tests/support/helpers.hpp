#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "cleanalg/cleanalg.hpp"
#include "oracles.hpp"

namespace testing_support {

using cleanalg::Complex;
using cleanalg::ComplexMatrix;
using cleanalg::Mat;

inline double dist(const Mat& a, const Mat& b) { return cleanalg::detail::norm2(a - b); }
inline double dist(const ComplexMatrix& a, const ComplexMatrix& b) { return dist(a.eigen(), b.eigen()); }

inline Mat id(Eigen::Index n) { return Mat::Identity(n, n); }

inline oracle::Dense to_dense(const Mat& m) {
  oracle::Dense d(static_cast<int>(m.rows()));
  for (int i = 0; i < d.n; ++i)
    for (int j = 0; j < d.n; ++j) d(i, j) = m(i, j);
  return d;
}

inline Mat from_dense(const oracle::Dense& d) {
  Mat m(d.n, d.n);
  for (int i = 0; i < d.n; ++i)
    for (int j = 0; j < d.n; ++j) m(i, j) = d(i, j);
  return m;
}

/// Matrix unit e_ij (zero-based) in M_n.
inline ComplexMatrix e(Eigen::Index n, Eigen::Index i, Eigen::Index j) { return ComplexMatrix::unit(n, i, j); }

/// Projection onto span(cos t, sin t) in M_2.
inline cleanalg::Projection rotated_line(double theta) {
  Mat b(2, 1);
  b << std::cos(theta), std::sin(theta);
  return cleanalg::Projection::from_basis(b, 2);
}

/// Random rank-r matrix U diag(1..1, 0..0) V*.
inline ComplexMatrix rank_forced(Eigen::Index n, Eigen::Index r, cleanalg::SplitMix64& rng) {
  const Mat u = cleanalg::detail::haar_unitary(n, rng);
  const Mat v = cleanalg::detail::haar_unitary(n, rng);
  return ComplexMatrix(Mat(u.leftCols(r) * v.leftCols(r).adjoint()));
}

}  // namespace testing_support
