#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cleanalg/error.hpp"

namespace cleanalg {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// A dense square complex matrix, the ambient element of M_n.
///
/// Construction rejects empty, rectangular and non-finite data. The value is
/// immutable once built; arithmetic returns new matrices.
class ComplexMatrix {
 public:
  explicit ComplexMatrix(Mat m) : m_(std::move(m)) { validate(); }

  ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    m_.resize(n, n);
    Eigen::Index i = 0;
    for (const auto& row : rows) {
      if (static_cast<Eigen::Index>(row.size()) != n) {
        throw Error(ErrorCode::NotSquare, "initializer rows must all have length " + std::to_string(n));
      }
      Eigen::Index j = 0;
      for (const auto& v : row) m_(i, j++) = v;
      ++i;
    }
    validate();
  }

  static ComplexMatrix zero(Eigen::Index n) { return ComplexMatrix(Mat::Zero(n, n)); }
  static ComplexMatrix identity(Eigen::Index n) { return ComplexMatrix(Mat::Identity(n, n)); }

  /// Unit e_ij (0-based indices).
  static ComplexMatrix unit(Eigen::Index n, Eigen::Index i, Eigen::Index j) {
    Mat m = Mat::Zero(n, n);
    m(i, j) = 1.0;
    return ComplexMatrix(std::move(m));
  }

  static ComplexMatrix diagonal(std::initializer_list<Complex> d) {
    Vec v(static_cast<Eigen::Index>(d.size()));
    Eigen::Index i = 0;
    for (const auto& x : d) v(i++) = x;
    return ComplexMatrix(Mat(v.asDiagonal()));
  }

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Mat& eigen() const noexcept { return m_; }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  ComplexMatrix adjoint() const { return ComplexMatrix(Mat(m_.adjoint())); }

  friend ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b) {
    require_same_dim(a, b);
    return ComplexMatrix(Mat(a.m_ + b.m_));
  }
  friend ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b) {
    require_same_dim(a, b);
    return ComplexMatrix(Mat(a.m_ - b.m_));
  }
  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    require_same_dim(a, b);
    return ComplexMatrix(Mat(a.m_ * b.m_));
  }
  friend ComplexMatrix operator*(Complex s, const ComplexMatrix& a) { return ComplexMatrix(Mat(s * a.m_)); }
  friend ComplexMatrix operator*(double s, const ComplexMatrix& a) { return ComplexMatrix(Mat(s * a.m_)); }

  static void require_same_dim(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.dim() != b.dim()) {
      std::ostringstream os;
      os << "dimensions " << a.dim() << " and " << b.dim() << " differ";
      throw Error(ErrorCode::DimensionMismatch, os.str());
    }
  }

 private:
  void validate() const {
    if (m_.rows() == 0 || m_.cols() == 0) {
      throw Error(ErrorCode::DimensionMismatch, "empty matrix (dim = 0) is not an element of a unital algebra");
    }
    if (m_.rows() != m_.cols()) {
      std::ostringstream os;
      os << "matrix is " << m_.rows() << "x" << m_.cols();
      throw Error(ErrorCode::NotSquare, os.str());
    }
    if (!m_.allFinite()) throw Error(ErrorCode::NonFinite, "matrix has NaN or Inf entries");
  }

  Mat m_;
};

/// Block-diagonal element of M_{n_1} + ... + M_{n_k}.
class BlockOperator {
 public:
  explicit BlockOperator(std::vector<ComplexMatrix> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw Error(ErrorCode::BlockMismatch, "block operator needs at least one block");
  }

  const std::vector<ComplexMatrix>& blocks() const noexcept { return blocks_; }
  std::size_t size() const noexcept { return blocks_.size(); }
  const ComplexMatrix& operator[](std::size_t i) const { return blocks_[i]; }

  std::vector<Eigen::Index> block_dims() const {
    std::vector<Eigen::Index> d;
    d.reserve(blocks_.size());
    for (const auto& b : blocks_) d.push_back(b.dim());
    return d;
  }

  Eigen::Index total_dim() const {
    Eigen::Index n = 0;
    for (const auto& b : blocks_) n += b.dim();
    return n;
  }

  /// Dense block-diagonal assembly.
  ComplexMatrix assemble() const {
    const Eigen::Index n = total_dim();
    Mat m = Mat::Zero(n, n);
    Eigen::Index off = 0;
    for (const auto& b : blocks_) {
      m.block(off, off, b.dim(), b.dim()) = b.eigen();
      off += b.dim();
    }
    return ComplexMatrix(std::move(m));
  }

 private:
  std::vector<ComplexMatrix> blocks_;
};

}  // namespace cleanalg
