#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "cleanalg/error.hpp"
#include "cleanalg/matrix.hpp"
#include "cleanalg/tolerance.hpp"

namespace cleanalg {

struct EigenDecomposition {
  RealVec values;  // ascending
  Mat vectors;     // unitary, columns match values
};

struct SingularValueDecomposition {
  Mat left;        // U
  RealVec sigma;   // descending
  Mat right;       // V, with M = U diag(sigma) V*
};

struct PolarDecomposition {
  ComplexMatrix isometry;  // W, a partial isometry
  ComplexMatrix modulus;   // |M| = (M*M)^{1/2}
};

namespace detail {

/// Rotates each column so its first non-negligible entry is real positive.
/// Returns the applied phases so paired factors can be rotated alike.
inline std::vector<Complex> normalize_column_phases(Mat& cols) {
  std::vector<Complex> phases(static_cast<std::size_t>(cols.cols()), Complex(1.0));
  for (Eigen::Index j = 0; j < cols.cols(); ++j) {
    for (Eigen::Index i = 0; i < cols.rows(); ++i) {
      const double a = std::abs(cols(i, j));
      if (a > 1e-8) {
        const Complex phase = std::conj(cols(i, j)) / a;
        cols.col(j) *= phase;
        phases[static_cast<std::size_t>(j)] = phase;
        break;
      }
    }
  }
  return phases;
}

inline double norm2(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

inline Mat hermitian_part(const Mat& m) { return 0.5 * (m + m.adjoint()); }

/// Hermitian eigensolver with no input checks; symmetrizes first.
inline EigenDecomposition eigh(const Mat& m) {
  if (m.rows() == 0) return {RealVec(0), Mat(0, 0)};
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(m));
  EigenDecomposition out{es.eigenvalues(), es.eigenvectors()};
  normalize_column_phases(out.vectors);
  return out;
}

/// Full SVD of an arbitrary (possibly rectangular) matrix, phase-normalized
/// on the left singular vectors.
inline SingularValueDecomposition svd_any(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SingularValueDecomposition out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  const auto phases = normalize_column_phases(out.left);
  const auto k = std::min(out.left.cols(), out.right.cols());
  for (Eigen::Index j = 0; j < k; ++j) out.right.col(j) *= phases[static_cast<std::size_t>(j)];
  return out;
}

inline std::size_t rank_of(const RealVec& sigma, double cutoff_rel) {
  if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
  const double thresh = cutoff_rel * sigma(0);
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > thresh) ++r;
  return r;
}

/// Orthonormal basis of the column space of m under the rank rule.
inline Mat range_basis(const Mat& m, const ToleranceProfile& tol) {
  const auto s = svd_any(m);
  const auto r = static_cast<Eigen::Index>(rank_of(s.sigma, tol.rank_cutoff(m.rows())));
  return s.left.leftCols(r);
}

/// Orthonormal basis of the range of a matrix that is a projection up to
/// rounding: eigenvectors with eigenvalue above one half.
inline Mat projection_basis(const Mat& p) {
  const auto e = eigh(p);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = e.values.size() - 1; i >= 0; --i)
    if (e.values(i) > 0.5) keep.push_back(i);
  Mat b(p.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) b.col(static_cast<Eigen::Index>(j)) = e.vectors.col(keep[j]);
  return b;
}

inline Mat projector(const Mat& basis, Eigen::Index n) {
  if (basis.cols() == 0) return Mat::Zero(n, n);
  return basis * basis.adjoint();
}

/// Inverse square root of a Hermitian positive definite matrix.
inline Mat inverse_sqrt(const Mat& h) {
  const auto e = eigh(h);
  RealVec d = e.values.array().rsqrt();
  return e.vectors * d.asDiagonal() * e.vectors.adjoint();
}

}  // namespace detail

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
inline EigenDecomposition hermitian_eig(const ComplexMatrix& m, const ToleranceProfile& tol = {}) {
  const double scale = detail::norm2(m.eigen());
  const double asym = detail::norm2(m.eigen() - m.eigen().adjoint());
  if (asym > tol.projection_tol * scale) {
    std::ostringstream os;
    os << "||M - M*|| = " << asym << " exceeds " << tol.projection_tol << " * ||M|| = " << tol.projection_tol * scale;
    throw Error(ErrorCode::NotHermitian, os.str());
  }
  return detail::eigh(m.eigen());
}

inline SingularValueDecomposition svd(const ComplexMatrix& m) { return detail::svd_any(m.eigen()); }

inline std::size_t numerical_rank(const ComplexMatrix& m, const ToleranceProfile& tol = {}) {
  return detail::rank_of(svd(m).sigma, tol.rank_cutoff(m.dim()));
}

inline double operator_norm(const ComplexMatrix& m) { return detail::norm2(m.eigen()); }

inline double smallest_singular_value(const ComplexMatrix& m) {
  Eigen::JacobiSVD<Mat> s(m.eigen());
  return s.singularValues()(s.singularValues().size() - 1);
}

/// M = W |M| with W*W = R(M) and WW* = L(M).
inline PolarDecomposition polar(const ComplexMatrix& m, const ToleranceProfile& tol = {}) {
  const auto s = svd(m);
  const auto r = static_cast<Eigen::Index>(detail::rank_of(s.sigma, tol.rank_cutoff(m.dim())));
  Mat w = s.left.leftCols(r) * s.right.leftCols(r).adjoint();
  if (r == 0) w = Mat::Zero(m.dim(), m.dim());
  Mat modulus = s.right * s.sigma.asDiagonal() * s.right.adjoint();
  return {ComplexMatrix(std::move(w)), ComplexMatrix(detail::hermitian_part(modulus))};
}

/// The reflexive inverse S with ST = R(T), TS = L(T) and S = R(T) S L(T):
/// the inverse of T*T on the corner R(T) A R(T), applied to T*.
inline ComplexMatrix corner_inverse(const ComplexMatrix& t, const ToleranceProfile& tol = {}) {
  const auto s = svd(t);
  const auto r = static_cast<Eigen::Index>(detail::rank_of(s.sigma, tol.rank_cutoff(t.dim())));
  Mat out = Mat::Zero(t.dim(), t.dim());
  if (r > 0) {
    RealVec inv = s.sigma.head(r).cwiseInverse();
    out = s.right.leftCols(r) * inv.asDiagonal() * s.left.leftCols(r).adjoint();
  }
  return ComplexMatrix(std::move(out));
}

/// Apply `op` to every block of `x` (and matching blocks of `rest`).
/// All operands must share block_dims.
template <class Op, class... Rest>
auto lift_blockwise(Op&& op, const BlockOperator& x, const Rest&... rest) {
  static_assert((std::is_same_v<Rest, BlockOperator> && ...), "lift_blockwise operands must be BlockOperators");
  const auto dims = x.block_dims();
  [[maybe_unused]] auto same = [&](const BlockOperator& y) {
    if (y.block_dims() != dims) throw Error(ErrorCode::BlockMismatch, "operands have different block_dims");
  };
  (same(rest), ...);
  using R = std::invoke_result_t<Op&, const ComplexMatrix&, decltype((rest[0]))...>;
  std::vector<R> out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out.push_back(op(x[i], rest[i]...));
  return out;
}

/// Reassemble per-block matrix results into a BlockOperator.
inline BlockOperator to_block_operator(std::vector<ComplexMatrix> blocks) { return BlockOperator(std::move(blocks)); }

}  // namespace cleanalg
