#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <utility>

#include "cleanalg/error.hpp"
#include "cleanalg/kernel.hpp"
#include "cleanalg/matrix.hpp"
#include "cleanalg/tolerance.hpp"

namespace cleanalg {

/// Hermitian idempotent with cached rank.
class Projection {
 public:
  /// Validates P^2 = P = P* and the trace/rank agreement.
  static Projection from_matrix(const ComplexMatrix& m, const ToleranceProfile& tol = {}) {
    const Mat& p = m.eigen();
    const double idem = detail::norm2(p * p - p);
    const double herm = detail::norm2(p - p.adjoint());
    if (idem > tol.projection_tol || herm > tol.projection_tol) {
      std::ostringstream os;
      os << "||P^2 - P|| = " << idem << ", ||P - P*|| = " << herm << ", tolerance " << tol.projection_tol;
      throw Error(ErrorCode::NotProjection, os.str());
    }
    const double tr = p.trace().real();
    const double r = std::round(tr);
    if (std::abs(tr - r) > static_cast<double>(m.dim()) * tol.projection_tol) {
      std::ostringstream os;
      os << "trace " << tr << " is not within " << m.dim() * tol.projection_tol << " of an integer";
      throw Error(ErrorCode::NotProjection, os.str());
    }
    return Projection(m, static_cast<Eigen::Index>(r));
  }

  /// Projection onto the span of orthonormal columns.
  static Projection from_basis(const Mat& basis, Eigen::Index n) {
    return Projection(ComplexMatrix(detail::projector(basis, n)), basis.cols());
  }

  /// For constructions whose algebra already guarantees a projection of the
  /// given rank; no validation.
  static Projection trusted(ComplexMatrix m, Eigen::Index rank) { return Projection(std::move(m), rank); }

  static Projection zero(Eigen::Index n) { return Projection(ComplexMatrix::zero(n), 0); }
  static Projection identity(Eigen::Index n) { return Projection(ComplexMatrix::identity(n), n); }

  const ComplexMatrix& matrix() const noexcept { return m_; }
  const Mat& eigen() const noexcept { return m_.eigen(); }
  Eigen::Index rank() const noexcept { return rank_; }
  Eigen::Index dim() const noexcept { return m_.dim(); }
  bool is_zero() const noexcept { return rank_ == 0; }

  Projection complement() const {
    return Projection(ComplexMatrix(Mat(Mat::Identity(dim(), dim()) - eigen())), dim() - rank_);
  }

  /// Orthonormal basis of the range, phase-normalized.
  Mat basis() const {
    if (rank_ == 0) return Mat(dim(), 0);
    return detail::projection_basis(eigen());
  }

 private:
  Projection(ComplexMatrix m, Eigen::Index rank) : m_(std::move(m)), rank_(rank) {}

  ComplexMatrix m_;
  Eigen::Index rank_;
};

/// Witness of initial ~ final: V*V = initial, VV* = final.
struct PartialIsometry {
  ComplexMatrix matrix;
  Projection initial;
  Projection final;

  static PartialIsometry make(ComplexMatrix v, Projection initial, Projection final, const ToleranceProfile& tol = {}) {
    const Mat& m = v.eigen();
    const double ri = detail::norm2(m.adjoint() * m - initial.eigen());
    const double rf = detail::norm2(m * m.adjoint() - final.eigen());
    if (ri > tol.projection_tol || rf > tol.projection_tol) {
      std::ostringstream os;
      os << "||V*V - initial|| = " << ri << ", ||VV* - final|| = " << rf;
      throw Error(ErrorCode::NotPartialIsometry, os.str());
    }
    return {std::move(v), std::move(initial), std::move(final)};
  }
};

inline void require_same_dim(const Projection& e, const Projection& f) {
  if (e.dim() != f.dim()) {
    std::ostringstream os;
    os << "projection dimensions " << e.dim() << " and " << f.dim() << " differ";
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

/// Projection onto the column space of T.
inline Projection left_projection(const ComplexMatrix& t, const ToleranceProfile& tol = {}) {
  return Projection::from_basis(detail::range_basis(t.eigen(), tol), t.dim());
}

/// R(T) = L(T*), projection onto (ker T)^perp.
inline Projection right_projection(const ComplexMatrix& t, const ToleranceProfile& tol = {}) {
  return Projection::from_basis(detail::range_basis(t.eigen().adjoint(), tol), t.dim());
}

/// E ^ F: the null space of E^perp + F^perp.
inline Projection meet(const Projection& e, const Projection& f, const ToleranceProfile& tol = {}) {
  require_same_dim(e, f);
  const Eigen::Index n = e.dim();
  const Mat sum = 2.0 * Mat::Identity(n, n) - e.eigen() - f.eigen();
  const auto eig = detail::eigh(sum);
  const double thresh = 2.0 * tol.rank_cutoff(n);
  Eigen::Index k = 0;
  while (k < n && eig.values(k) <= thresh) ++k;
  return Projection::from_basis(eig.vectors.leftCols(k), n);
}

/// E v F = I - (E^perp ^ F^perp).
inline Projection join(const Projection& e, const Projection& f, const ToleranceProfile& tol = {}) {
  return meet(e.complement(), f.complement(), tol).complement();
}

/// E <= F, up to tolerance.
inline bool is_subprojection(const Projection& e, const Projection& f, const ToleranceProfile& tol = {}) {
  require_same_dim(e, f);
  return detail::norm2(e.eigen() - f.eigen() * e.eigen()) <= tol.projection_tol;
}

/// Spectral projection of Hermitian T for (-inf, c]. Eigenvalues within
/// tie_tol above c count as <= c.
inline Projection spectral_projection_leq(const ComplexMatrix& t, double c, const ToleranceProfile& tol = {}) {
  const auto eig = hermitian_eig(t, tol);
  const Eigen::Index n = t.dim();
  Eigen::Index k = 0;
  while (k < n && eig.values(k) <= c + tol.tie_tol) ++k;
  return Projection::from_basis(eig.vectors.leftCols(k), n);
}

/// Murray-von Neumann equivalence in M_n: a witness exists iff ranks agree.
/// The witness pairs the phase-normalized range bases of E and F.
inline std::optional<PartialIsometry> equivalent(const Projection& e, const Projection& f) {
  require_same_dim(e, f);
  if (e.rank() != f.rank()) return std::nullopt;
  const Eigen::Index n = e.dim();
  if (e.rank() == 0) return PartialIsometry{ComplexMatrix::zero(n), e, f};
  const Mat be = e.basis();
  const Mat bf = f.basis();
  return PartialIsometry{ComplexMatrix(Mat(bf * be.adjoint())), e, f};
}

/// Polar partial isometry of E F^perp, witnessing (E v F) - F ~ E - (E ^ F).
inline PartialIsometry kaplansky_isometry(const Projection& e, const Projection& f, const ToleranceProfile& tol = {}) {
  require_same_dim(e, f);
  const Eigen::Index n = e.dim();
  const Mat x = e.eigen() * f.complement().eigen();
  const auto s = detail::svd_any(x);
  // E F^perp is a contraction, so roundoff is judged against 1 rather than
  // against its own (possibly roundoff-sized) largest singular value.
  const auto r = s.sigma(0) <= tol.rank_cutoff(n)
                     ? Eigen::Index{0}
                     : static_cast<Eigen::Index>(detail::rank_of(s.sigma, tol.rank_cutoff(n)));
  const Mat u = s.left.leftCols(r);
  const Mat v = s.right.leftCols(r);
  Mat w = r == 0 ? Mat(Mat::Zero(n, n)) : Mat(u * v.adjoint());
  return {ComplexMatrix(std::move(w)), Projection::from_basis(v, n), Projection::from_basis(u, n)};
}

/// Positive S in E A E with (TS)*TS = E and TS(TS)* = L(TE), given
/// E T*T E >= a^2 E.
inline ComplexMatrix isometry_factor(const ComplexMatrix& t, const Projection& e, double a,
                                     const ToleranceProfile& tol = {}) {
  if (t.dim() != e.dim()) throw Error(ErrorCode::DimensionMismatch, "T and E differ in dimension");
  const Eigen::Index n = t.dim();
  if (e.rank() == 0) return ComplexMatrix::zero(n);
  const Mat b = e.basis();
  const Mat tb = t.eigen() * b;
  const Mat gram = detail::hermitian_part(tb.adjoint() * tb);
  const auto eig = detail::eigh(gram);
  const double scale = std::max(1.0, detail::norm2(t.eigen()));
  if (eig.values(0) < a * a - tol.projection_tol * scale * scale) {
    std::ostringstream os;
    os << "compressed smallest eigenvalue " << eig.values(0) << " < a^2 = " << a * a;
    throw Error(ErrorCode::CornerNotBoundedBelow, os.str());
  }
  const Mat s = b * detail::inverse_sqrt(gram) * b.adjoint();
  return ComplexMatrix(detail::hermitian_part(s));
}

struct ComparisonOutcome {
  bool below;               // rank(E) <= rank(F_c)
  bool hypothesis;          // ||TE|| < c (less the tie band)
  double te_norm;
  Projection spectral;      // F_c
};

/// If ||TE|| < c then E is dominated by the spectral projection F_c of |T|
/// for [0, c]. A violation of that implication is an internal error.
inline ComparisonOutcome comparison_test(const ComplexMatrix& t, const Projection& e, double c,
                                         const ToleranceProfile& tol = {}) {
  if (t.dim() != e.dim()) throw Error(ErrorCode::DimensionMismatch, "T and E differ in dimension");
  Projection fc = spectral_projection_leq(polar(t, tol).modulus, c, tol);
  const double te = detail::norm2(t.eigen() * e.eigen());
  const bool below = e.rank() <= fc.rank();
  const bool hyp = te < c - tol.tie_tol;
  if (hyp && !below) {
    std::ostringstream os;
    os << "||TE|| = " << te << " < c = " << c << " but rank(E) = " << e.rank() << " > rank(F_c) = " << fc.rank();
    throw Error(ErrorCode::InternalInvariantViolation, os.str());
  }
  return {below, hyp, te, std::move(fc)};
}

}  // namespace cleanalg
