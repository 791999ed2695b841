#pragma once

#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "cleanalg/error.hpp"
#include "cleanalg/kernel.hpp"
#include "cleanalg/lattice.hpp"
#include "cleanalg/matrix.hpp"
#include "cleanalg/tolerance.hpp"

namespace cleanalg {

/// Five-part decomposition of a pair (E, F):
///   E = E11 + E^F + E^F',   F = Q + E^F + E'^F,
/// with P = E11 and Q in Halmos form on the generic part I0 = P v Q:
///   Q = E11 H + (E12 + E21) sqrt(H(I0 - H)) + E22 (I0 - H).
///
/// H is stored on the full space, zero off I0. The generic part is spanned
/// by orthonormal u_i (in ran E) and v_i (in ran E^perp), with
/// H = sum h_i (u_i u_i* + v_i v_i*) and h_i ascending.
struct PairDecomposition {
  Projection meet_ef;    // E ^ F
  Projection meet_efp;   // E ^ F^perp
  Projection meet_epf;   // E^perp ^ F
  Projection meet_epfp;  // E^perp ^ F^perp
  Projection generic_unit;  // I0
  ComplexMatrix e11, e12, e21, e22, h;
  std::vector<double> eigenvalues;  // h_i, ascending
  Mat u, v;                         // n x m bases of the generic halves

  Eigen::Index dim() const noexcept { return e11.dim(); }
  Eigen::Index generic_rank() const noexcept { return u.cols(); }

  /// sum f(h_i) (u_i u_i* + v_i v_i*)
  template <class Fn>
  ComplexMatrix functional_calculus(Fn fn) const {
    const Eigen::Index n = dim();
    Mat out = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < u.cols(); ++i) {
      const double w = fn(eigenvalues[static_cast<std::size_t>(i)]);
      out += w * (u.col(i) * u.col(i).adjoint() + v.col(i) * v.col(i).adjoint());
    }
    return ComplexMatrix(std::move(out));
  }

  /// Q rebuilt from its Halmos form.
  ComplexMatrix q() const {
    const Mat& i0 = generic_unit.eigen();
    const Mat root = functional_calculus([](double x) { return std::sqrt(x * (1.0 - x)); }).eigen();
    Mat out = e11.eigen() * h.eigen() + (e12.eigen() + e21.eigen()) * root + e22.eigen() * (i0 - h.eigen());
    return ComplexMatrix(std::move(out));
  }
};

/// Decomposes a projection pair by diagonalizing the compression of F to
/// ran E. Compressed eigenvalues within generic_tol of 1 (of 0) are folded
/// into E ^ F (E ^ F^perp); the rest form the generic part.
inline PairDecomposition decompose_pair(const Projection& e, const Projection& f, const ToleranceProfile& tol = {}) {
  require_same_dim(e, f);
  const Eigen::Index n = e.dim();
  const Mat& fm = f.eigen();
  const Mat ep = e.complement().eigen();

  Mat be = e.basis();
  std::vector<Eigen::Index> in_ef, in_efp, generic;
  EigenDecomposition inner{RealVec(0), Mat(0, 0)};
  if (be.cols() > 0) {
    inner = detail::eigh(be.adjoint() * fm * be);
    for (Eigen::Index i = 0; i < inner.values.size(); ++i) {
      const double mu = inner.values(i);
      if (mu > 1.0 - tol.generic_tol) {
        in_ef.push_back(i);
      } else if (mu < tol.generic_tol) {
        in_efp.push_back(i);
      } else {
        generic.push_back(i);
      }
    }
  }
  auto gather = [&](const std::vector<Eigen::Index>& idx) {
    Mat out(n, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = be * inner.vectors.col(idx[j]);
    return out;
  };
  const Mat b_ef = gather(in_ef);
  const Mat b_efp = gather(in_efp);
  const Mat u = gather(generic);
  const auto m = u.cols();

  std::vector<double> hs;
  hs.reserve(generic.size());
  Mat v(n, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double h = inner.values(generic[static_cast<std::size_t>(i)]);
    hs.push_back(h);
    v.col(i) = ep * (fm * u.col(i)) / std::sqrt(h * (1.0 - h));
  }
  if (m > 0) {
    // Re-orthonormalize the v_i (exact in theory, ~eps/sqrt(h(1-h)) off in practice).
    Eigen::JacobiSVD<Mat> s(v, Eigen::ComputeThinU | Eigen::ComputeThinV);
    v = s.matrixU() * s.matrixV().adjoint();
  }

  // The remainder of ran E^perp splits between E'^F and E'^F'.
  const Mat rest = ep - detail::projector(v, n);
  const Mat b_rest = detail::projection_basis(rest);
  Mat b_epf(n, 0), b_epfp(n, 0);
  if (b_rest.cols() > 0) {
    const auto outer = detail::eigh(b_rest.adjoint() * fm * b_rest);
    std::vector<Eigen::Index> hi, lo;
    for (Eigen::Index i = 0; i < outer.values.size(); ++i) (outer.values(i) > 0.5 ? hi : lo).push_back(i);
    b_epf.resize(n, static_cast<Eigen::Index>(hi.size()));
    b_epfp.resize(n, static_cast<Eigen::Index>(lo.size()));
    for (std::size_t j = 0; j < hi.size(); ++j) b_epf.col(static_cast<Eigen::Index>(j)) = b_rest * outer.vectors.col(hi[j]);
    for (std::size_t j = 0; j < lo.size(); ++j) b_epfp.col(static_cast<Eigen::Index>(j)) = b_rest * outer.vectors.col(lo[j]);
  }

  Mat e11 = detail::projector(u, n);
  Mat e22 = detail::projector(v, n);
  Mat e12 = m == 0 ? Mat(Mat::Zero(n, n)) : Mat(u * v.adjoint());
  Mat e21 = e12.adjoint();
  Mat hm = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < m; ++i)
    hm += hs[static_cast<std::size_t>(i)] * (u.col(i) * u.col(i).adjoint() + v.col(i) * v.col(i).adjoint());
  Mat i0 = e11 + e22;

  return PairDecomposition{
      Projection::from_basis(b_ef, n),
      Projection::from_basis(b_efp, n),
      Projection::from_basis(b_epf, n),
      Projection::from_basis(b_epfp, n),
      Projection::trusted(ComplexMatrix(std::move(i0)), 2 * m),
      ComplexMatrix(std::move(e11)),
      ComplexMatrix(std::move(e12)),
      ComplexMatrix(std::move(e21)),
      ComplexMatrix(std::move(e22)),
      ComplexMatrix(std::move(hm)),
      std::move(hs),
      u,
      v,
  };
}

struct HalmosUnits {
  ComplexMatrix e11, e12, e21, e22, h;
};

/// Matrix units and H for a pair in generic position:
/// P = E11, Q = E11 H + (E12 + E21) sqrt(H(I - H)) + E22 (I - H).
inline HalmosUnits halmos_units(const Projection& p, const Projection& q, const ToleranceProfile& tol = {}) {
  auto d = decompose_pair(p, q, tol);
  if (!d.meet_ef.is_zero() || !d.meet_efp.is_zero() || !d.meet_epf.is_zero() || !d.meet_epfp.is_zero()) {
    std::ostringstream os;
    os << "meet ranks (P^Q, P^Q', P'^Q, P'^Q') = (" << d.meet_ef.rank() << ", " << d.meet_efp.rank() << ", "
       << d.meet_epf.rank() << ", " << d.meet_epfp.rank() << ")";
    throw Error(ErrorCode::NotGenericPosition, os.str());
  }
  return {std::move(d.e11), std::move(d.e12), std::move(d.e21), std::move(d.e22), std::move(d.h)};
}

struct DifferenceInverseCertificate {
  ComplexMatrix inverse_on_join;
  double norm_value;  // ||(E - F)^{-1}|| on E v F
  double ef_norm;     // ||EF||

  double closed_form() const { return 1.0 / std::sqrt(1.0 - ef_norm * ef_norm); }
};

/// Inverse of E - F on (E v F) A (E v F):
///   (P - Q)^{-1} + E^F' - E'^F,
///   (P - Q)^{-1} = E11 - (E12 + E21) sqrt(H (I0 - H)^{-1}) - E22.
inline DifferenceInverseCertificate difference_inverse(const Projection& e, const Projection& f,
                                                       const ToleranceProfile& tol = {}) {
  require_same_dim(e, f);
  const Projection j = join(e, f, tol);
  if (e.rank() + f.rank() > j.rank()) {
    std::ostringstream os;
    os << "rank(E) + rank(F) = " << e.rank() + f.rank() << " > rank(E v F) = " << j.rank() << " (E ^ F != 0)";
    throw Error(ErrorCode::NotInvertibleDifference, os.str());
  }
  const double ef = detail::norm2(e.eigen() * f.eigen());
  if (ef >= 1.0 - tol.generic_tol) {
    std::ostringstream os;
    os << "||EF|| = " << ef << " is not below 1";
    throw Error(ErrorCode::NotInvertibleDifference, os.str());
  }
  const auto d = decompose_pair(e, f, tol);
  if (!d.meet_ef.is_zero()) {
    throw Error(ErrorCode::NotInvertibleDifference,
                "E ^ F has rank " + std::to_string(d.meet_ef.rank()) + " after generic classification");
  }
  const Mat ratio = d.functional_calculus([](double x) { return std::sqrt(x / (1.0 - x)); }).eigen();
  Mat x = d.e11.eigen() - (d.e12.eigen() + d.e21.eigen()) * ratio - d.e22.eigen() + d.meet_efp.eigen() -
          d.meet_epf.eigen();
  const double nv = detail::norm2(x);
  return {ComplexMatrix(std::move(x)), nv, ef};
}

struct P0Construction {
  Projection p0;
  double p0_fperp_norm;  // ||P0 F^perp||
  bool degenerate;       // I0, E^F' and E'^F all vanish
};

/// P0 = 1/2 (I0 + i E21 - i E12) + E^F + 1/2 (E^F' + E'^F + U + U*)
/// for a witness U with U*U = E^F', UU* = E'^F.
inline P0Construction build_p0(const PairDecomposition& d, const Projection& f, const PartialIsometry& w,
                               const ToleranceProfile& tol = {}) {
  const Eigen::Index n = d.dim();
  const Mat& um = w.matrix.eigen();
  const double slack = static_cast<double>(n) * tol.projection_tol;
  const double ri = detail::norm2(um.adjoint() * um - d.meet_efp.eigen());
  const double rf = detail::norm2(um * um.adjoint() - d.meet_epf.eigen());
  if (ri > slack || rf > slack) {
    std::ostringstream os;
    os << "||U*U - E^F'|| = " << ri << ", ||UU* - E'^F|| = " << rf << " (ranks " << d.meet_efp.rank() << ", "
       << d.meet_epf.rank() << ")";
    throw Error(ErrorCode::WitnessMismatch, os.str());
  }
  Mat p0 = 0.5 * (d.generic_unit.eigen() + kI * d.e21.eigen() - kI * d.e12.eigen()) + d.meet_ef.eigen() +
           0.5 * (d.meet_efp.eigen() + d.meet_epf.eigen() + um + um.adjoint());
  const Eigen::Index rank = d.generic_rank() + d.meet_ef.rank() + d.meet_efp.rank();
  const double pf = detail::norm2(p0 * f.complement().eigen());
  const bool degenerate = d.generic_unit.is_zero() && d.meet_efp.is_zero() && d.meet_epf.is_zero();
  return {Projection::trusted(ComplexMatrix(std::move(p0)), rank), pf, degenerate};
}

inline P0Construction build_p0(const Projection& e, const Projection& f, const PartialIsometry& w,
                               const ToleranceProfile& tol = {}) {
  return build_p0(decompose_pair(e, f, tol), f, w, tol);
}

}  // namespace cleanalg
