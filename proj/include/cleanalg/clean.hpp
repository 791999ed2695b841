#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cleanalg/error.hpp"
#include "cleanalg/kernel.hpp"
#include "cleanalg/lattice.hpp"
#include "cleanalg/matrix.hpp"
#include "cleanalg/tolerance.hpp"
#include "cleanalg/two_projections.hpp"

namespace cleanalg {

enum class CleanKind { CleanIdempotent, AlmostStarProjection };
enum class CleanBranch { SmallNorm, Split, AlmostStar };

constexpr std::string_view to_string(CleanKind k) noexcept {
  return k == CleanKind::CleanIdempotent ? "clean_idempotent" : "almost_star_projection";
}

constexpr std::string_view to_string(CleanBranch b) noexcept {
  switch (b) {
    case CleanBranch::SmallNorm: return "small_norm";
    case CleanBranch::Split: return "split";
    case CleanBranch::AlmostStar: return "almost_star";
  }
  return "unknown";
}

/// Quantities of the two-sided estimate
///   1/||T|| <= ||S|| sqrt(1 - lambda) <= 1/min(a1, a2),
/// lambda = ||L(TE) L(TE^perp)||. An empty side has a = +inf.
struct SplitBoundCertificate {
  double a1 = 0.0;
  double a2 = 0.0;
  double lambda = 0.0;
  double s_norm = 0.0;
  double t_norm = 0.0;

  double lower() const { return 1.0 / t_norm; }
  double middle() const { return s_norm * std::sqrt(std::max(0.0, 1.0 - lambda)); }
  double upper() const { return 1.0 / std::min(a1, a2); }

  bool holds(double slack = 1e-8) const { return lower() - slack <= middle() && middle() <= upper() + slack; }
};

struct SplitInverse {
  ComplexMatrix inverse;         // S with ST = I, TS = L(T)
  SplitBoundCertificate bound;
  double witness_residual;       // ||T S0 - L(T)|| for the explicit right inverse S0
};

struct CleanCertificate {
  CleanKind kind;
  CleanBranch branch;
  ComplexMatrix summand;   // idempotent P or projection P0
  ComplexMatrix inverse;   // (T - summand)^{-1}
  double inverse_norm;
  std::optional<double> claimed_bound;  // 4 for clean decompositions
  std::optional<double> lemma_bound;    // 2 / min(||(E - ETE)^{-1}||^{-1}, c), or 2 on the small-norm branch
  double idempotency_residual;
  double selfadjointness_residual;
  double inverse_left_residual;   // ||(T - P) X - I||
  double inverse_right_residual;  // ||X (T - P) - I||
  Projection split_projection;    // E
  std::optional<double> lambda;   // ||L((T-P)E) L((T-P)E^perp)||
  std::optional<SplitBoundCertificate> split_bound;
  double summand_norm;
  std::optional<double> te_norm;        // ||TE||
  std::optional<double> p0_fperp_norm;  // ||P0 F^perp||
  std::optional<double> p0_residual;    // ||L((T-P)E) - P0||
  bool degenerate = false;              // I0, E^F', E'^F all zero

  Eigen::Index dim() const noexcept { return summand.dim(); }
};

namespace detail {

inline double smallest_eigenvalue_on(const Mat& t, const Mat& basis) {
  const Mat tb = t * basis;
  return eigh(tb.adjoint() * tb).values(0);
}

/// min over unit x in ran(basis) of |T x|, taken from T*basis directly so the
/// conditioning is not squared as it is through the Gram matrix.
inline double smallest_singular_value_on(const Mat& t, const Mat& basis) {
  const Mat tb = t * basis;
  return Eigen::JacobiSVD<Mat>(tb).singularValues().minCoeff();
}

inline void fill_residuals(CleanCertificate& c, const ComplexMatrix& t) {
  const Mat& p = c.summand.eigen();
  const Mat& x = c.inverse.eigen();
  const Eigen::Index n = t.dim();
  const Mat diff = t.eigen() - p;
  const Mat id = Mat::Identity(n, n);
  c.idempotency_residual = norm2(p * p - p);
  c.selfadjointness_residual = norm2(p - p.adjoint());
  c.inverse_left_residual = norm2(diff * x - id);
  c.inverse_right_residual = norm2(x * diff - id);
  c.inverse_norm = norm2(x);
  c.summand_norm = norm2(p);
}

inline ComplexMatrix checked_inverse(const ComplexMatrix& m, const ToleranceProfile& tol, const char* what) {
  const auto s = svd(m);
  const double smin = s.sigma(s.sigma.size() - 1);
  if (!(smin > tol.rank_cutoff(m.dim()) * s.sigma(0))) {
    std::ostringstream os;
    os << what << " is singular under the rank rule: sigma_min = " << smin << ", sigma_max = " << s.sigma(0);
    throw Error(ErrorCode::InternalInvariantViolation, os.str());
  }
  return corner_inverse(m, tol);
}

}  // namespace detail

/// P = E + E^perp T E + A (E - ETE): an idempotent with R(P) = E,
/// P - E in E^perp A E and L((T - P)E) = L(E + A).
inline ComplexMatrix idempotent_from(const ComplexMatrix& t, const Projection& e, const ComplexMatrix& a,
                                     const ToleranceProfile& tol = {}) {
  if (t.dim() != e.dim() || a.dim() != e.dim()) throw Error(ErrorCode::DimensionMismatch, "T, E and A must share dim");
  const Eigen::Index n = t.dim();
  const Mat& em = e.eigen();
  const Mat ep = Mat::Identity(n, n) - em;
  const double off = detail::norm2(a.eigen() - ep * a.eigen() * em);
  if (off > tol.projection_tol * std::max(1.0, detail::norm2(a.eigen()))) {
    std::ostringstream os;
    os << "||A - E^perp A E|| = " << off;
    throw Error(ErrorCode::BadOffDiagonal, os.str());
  }
  if (e.rank() > 0) {
    const Mat b = e.basis();
    const Mat corner = Mat::Identity(b.cols(), b.cols()) - b.adjoint() * t.eigen() * b;
    Eigen::JacobiSVD<Mat> s(corner);
    const double smin = s.singularValues()(s.singularValues().size() - 1);
    if (!(smin > tol.projection_tol)) {
      std::ostringstream os;
      os << "E - ETE has smallest singular value " << smin << " on ran E";
      throw Error(ErrorCode::CornerNotInvertible, os.str());
    }
  }
  const Mat ete = em * t.eigen() * em;
  Mat p = em + ep * t.eigen() * em + a.eigen() * (em - ete);
  return ComplexMatrix(std::move(p));
}

/// Inverts T from a splitting projection E with
///   (a) E T*T E >= a1^2 E, E^perp T*T E^perp >= a2^2 E^perp,
///   (b) L(TE) - L(TE^perp) invertible on L(T) A L(T).
inline SplitInverse invert_via_splitting(const ComplexMatrix& t, const Projection& e, const ToleranceProfile& tol = {}) {
  if (t.dim() != e.dim()) throw Error(ErrorCode::DimensionMismatch, "T and E differ in dimension");
  const Eigen::Index n = t.dim();
  const Projection ep = e.complement();
  const double t_norm = operator_norm(t);
  const double floor = tol.rank_cutoff(n) * t_norm;
  constexpr double inf = std::numeric_limits<double>::infinity();

  auto side = [&](const Projection& q, const char* name) {
    if (q.rank() == 0) return inf;
    const double a = detail::smallest_singular_value_on(t.eigen(), q.basis());
    if (!(a > floor)) {
      std::ostringstream os;
      os << name << " side: smallest compressed singular value a = " << a << " does not exceed " << floor;
      throw Error(ErrorCode::ConditionAFailed, os.str());
    }
    return a;
  };
  const double a1 = side(e, "E");
  const double a2 = side(ep, "E^perp");

  // An empty side contributes nothing; its roundoff must not pass the relative rank rule.
  auto left_of = [&](const Projection& q) {
    return q.rank() == 0 ? Projection::zero(n) : left_projection(t * q.matrix(), tol);
  };
  const Projection p1 = left_of(e);
  const Projection p2 = left_of(ep);
  std::optional<DifferenceInverseCertificate> diff;
  try {
    diff = difference_inverse(p1, p2, tol);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::NotInvertibleDifference) throw;
    throw Error(ErrorCode::ConditionBFailed, err.what());
  }
  const double lambda = detail::norm2(p1.eigen() * p2.eigen());

  // Explicit right inverse on L(T): S0 = S1 X - S2 X with T S_i = L(TE_i)
  // from the isometry factors, X the inverse of L(TE) - L(TE^perp).
  auto corner_factor = [&](const Projection& q, double a) {
    if (q.rank() == 0) return Mat(Mat::Zero(n, n));
    const Mat s = isometry_factor(t, q, a, tol).eigen();
    return Mat(s * s * t.eigen().adjoint());
  };
  const Mat& x = diff->inverse_on_join.eigen();
  const Mat s0 = corner_factor(e, a1) * x - corner_factor(ep, a2) * x;
  const Projection lt = left_projection(t, tol);
  const double witness = detail::norm2(t.eigen() * s0 - lt.eigen());

  ComplexMatrix s = corner_inverse(t, tol);
  SplitBoundCertificate cert{a1, a2, lambda, operator_norm(s), t_norm};
  return {std::move(s), cert, witness};
}

/// Clean decomposition from a splitting projection E:
///   (1) E - ETE invertible on E A E and E^perp T*T E^perp >= c^2 E^perp,
///   (2) E ^ F^perp ~ E^perp ^ F for F = I - L(TE^perp).
/// Builds A = i E21 + U and the idempotent P of idempotent_from.
inline CleanCertificate clean_split(const ComplexMatrix& t, const Projection& e, double c,
                                    const ToleranceProfile& tol = {}) {
  if (t.dim() != e.dim()) throw Error(ErrorCode::DimensionMismatch, "T and E differ in dimension");
  const Eigen::Index n = t.dim();
  if (e.rank() == n) throw Error(ErrorCode::ConditionAFailed, "E = I leaves no E^perp part to split against");
  const Projection ep = e.complement();

  double corner_sigma = std::numeric_limits<double>::infinity();
  if (e.rank() > 0) {
    const Mat b = e.basis();
    const Mat corner = Mat::Identity(b.cols(), b.cols()) - b.adjoint() * t.eigen() * b;
    Eigen::JacobiSVD<Mat> s(corner);
    corner_sigma = s.singularValues()(s.singularValues().size() - 1);
    if (!(corner_sigma > tol.projection_tol)) {
      std::ostringstream os;
      os << "E - ETE has smallest singular value " << corner_sigma << " on ran E";
      throw Error(ErrorCode::CornerNotInvertible, os.str());
    }
  }
  const double scale = std::max(1.0, operator_norm(t));
  const double low = detail::smallest_eigenvalue_on(t.eigen(), ep.basis());
  if (low < c * c - tol.projection_tol * scale * scale) {
    std::ostringstream os;
    os << "E^perp T*T E^perp has smallest eigenvalue " << low << " < c^2 = " << c * c;
    throw Error(ErrorCode::ConditionAFailed, os.str());
  }

  const Projection f = left_projection(t * ep.matrix(), tol).complement();
  const PairDecomposition d = decompose_pair(e, f, tol);
  const auto witness = equivalent(d.meet_efp, d.meet_epf);
  if (!witness) {
    std::ostringstream os;
    os << "rank(E ^ F^perp) = " << d.meet_efp.rank() << " != rank(E^perp ^ F) = " << d.meet_epf.rank()
       << " (rank E = " << e.rank() << ", rank F = " << f.rank() << ", generic rank = " << d.generic_rank() << ")";
    throw Error(ErrorCode::RankConditionFailed, os.str());
  }
  const ComplexMatrix a(Mat(kI * d.e21.eigen() + witness->matrix.eigen()));
  ComplexMatrix p = idempotent_from(t, e, a, tol);
  const ComplexMatrix diff = t - p;
  SplitInverse inv = invert_via_splitting(diff, e, tol);
  const P0Construction p0 = build_p0(d, f, *witness, tol);
  const Projection lte = left_projection(diff * e.matrix(), tol);

  CleanCertificate cert{
      CleanKind::CleanIdempotent,
      CleanBranch::Split,
      std::move(p),
      std::move(inv.inverse),
      0.0,
      2.0 / std::min(corner_sigma, c),
      2.0 / std::min(corner_sigma, c),
      0.0, 0.0, 0.0, 0.0,
      e,
      inv.bound.lambda,
      inv.bound,
      0.0,
      detail::norm2(t.eigen() * e.eigen()),
      p0.p0_fperp_norm,
      detail::norm2(lte.eigen() - p0.p0.eigen()),
      p0.degenerate,
  };
  detail::fill_residuals(cert, t);
  return cert;
}

/// T = (T - P) + P with P idempotent and ||(T - P)^{-1}|| <= 4.
///
/// ||T|| <= 1/2 (within tie_tol) takes P = I. Otherwise E is the spectral
/// projection of |T| for [0, 1/2] and the split construction runs with
/// c = 1/2; its rank condition holds in any finite algebra, so a failure is
/// reported as an internal invariant violation.
inline CleanCertificate clean_decompose(const ComplexMatrix& t, const ToleranceProfile& tol = {}) {
  const Eigen::Index n = t.dim();
  const double t_norm = operator_norm(t);
  if (t_norm <= 0.5 + tol.tie_tol) {
    const ComplexMatrix id = ComplexMatrix::identity(n);
    ComplexMatrix inv = detail::checked_inverse(t - id, tol, "T - I");
    CleanCertificate cert{CleanKind::CleanIdempotent, CleanBranch::SmallNorm, id, std::move(inv), 0.0, 4.0, 2.0,
                          0.0, 0.0, 0.0, 0.0, Projection::identity(n), std::nullopt, std::nullopt, 0.0, t_norm,
                          std::nullopt, std::nullopt, false};
    detail::fill_residuals(cert, t);
    return cert;
  }
  const Projection e = spectral_projection_leq(polar(t, tol).modulus, 0.5, tol);
  try {
    CleanCertificate cert = clean_split(t, e, 0.5, tol);
    cert.claimed_bound = 4.0;
    return cert;
  } catch (const Error& err) {
    if (err.code() == ErrorCode::InternalInvariantViolation) throw;
    std::ostringstream os;
    os << "split construction failed for ||T|| = " << t_norm << ", rank E = " << e.rank() << ": " << err.what();
    throw Error(ErrorCode::InternalInvariantViolation, os.str());
  }
}

/// T = (T - P0) + P0 with P0 a projection and T - P0 invertible, built from
/// E = L(T)^perp and F = R(T)^perp.
inline CleanCertificate almost_star_clean(const ComplexMatrix& t, const ToleranceProfile& tol = {}) {
  const Projection e = left_projection(t, tol).complement();
  const Projection f = right_projection(t, tol).complement();
  const PairDecomposition d = decompose_pair(e, f, tol);
  const auto witness = equivalent(d.meet_efp, d.meet_epf);
  if (!witness) {
    std::ostringstream os;
    os << "rank(E ^ F^perp) = " << d.meet_efp.rank() << " != rank(E^perp ^ F) = " << d.meet_epf.rank()
       << " (rank L(T) = " << t.dim() - e.rank() << ", rank R(T) = " << t.dim() - f.rank() << ")";
    throw Error(ErrorCode::InternalInvariantViolation, os.str());
  }
  const P0Construction p0 = build_p0(d, f, *witness, tol);
  ComplexMatrix inv = detail::checked_inverse(t - p0.p0.matrix(), tol, "T - P0");
  CleanCertificate cert{CleanKind::AlmostStarProjection,
                        CleanBranch::AlmostStar,
                        p0.p0.matrix(),
                        std::move(inv),
                        0.0,
                        std::nullopt,
                        std::nullopt,
                        0.0, 0.0, 0.0, 0.0,
                        e,
                        std::nullopt,
                        std::nullopt,
                        0.0,
                        std::nullopt,
                        p0.p0_fperp_norm,
                        std::nullopt,
                        p0.degenerate};
  detail::fill_residuals(cert, t);
  return cert;
}

// ---------------------------------------------------------------------------
// Block algebras

struct BlockCleanCertificate {
  std::vector<CleanCertificate> blocks;
  double inverse_norm;                  // max over blocks
  std::optional<double> claimed_bound;  // max over blocks

  BlockOperator summand() const {
    std::vector<ComplexMatrix> b;
    for (const auto& c : blocks) b.push_back(c.summand);
    return BlockOperator(std::move(b));
  }
  BlockOperator inverse() const {
    std::vector<ComplexMatrix> b;
    for (const auto& c : blocks) b.push_back(c.inverse);
    return BlockOperator(std::move(b));
  }
};

inline BlockCleanCertificate aggregate(std::vector<CleanCertificate> certs) {
  BlockCleanCertificate out{std::move(certs), 0.0, std::nullopt};
  for (const auto& c : out.blocks) {
    out.inverse_norm = std::max(out.inverse_norm, c.inverse_norm);
    if (c.claimed_bound) out.claimed_bound = std::max(out.claimed_bound.value_or(0.0), *c.claimed_bound);
  }
  return out;
}

inline BlockCleanCertificate clean_decompose(const BlockOperator& t, const ToleranceProfile& tol = {}) {
  return aggregate(lift_blockwise([&](const ComplexMatrix& b) { return clean_decompose(b, tol); }, t));
}

inline BlockCleanCertificate almost_star_clean(const BlockOperator& t, const ToleranceProfile& tol = {}) {
  return aggregate(lift_blockwise([&](const ComplexMatrix& b) { return almost_star_clean(b, tol); }, t));
}

// ---------------------------------------------------------------------------
// Verification

struct CheckResult {
  std::string name;
  bool passed;
  double measured;
  double threshold;
  double slack() const { return threshold - measured; }
};

struct VerificationReport {
  std::vector<CheckResult> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
  const CheckResult* find(std::string_view name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

namespace verify_detail {

/// Singular values of M as the nonnegative eigenvalues of [[0, M], [M*, 0]],
/// descending. Independent of the SVD path used to build certificates.
inline RealVec singular_values(const Mat& m) {
  const Eigen::Index n = m.rows();
  Mat dil = Mat::Zero(2 * n, 2 * n);
  dil.topRightCorner(n, n) = m;
  dil.bottomLeftCorner(n, n) = m.adjoint();
  Eigen::SelfAdjointEigenSolver<Mat> es(dil, Eigen::EigenvaluesOnly);
  return es.eigenvalues().tail(n).reverse();
}

inline double norm(const Mat& m) { return singular_values(m)(0); }

}  // namespace verify_detail

/// Recomputes every certificate invariant from T and the certificate's
/// summand and inverse.
inline VerificationReport verify_certificate(const ComplexMatrix& t, const CleanCertificate& cert,
                                             const ToleranceProfile& tol = {}) {
  VerificationReport r;
  auto add = [&](std::string name, double measured, double threshold) {
    r.checks.push_back({std::move(name), measured <= threshold, measured, threshold});
  };
  const Eigen::Index n = t.dim();
  if (cert.summand.dim() != n || cert.inverse.dim() != n) {
    r.checks.push_back({"dimension", false, static_cast<double>(cert.summand.dim()), static_cast<double>(n)});
    return r;
  }
  const Mat& p = cert.summand.eigen();
  const Mat& x = cert.inverse.eigen();
  const Mat id = Mat::Identity(n, n);
  const Mat diff = t.eigen() - p;

  add("idempotency", verify_detail::norm(p * p - p), tol.projection_tol);
  if (cert.kind == CleanKind::AlmostStarProjection) add("selfadjointness", verify_detail::norm(p - p.adjoint()), tol.projection_tol);
  const double inv_tol = static_cast<double>(n) * 1e-9;
  add("inverse_left", verify_detail::norm(diff * x - id), inv_tol);
  add("inverse_right", verify_detail::norm(x * diff - id), inv_tol);
  const double xn = verify_detail::norm(x);
  add("inverse_norm_recorded", std::abs(xn - cert.inverse_norm), 1e-9 * std::max(1.0, xn));
  if (cert.kind == CleanKind::CleanIdempotent) {
    const double bound = cert.claimed_bound.value_or(-1.0);
    add("claimed_bound", xn, bound + 1e-6);
  }
  const RealVec sv = verify_detail::singular_values(diff);
  const double smin = sv(sv.size() - 1);
  // Invertibility under the rank rule, expressed as cutoff * sigma_max - sigma_min <= 0.
  add("invertibility", tol.rank_cutoff(n) * sv(0) - smin, 0.0);
  const Mat& e = cert.split_projection.eigen();
  add("split_projection", std::max(verify_detail::norm(e * e - e), verify_detail::norm(e - e.adjoint())),
      tol.projection_tol);
  return r;
}

}  // namespace cleanalg
