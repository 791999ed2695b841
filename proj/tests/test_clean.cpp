#include <array>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "support/helpers.hpp"

using namespace cleanalg;
using testing_support::dist;
using testing_support::e;
using testing_support::id;

namespace {

const Complex kJ{0.0, 1.0};
const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

Projection proj(const ComplexMatrix& m) { return Projection::from_matrix(m); }

TEST(IdempotentFrom, ZeroTFullE) {
  const ComplexMatrix p = idempotent_from(ComplexMatrix::zero(2), Projection::identity(2), ComplexMatrix::zero(2));
  EXPECT_LE(dist(p.eigen(), id(2)), 1e-15);
}

TEST(IdempotentFrom, NilpotentWithLowerCorner) {
  const ComplexMatrix t{{0, 1}, {0, 0}};
  const ComplexMatrix p = idempotent_from(t, proj(e(2, 0, 0)), e(2, 1, 0));
  const ComplexMatrix expected{{1, 0}, {1, 0}};
  EXPECT_LE(dist(p, expected), 1e-15);
  EXPECT_LE(dist(p * p, p), 1e-15);
  EXPECT_LE(dist(right_projection(p).matrix(), e(2, 0, 0)), 1e-15);
}

TEST(IdempotentFrom, ZeroTHalfE) {
  const ComplexMatrix p = idempotent_from(ComplexMatrix::zero(2), proj(e(2, 0, 0)), ComplexMatrix::zero(2));
  EXPECT_LE(dist(p, e(2, 0, 0)), 1e-15);
}

TEST(IdempotentFrom, Errors) {
  try {
    idempotent_from(ComplexMatrix::zero(2), proj(e(2, 0, 0)), e(2, 0, 1));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::BadOffDiagonal);
  }
  try {
    idempotent_from(ComplexMatrix::identity(2), proj(e(2, 0, 0)), ComplexMatrix::zero(2));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::CornerNotInvertible);
  }
}

TEST(IdempotentFrom, ContractOnRandomInputs) {
  const ToleranceProfile tol;
  SplitMix64 rng(606);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(8));
    const ComplexMatrix t = with_norm(generate(Generator::Ginibre, n, rng.next()), 0.2 + 2.0 * rng.uniform());
    const Projection p = random_projection(n, static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n + 1))), rng);
    const Mat ep = id(n) - p.eigen();
    const ComplexMatrix a(Mat(ep * detail::gaussian(n, n, rng) * p.eigen()));
    ComplexMatrix q = ComplexMatrix::zero(n);
    try {
      q = idempotent_from(t, p, a);
    } catch (const Error& err) {
      ASSERT_EQ(err.code(), ErrorCode::CornerNotInvertible);
      continue;
    }
    const Mat& qm = q.eigen();
    const double scale = std::max(1.0, detail::norm2(qm));
    EXPECT_LE(dist(qm * qm, qm), 1e-10 * scale * scale) << trial;
    EXPECT_LE(dist(right_projection(q).matrix(), p.matrix()), 1e-8) << trial;
    EXPECT_LE(dist(ep * (qm - p.eigen()) * p.eigen(), qm - p.eigen()), 1e-10 * scale);
    const double te = detail::norm2(t.eigen() * p.eigen());
    EXPECT_LE(detail::norm2(qm), (1.0 + detail::norm2(a.eigen())) * (1.0 + te) + 1e-8);
    const Projection l1 = left_projection((t - q) * p.matrix());
    const Projection l2 = left_projection(p.matrix() + a);
    EXPECT_LE(dist(l1.matrix(), l2.matrix()), tol.projection_tol * 10) << trial;
    ++checked;
  }
  EXPECT_GT(checked, 300);
}

TEST(InvertViaSplitting, DiagonalHandComputation) {
  const ComplexMatrix t = ComplexMatrix::diagonal({2, 3});
  const auto r = invert_via_splitting(t, proj(e(2, 0, 0)));
  EXPECT_LE(dist(r.inverse, ComplexMatrix::diagonal({0.5, 1.0 / 3.0})), 1e-15);
  EXPECT_NEAR(r.bound.a1, 2.0, 1e-14);
  EXPECT_NEAR(r.bound.a2, 3.0, 1e-14);
  EXPECT_NEAR(r.bound.lambda, 0.0, 1e-15);
  EXPECT_NEAR(r.bound.lower(), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(r.bound.middle(), 0.5, 1e-14);
  EXPECT_NEAR(r.bound.upper(), 0.5, 1e-14);
  EXPECT_TRUE(r.bound.holds());
}

TEST(InvertViaSplitting, IdentityAnySplit) {
  SplitMix64 rng(2);
  for (Eigen::Index k = 0; k <= 4; ++k) {
    const auto r = invert_via_splitting(ComplexMatrix::identity(4), random_projection(4, k, rng));
    EXPECT_LE(dist(r.inverse.eigen(), id(4)), 1e-13);
    EXPECT_NEAR(r.bound.lambda, 0.0, 1e-12);
  }
}

TEST(InvertViaSplitting, RankOneFailsOnComplementSide) {
  try {
    invert_via_splitting(e(2, 0, 0), proj(e(2, 0, 0)));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::ConditionAFailed);
    EXPECT_NE(std::string(err.what()).find("E^perp"), std::string::npos);
  }
}

TEST(InvertViaSplitting, RandomSandwichAndExplicitInverse) {
  SplitMix64 rng(8080);
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(10));
    const ComplexMatrix t = with_norm(generate(Generator::Ginibre, n, rng.next()), 0.1 + 5.0 * rng.uniform());
    const Projection p = random_projection(n, static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n + 1))), rng);
    const auto r = invert_via_splitting(t, p);
    EXPECT_LE(r.bound.lower() - r.bound.middle(), 1e-8) << trial;
    EXPECT_LE(r.bound.middle() - r.bound.upper(), 1e-8) << trial;
    const double cond = operator_norm(t) * r.bound.s_norm;
    EXPECT_LE(dist(r.inverse.eigen() * t.eigen(), id(n)), 1e-12 * cond * static_cast<double>(n));
    EXPECT_LE(r.witness_residual, 1e-9 * cond * static_cast<double>(n)) << trial;
  }
}

TEST(CleanSplit, NilpotentTraceThrough) {
  const ComplexMatrix t{{0, 1}, {0, 0}};
  const auto c = clean_split(t, proj(e(2, 0, 0)), 1.0);
  const ComplexMatrix expected_p{{1, 0}, {1, 0}};
  EXPECT_LE(dist(c.summand, expected_p), 1e-15);
  // Oracle: explicit inverse of T - P = [[-1, 1], [-1, 0]].
  const ComplexMatrix expected_inv{{0, -1}, {1, -1}};
  EXPECT_LE(dist(c.inverse, expected_inv), 1e-14);
  EXPECT_NEAR(c.inverse_norm, kGolden, 1e-14);
  EXPECT_LE(c.inverse_norm, *c.claimed_bound);
  EXPECT_NEAR(*c.claimed_bound, 2.0, 1e-15);
  EXPECT_LE(c.summand_norm, 2.0 + 2.0 * *c.te_norm + 1e-8);
}

TEST(CleanSplit, DiagonalTraceThrough) {
  const ComplexMatrix t = 2.0 * e(2, 1, 1);
  const auto c = clean_split(t, proj(e(2, 0, 0)), 1.0);
  EXPECT_LE(dist(c.summand, e(2, 0, 0)), 1e-15);
  EXPECT_LE(dist(t - c.summand, ComplexMatrix::diagonal({-1, 2})), 1e-15);
  EXPECT_NEAR(c.inverse_norm, 1.0, 1e-15);
  EXPECT_TRUE(c.degenerate);
}

TEST(CleanSplit, RejectsFullE) {
  try {
    clean_split(0.1 * ComplexMatrix::identity(2), Projection::identity(2), 0.5);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::ConditionAFailed);
  }
}

TEST(CleanDecompose, ZeroMatrix) {
  const auto c = clean_decompose(ComplexMatrix::zero(3));
  EXPECT_EQ(c.branch, CleanBranch::SmallNorm);
  EXPECT_LE(dist(c.summand.eigen(), id(3)), 0.0);
  EXPECT_LE(dist(c.inverse.eigen(), -id(3)), 1e-15);
  EXPECT_NEAR(c.inverse_norm, 1.0, 1e-15);
}

TEST(CleanDecompose, NilpotentMatchesExplicitInverse) {
  const ComplexMatrix t{{0, 1}, {0, 0}};
  const auto c = clean_decompose(t);
  EXPECT_EQ(c.branch, CleanBranch::Split);
  const ComplexMatrix expected_p{{1, 0}, {1, 0}};
  EXPECT_LE(dist(c.summand, expected_p), 1e-15);
  const auto inv = oracle::adjugate_inverse(testing_support::to_dense((t - c.summand).eigen()));
  EXPECT_LE(dist(c.inverse.eigen(), testing_support::from_dense(inv)), 1e-14);
  EXPECT_NEAR(c.inverse_norm * c.inverse_norm, (3.0 + std::sqrt(5.0)) / 2.0, 1e-13);
  EXPECT_LE(c.inverse_norm, 4.0);
  EXPECT_EQ(*c.claimed_bound, 4.0);
}

TEST(CleanDecompose, HalfNormBoundaryTakesSmallBranch) {
  const ToleranceProfile tol;
  const ComplexMatrix t = with_norm(generate(Generator::Ginibre, 4, 3), 0.5 + 0.5 * tol.tie_tol);
  const auto c = clean_decompose(t);
  EXPECT_EQ(c.branch, CleanBranch::SmallNorm);
  EXPECT_LE(c.inverse_norm, 2.0 + 1e-6);
}

TEST(CleanDecompose, RandomInstancesMeetTheBound) {
  const std::array<Generator, 4> gens{Generator::HaarUnitaryScaled, Generator::Ginibre, Generator::Nilpotent,
                                      Generator::RankDeficient};
  int count = 0;
  for (Eigen::Index n = 1; n <= 16; n += 3) {
    for (auto g : gens) {
      for (std::uint64_t s = 0; s < 10; ++s) {
        for (double scale : {0.3, 0.7, 3.0}) {
          const ComplexMatrix t = with_norm(generate(g, n, s), scale);
          const auto c = clean_decompose(t);
          EXPECT_LE(c.inverse_norm, 4.0 + 1e-6);
          EXPECT_LE(c.idempotency_residual, 1e-8);
          EXPECT_TRUE(verify_certificate(t, c).passed());
          ++count;
        }
      }
    }
  }
  EXPECT_EQ(count, 6 * 4 * 10 * 3);
}

TEST(AlmostStar, NilpotentFormulaAndDeterminant) {
  const ComplexMatrix t{{0, 1}, {0, 0}};
  const auto c = almost_star_clean(t);
  const ComplexMatrix expected{{0.5, 0.5}, {0.5, 0.5}};
  EXPECT_LE(dist(c.summand, expected), 1e-15);
  EXPECT_LE(dist(c.split_projection.matrix(), e(2, 1, 1)), 1e-15);
  const Complex det = oracle::cofactor_det(testing_support::to_dense((t - c.summand).eigen()));
  EXPECT_NEAR(det.real(), 0.5, 1e-12);
  EXPECT_NEAR(det.imag(), 0.0, 1e-12);
}

TEST(AlmostStar, InvertibleGivesZeroProjection) {
  const ComplexMatrix t = generate(Generator::Ginibre, 5, 12);
  const auto c = almost_star_clean(t);
  EXPECT_LE(dist(c.summand, ComplexMatrix::zero(5)), 1e-14);
  EXPECT_LE(dist(t - c.summand, t), 1e-14);
}

TEST(AlmostStar, ZeroGivesIdentity) {
  const auto c = almost_star_clean(ComplexMatrix::zero(2));
  EXPECT_LE(dist(c.summand.eigen(), id(2)), 1e-15);
  EXPECT_LE(dist(c.inverse.eigen(), -id(2)), 1e-15);
  EXPECT_FALSE(c.claimed_bound.has_value());
}

TEST(Verify, AcceptsFreshCertificate) {
  const ComplexMatrix t = with_norm(generate(Generator::Nilpotent, 6, 4), 3.0);
  const auto r = verify_certificate(t, clean_decompose(t));
  EXPECT_TRUE(r.passed());
}

TEST(Verify, PerturbedSummandFailsIdempotency) {
  const ComplexMatrix t = with_norm(generate(Generator::Ginibre, 4, 21), 2.0);
  auto c = clean_decompose(t);
  Mat p = c.summand.eigen();
  p(0, 0) += 1e-3;
  c.summand = ComplexMatrix(p);
  const auto r = verify_certificate(t, c);
  EXPECT_FALSE(r.passed());
  const auto* idem = r.find("idempotency");
  ASSERT_NE(idem, nullptr);
  EXPECT_FALSE(idem->passed);
  // Direct computation of the same residual.
  const double direct = detail::norm2(p * p - p);
  EXPECT_NEAR(idem->measured, direct, 1e-12);
  EXPECT_GT(idem->measured, 1e-4);
  EXPECT_LT(idem->measured, 1e-1);
}

TEST(Verify, KindMismatchFailsSelfadjointness) {
  const ComplexMatrix t{{0, 1}, {0, 0}};
  auto c = clean_decompose(t);
  c.kind = CleanKind::AlmostStarProjection;
  const auto r = verify_certificate(t, c);
  const auto* sa = r.find("selfadjointness");
  ASSERT_NE(sa, nullptr);
  EXPECT_FALSE(sa->passed);
}

TEST(BlockClean, PerBlockMatchesFactorCalls) {
  const ComplexMatrix a{{0, 1}, {0, 0}};
  const ComplexMatrix b{{0.3}};
  const auto cert = clean_decompose(BlockOperator({a, b}));
  ASSERT_EQ(cert.blocks.size(), 2u);
  EXPECT_LE(dist(cert.blocks[0].summand, clean_decompose(a).summand), 0.0);
  EXPECT_LE(dist(cert.blocks[1].summand, clean_decompose(b).summand), 0.0);
  EXPECT_NEAR(cert.inverse_norm, std::max(kGolden, 1.0 / 0.7), 1e-13);
  EXPECT_EQ(*cert.claimed_bound, 4.0);
  const Mat whole = cert.summand().assemble().eigen();
  EXPECT_LE(dist(whole * whole, whole), 1e-14);
}

/// Every 2x2 matrix with entries in {0, +-1/2, +-1, +-i}: the constructed
/// summand is a 2x2 idempotent (0, I, or trace 1 with zero determinant) and
/// the cofactor determinant of T - P agrees with the SVD invertibility verdict.
TEST(GridOracle, CoarseTwoByTwoGrid) {
  const std::array<Complex, 7> vals{Complex(0), Complex(0.5), Complex(-0.5), Complex(1), Complex(-1), kJ, -kJ};
  const ToleranceProfile tol;
  int agree = 0, total = 0;
  for (const auto& a : vals)
    for (const auto& b : vals)
      for (const auto& c : vals)
        for (const auto& d : vals) {
          const ComplexMatrix t{{a, b}, {c, d}};
          for (int kind = 0; kind < 2; ++kind) {
            const auto cert = kind == 0 ? clean_decompose(t) : almost_star_clean(t);
            const oracle::Dense p = testing_support::to_dense(cert.summand.eigen());
            const Complex tr = p(0, 0) + p(1, 1);
            const Complex det_p = oracle::cofactor_det(p);
            const bool is_zero = std::abs(p(0, 0)) + std::abs(p(0, 1)) + std::abs(p(1, 0)) + std::abs(p(1, 1)) < 1e-12;
            const bool is_id = std::abs(p(0, 0) - 1.0) + std::abs(p(0, 1)) + std::abs(p(1, 0)) + std::abs(p(1, 1) - 1.0) < 1e-12;
            const bool rank_one = std::abs(tr - 1.0) < 1e-12 && std::abs(det_p) < 1e-12;
            EXPECT_TRUE(is_zero || is_id || rank_one);
            const Mat diff = (t - cert.summand).eigen();
            const Complex det = oracle::cofactor_det(testing_support::to_dense(diff));
            const double scale = std::max(1.0, detail::norm2(diff));
            const bool oracle_inv = std::abs(det) > 1e-12 * scale * scale;
            const auto s = svd(ComplexMatrix(diff));
            const bool svd_inv = s.sigma(1) > tol.rank_cutoff(2) * s.sigma(0);
            agree += oracle_inv == svd_inv;
            ++total;
            EXPECT_TRUE(oracle_inv);
          }
        }
  EXPECT_EQ(agree, total);
  EXPECT_EQ(total, 2 * 7 * 7 * 7 * 7);
}

}  // namespace
