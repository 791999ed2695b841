#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "support/helpers.hpp"

using namespace cleanalg;
using testing_support::dist;
using testing_support::e;
using testing_support::id;
using testing_support::rotated_line;

namespace {

Projection proj(const ComplexMatrix& m) { return Projection::from_matrix(m); }

TEST(Projection, FromMatrixValidates) {
  EXPECT_EQ(proj(e(3, 1, 1)).rank(), 1);
  try {
    Projection::from_matrix(ComplexMatrix{{1, 1}, {0, 0}});
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::NotProjection);
  }
  EXPECT_THROW(Projection::from_matrix(ComplexMatrix::diagonal({0.5, 0.5})), Error);
}

TEST(Projection, ComplementAndBasis) {
  const Projection p = rotated_line(0.3);
  const Projection q = p.complement();
  EXPECT_EQ(q.rank(), 1);
  EXPECT_LE(dist(p.eigen() + q.eigen(), id(2)), 1e-15);
  const Mat b = p.basis();
  EXPECT_LE(dist(b * b.adjoint(), p.eigen()), 1e-15);
  // First nonzero entry of each basis vector is real positive.
  EXPECT_GT(b(0, 0).real(), 0.0);
  EXPECT_EQ(b(0, 0).imag(), 0.0);
}

TEST(PartialIsometry, MakeChecksRelations) {
  EXPECT_NO_THROW(PartialIsometry::make(e(2, 1, 0), proj(e(2, 0, 0)), proj(e(2, 1, 1))));
  try {
    PartialIsometry::make(e(2, 1, 0), proj(e(2, 1, 1)), proj(e(2, 1, 1)));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::NotPartialIsometry);
  }
}

TEST(LeftRightProjection, HandExamples) {
  EXPECT_TRUE(left_projection(ComplexMatrix::zero(3)).is_zero());
  EXPECT_TRUE(right_projection(ComplexMatrix::zero(3)).is_zero());
  const ComplexMatrix t{{0, 1}, {0, 0}};
  EXPECT_LE(dist(left_projection(t).matrix(), e(2, 0, 0)), 1e-15);
  EXPECT_LE(dist(right_projection(t).matrix(), e(2, 1, 1)), 1e-15);
  const ComplexMatrix g = generate(Generator::Ginibre, 4, 1);
  EXPECT_LE(dist(left_projection(g).eigen(), id(4)), 1e-13);
  EXPECT_LE(dist(right_projection(g).eigen(), id(4)), 1e-13);
}

TEST(LeftRightProjection, AbsorbT) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const ComplexMatrix t = generate(Generator::RankDeficient, 6, seed);
    EXPECT_LE(dist(t * right_projection(t).matrix(), t), 1e-12);
    EXPECT_LE(dist(left_projection(t).matrix() * t, t), 1e-12);
    EXPECT_LE(dist(right_projection(t).matrix(), left_projection(t.adjoint()).matrix()), 1e-12);
  }
}

TEST(MeetJoin, HandExamples) {
  const Projection a = rotated_line(0.7);
  EXPECT_LE(dist(meet(a, a).matrix(), a.matrix()), 1e-12);
  EXPECT_LE(dist(join(a, a).matrix(), a.matrix()), 1e-12);
  const Projection e11 = proj(e(2, 0, 0));
  const Projection diag = rotated_line(std::numbers::pi / 4);
  EXPECT_TRUE(meet(e11, diag).is_zero());
  EXPECT_EQ(join(e11, diag).rank(), 2);
  EXPECT_LE(dist(join(e11, diag).eigen(), id(2)), 1e-12);
  const Projection small = proj(e(3, 0, 0));
  const Projection big = proj(e(3, 0, 0) + e(3, 1, 1));
  EXPECT_LE(dist(meet(small, big).matrix(), small.matrix()), 1e-12);
  EXPECT_LE(dist(join(small, big).matrix(), big.matrix()), 1e-12);
}

TEST(MeetJoin, DimensionMismatch) {
  try {
    meet(Projection::identity(2), Projection::identity(3));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(MeetJoin, LatticeLawsOnRandomTriples) {
  const ToleranceProfile tol;
  SplitMix64 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(7));
    const auto kind = static_cast<PairKind>(trial % 4);
    const auto [p, q] = random_pair(n, kind, rng);
    const Projection m = meet(p, q);
    EXPECT_TRUE(is_subprojection(m, p)) << trial;
    EXPECT_TRUE(is_subprojection(m, q)) << trial;
    const Projection j = join(p, q);
    EXPECT_TRUE(is_subprojection(p, j)) << trial;
    const Projection dm = meet(p.complement(), q.complement()).complement();
    EXPECT_LE(dist(j.matrix(), dm.matrix()), tol.projection_tol);
    EXPECT_EQ(j.rank() + m.rank(), p.rank() + q.rank()) << "trial " << trial << " kind " << trial % 4;
  }
}

TEST(MeetJoin, RangeIdentitiesOfEFperp) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(7));
    const auto [p, q] = random_pair(n, static_cast<PairKind>(trial % 4), rng);
    ComplexMatrix x = p.matrix() * q.complement().matrix();
    // Nested pairs give a roundoff-only product, which the relative rank rule would read as full rank.
    if (operator_norm(x) <= 1e-12) x = ComplexMatrix::zero(n);
    EXPECT_LE(dist(right_projection(x).eigen(), join(p, q).eigen() - q.eigen()), 1e-9) << trial;
    EXPECT_LE(dist(left_projection(x).eigen(), p.eigen() - meet(p, q).eigen()), 1e-9) << trial;
  }
}

TEST(SpectralProjection, HandExamples) {
  const ComplexMatrix t = ComplexMatrix::diagonal({0.3, 0.7});
  EXPECT_LE(dist(spectral_projection_leq(t, 0.5).matrix(), e(2, 0, 0)), 1e-15);
  EXPECT_EQ(spectral_projection_leq(t, 0.7).rank(), 2);
  EXPECT_EQ(spectral_projection_leq(t, 0.2).rank(), 0);
  EXPECT_THROW(spectral_projection_leq(ComplexMatrix{{0, 1}, {0, 0}}, 0.5), Error);
}

TEST(SpectralProjection, TieGoesToLowerSide) {
  const ToleranceProfile tol;
  const ComplexMatrix t = ComplexMatrix::diagonal({0.5 + 0.5 * tol.tie_tol, 0.5 + 10 * tol.tie_tol});
  EXPECT_EQ(spectral_projection_leq(t, 0.5).rank(), 1);
}

TEST(SpectralProjection, QuadraticFormInequalities) {
  const ToleranceProfile tol;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(seed % 8);
    const ComplexMatrix t = generate(Generator::Hermitian, n, seed);
    const double c = 0.1 * static_cast<double>(seed % 7) - 0.3;
    const Projection p = spectral_projection_leq(t, c);
    EXPECT_LE(dist(p.eigen() * t.eigen(), t.eigen() * p.eigen()), tol.projection_tol * std::max(1.0, operator_norm(t)));
    if (p.rank() > 0) {
      const Mat b = p.basis();
      EXPECT_LE(detail::eigh(b.adjoint() * t.eigen() * b).values.maxCoeff(), c + 10 * tol.projection_tol);
    }
    if (p.rank() < n) {
      const Mat b = p.complement().basis();
      EXPECT_GE(detail::eigh(b.adjoint() * t.eigen() * b).values.minCoeff(), c - 10 * tol.projection_tol);
    }
  }
}

TEST(Equivalent, HandExamples) {
  const auto w = equivalent(proj(e(2, 0, 0)), proj(e(2, 1, 1)));
  ASSERT_TRUE(w);
  EXPECT_LE(dist(w->matrix, e(2, 1, 0)), 1e-15);
  const Projection p = rotated_line(1.1);
  const auto same = equivalent(p, p);
  ASSERT_TRUE(same);
  EXPECT_LE(dist(same->matrix, p.matrix()), 1e-14);
  EXPECT_FALSE(equivalent(Projection::identity(2), proj(e(2, 0, 0))));
}

TEST(Equivalent, WitnessIffRanksMatch) {
  const ToleranceProfile tol;
  SplitMix64 rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(8));
    const Projection p = random_projection(n, static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n + 1))), rng);
    const Projection q = random_projection(n, static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n + 1))), rng);
    const auto w = equivalent(p, q);
    EXPECT_EQ(w.has_value(), p.rank() == q.rank());
    if (w) EXPECT_NO_THROW(PartialIsometry::make(w->matrix, p, q, tol));
  }
}

TEST(Kaplansky, HandExamples) {
  const Projection e11 = proj(e(3, 0, 0));
  const Projection e22 = proj(e(3, 1, 1));
  const auto v = kaplansky_isometry(e11, e22);
  EXPECT_LE(dist(v.initial.matrix(), e11.matrix()), 1e-15);
  EXPECT_LE(dist(v.final.matrix(), e11.matrix()), 1e-15);

  const Projection a = proj(e(2, 0, 0));
  const Projection diag = rotated_line(std::numbers::pi / 4);
  const auto w = kaplansky_isometry(a, diag);
  EXPECT_EQ(w.initial.rank(), 1);
  EXPECT_LE(dist(w.initial.eigen(), id(2) - diag.eigen()), 1e-12);
  EXPECT_LE(dist(w.final.matrix(), a.matrix()), 1e-12);

  const auto z = kaplansky_isometry(e11, Projection::identity(3));
  EXPECT_LE(dist(z.matrix, ComplexMatrix::zero(3)), 1e-15);
}

TEST(Kaplansky, RandomPairsSatisfyRangeFormula) {
  const ToleranceProfile tol;
  SplitMix64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(8));
    const auto [p, q] = random_pair(n, static_cast<PairKind>(trial % 4), rng);
    const auto v = kaplansky_isometry(p, q);
    const Mat& m = v.matrix.eigen();
    EXPECT_LE(dist(m.adjoint() * m, join(p, q).eigen() - q.eigen()), 1e-9) << trial;
    EXPECT_LE(dist(m * m.adjoint(), p.eigen() - meet(p, q).eigen()), 1e-9) << trial;
    EXPECT_NO_THROW(PartialIsometry::make(v.matrix, v.initial, v.final, tol));
  }
}

TEST(IsometryFactor, HandExamples) {
  const ComplexMatrix s1 = isometry_factor(2.0 * ComplexMatrix::identity(3), Projection::identity(3), 1.0);
  EXPECT_LE(dist(s1, 0.5 * ComplexMatrix::identity(3)), 1e-15);

  const ComplexMatrix t2 = ComplexMatrix::diagonal({3, 5});
  const ComplexMatrix s2 = isometry_factor(t2, proj(e(2, 0, 0)), 1.0);
  EXPECT_LE(dist(s2, (1.0 / 3.0) * e(2, 0, 0)), 1e-15);
  EXPECT_LE(dist(t2 * s2, e(2, 0, 0)), 1e-15);

  const ComplexMatrix t3{{0, 1}, {0, 0}};
  const ComplexMatrix s3 = isometry_factor(t3, proj(e(2, 1, 1)), 1.0);
  const ComplexMatrix ts = t3 * s3;
  EXPECT_LE(dist(s3, e(2, 1, 1)), 1e-15);
  EXPECT_LE(dist(ts, e(2, 0, 1)), 1e-15);
  EXPECT_LE(dist(ts.adjoint() * ts, e(2, 1, 1)), 1e-15);
  EXPECT_LE(dist(ts * ts.adjoint(), e(2, 0, 0)), 1e-15);
}

TEST(IsometryFactor, RejectsCornerBelowBound) {
  try {
    isometry_factor(ComplexMatrix::diagonal({3, 5}), proj(e(2, 0, 0)), 4.0);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::CornerNotBoundedBelow);
  }
}

TEST(IsometryFactor, RandomIsometryRelations) {
  SplitMix64 rng(90);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(8));
    const ComplexMatrix t = generate(Generator::Ginibre, n, rng.next());
    const Projection p = random_projection(n, static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n + 1))), rng);
    if (p.rank() == 0) continue;
    const double lam = detail::eigh(p.basis().adjoint() * t.eigen().adjoint() * t.eigen() * p.basis()).values(0);
    const ComplexMatrix s = isometry_factor(t, p, std::sqrt(lam) * 0.9);
    const Mat ts = t.eigen() * s.eigen();
    EXPECT_LE(dist(ts.adjoint() * ts, p.eigen()), 1e-8);
    EXPECT_LE(dist(ts * ts.adjoint(), left_projection(t * p.matrix()).eigen()), 1e-8);
    EXPECT_LE(dist(p.eigen() * s.eigen() * p.eigen(), s.eigen()), 1e-10);
    EXPECT_GE(detail::eigh(s.eigen()).values(0), -1e-12);
  }
}

TEST(Comparison, HandExamples) {
  const ComplexMatrix t = ComplexMatrix::diagonal({0.1, 2});
  const auto r = comparison_test(t, proj(e(2, 0, 0)), 0.5);
  EXPECT_TRUE(r.below);
  EXPECT_TRUE(r.hypothesis);
  EXPECT_NEAR(r.te_norm, 0.1, 1e-15);
  EXPECT_LE(dist(r.spectral.matrix(), e(2, 0, 0)), 1e-15);

  EXPECT_TRUE(comparison_test(t, Projection::zero(2), 0.5).below);

  const auto big = comparison_test(2.0 * ComplexMatrix::identity(2), Projection::identity(2), 0.5);
  EXPECT_FALSE(big.hypothesis);
  EXPECT_NEAR(big.te_norm, 2.0, 1e-15);
}

TEST(Comparison, ImplicationHoldsOnRandomInstances) {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(8));
    const ComplexMatrix t = generate(Generator::Ginibre, n, rng.next());
    const Projection p = random_projection(n, static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n + 1))), rng);
    const auto r = comparison_test(t, p, 0.6);
    if (r.hypothesis) EXPECT_TRUE(r.below);
  }
}

/// E (A - B)*(A - B) E >= (a - b)^2 E when E A*A E >= a^2 E and ||BE|| <= b < a.
TEST(LowerBoundUnderPerturbation, HoldsOnRandomInstances) {
  const ToleranceProfile tol;
  SplitMix64 rng(123);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(8));
    const Projection p = random_projection(n, 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))), rng);
    const Mat a_m = detail::gaussian(n, n, rng);
    const Mat b_e = p.basis();
    const double a = std::sqrt(std::max(0.0, detail::eigh(b_e.adjoint() * a_m.adjoint() * a_m * b_e).values(0)));
    const double b = a * rng.uniform() * 0.999;
    Mat bm = detail::gaussian(n, n, rng);
    bm *= b / std::max(1e-300, detail::norm2(bm * p.eigen()));
    const Mat d = a_m - bm;
    const double low = detail::eigh(b_e.adjoint() * d.adjoint() * d * b_e).values(0);
    EXPECT_GE(low, (a - b) * (a - b) - 10 * tol.projection_tol) << trial;
  }
}

}  // namespace
