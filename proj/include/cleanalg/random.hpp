#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cleanalg/error.hpp"
#include "cleanalg/kernel.hpp"
#include "cleanalg/lattice.hpp"
#include "cleanalg/matrix.hpp"

namespace cleanalg {

/// SplitMix64 in counter form: the k-th output of a stream with seed s is
/// mix(s + (k + 1) * 0x9E3779B97F4A7C15). Streams are reproducible from
/// (seed, counter) alone.
class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() noexcept {
    state_ += kGamma;
    return mix(state_);
  }

  /// Uniform in (0, 1], 53-bit resolution.
  double uniform() noexcept { return (static_cast<double>(next() >> 11) + 1.0) * 0x1p-53; }

  /// Standard normal via Box-Muller (one value per two uniforms).
  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept { return n == 0 ? 0 : next() % n; }

 private:
  std::uint64_t state_;
};

/// Seed for one campaign trial, derived from the campaign seed and the
/// trial's coordinates.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t z = SplitMix64::mix(seed ^ 0x243F6A8885A308D3ULL);
  z = SplitMix64::mix(z + a * SplitMix64::kGamma);
  z = SplitMix64::mix(z + b * SplitMix64::kGamma);
  return SplitMix64::mix(z + c * SplitMix64::kGamma);
}

enum class Generator { Ginibre, HaarUnitaryScaled, Nilpotent, RankDeficient, Hermitian, NearHalfNorm, Block };

inline constexpr std::array<Generator, 7> kAllGenerators{Generator::Ginibre,       Generator::HaarUnitaryScaled,
                                                         Generator::Nilpotent,     Generator::RankDeficient,
                                                         Generator::Hermitian,     Generator::NearHalfNorm,
                                                         Generator::Block};

constexpr std::string_view to_string(Generator g) noexcept {
  switch (g) {
    case Generator::Ginibre: return "ginibre";
    case Generator::HaarUnitaryScaled: return "haar_unitary_scaled";
    case Generator::Nilpotent: return "nilpotent";
    case Generator::RankDeficient: return "rank_deficient";
    case Generator::Hermitian: return "hermitian";
    case Generator::NearHalfNorm: return "near_half_norm";
    case Generator::Block: return "block";
  }
  return "unknown";
}

inline Generator parse_generator(std::string_view name) {
  for (auto g : kAllGenerators)
    if (to_string(g) == name) return g;
  throw Error(ErrorCode::UnknownGenerator, "unknown generator '" + std::string(name) + "'");
}

namespace detail {

/// i.i.d. complex Gaussian entries with E|z|^2 = 1.
inline Mat gaussian(Eigen::Index rows, Eigen::Index cols, SplitMix64& rng) {
  Mat m(rows, cols);
  const double s = std::sqrt(0.5);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      m(i, j) = Complex(s * re, s * im);
    }
  return m;
}

/// Haar unitary: QR of a Ginibre matrix with R's diagonal phases absorbed.
inline Mat haar_unitary(Eigen::Index n, SplitMix64& rng) {
  const Mat g = gaussian(n, n, rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double a = std::abs(r(j, j));
    if (a > 0.0) q.col(j) *= r(j, j) / a;
  }
  return q;
}

inline Mat rescale(Mat m, double target) {
  const double nrm = norm2(m);
  if (nrm > 0.0) m *= target / nrm;
  return m;
}

}  // namespace detail

/// Haar-distributed projection of the given rank.
inline Projection random_projection(Eigen::Index n, Eigen::Index rank, SplitMix64& rng) {
  return Projection::from_basis(detail::haar_unitary(n, rng).leftCols(rank), n);
}

enum class PairKind { Haar, Commuting, Nested, Structured };

/// Random projection pair. Structured pairs have prescribed meet ranks
/// (E^F, E^F', E'^F, E'^F') and a generic part with angles drawn in
/// (0.05, pi/2 - 0.05), all inside one Haar frame.
inline std::pair<Projection, Projection> random_pair(Eigen::Index n, PairKind kind, SplitMix64& rng) {
  const Mat frame = detail::haar_unitary(n, rng);
  auto pick = [&](Eigen::Index hi) { return static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(hi + 1))); };
  switch (kind) {
    case PairKind::Haar:
      return {random_projection(n, pick(n), rng), random_projection(n, pick(n), rng)};
    case PairKind::Commuting: {
      std::vector<Eigen::Index> ce, cf;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (rng.below(2)) ce.push_back(i);
        if (rng.below(2)) cf.push_back(i);
      }
      auto take = [&](const std::vector<Eigen::Index>& idx) {
        Mat b(n, static_cast<Eigen::Index>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) b.col(static_cast<Eigen::Index>(j)) = frame.col(idx[j]);
        return Projection::from_basis(b, n);
      };
      return {take(ce), take(cf)};
    }
    case PairKind::Nested: {
      const Eigen::Index r2 = pick(n);
      const Eigen::Index r1 = pick(r2);
      return {Projection::from_basis(frame.leftCols(r1), n), Projection::from_basis(frame.leftCols(r2), n)};
    }
    case PairKind::Structured: {
      const Eigen::Index m = pick(n / 2);
      Eigen::Index left = n - 2 * m;
      const Eigen::Index k1 = pick(left);
      left -= k1;
      const Eigen::Index k2 = pick(left);
      left -= k2;
      const Eigen::Index k3 = pick(left);
      Mat be(n, k1 + k2 + m), bf(n, k1 + k3 + m);
      Eigen::Index col = 0;
      for (Eigen::Index i = 0; i < k1; ++i, ++col) {
        be.col(i) = frame.col(col);
        bf.col(i) = frame.col(col);
      }
      for (Eigen::Index i = 0; i < k2; ++i, ++col) be.col(k1 + i) = frame.col(col);
      for (Eigen::Index i = 0; i < k3; ++i, ++col) bf.col(k1 + i) = frame.col(col);
      for (Eigen::Index i = 0; i < m; ++i) {
        const double theta = 0.05 + (std::numbers::pi / 2 - 0.1) * rng.uniform();
        const Vec uu = frame.col(col++);
        const Vec vv = frame.col(col++);
        be.col(k1 + k2 + i) = uu;
        bf.col(k1 + k3 + i) = std::cos(theta) * uu + std::sin(theta) * vv;
      }
      return {Projection::from_basis(be, n), Projection::from_basis(bf, n)};
    }
  }
  throw Error(ErrorCode::UnknownGenerator, "unhandled pair kind");
}

/// Block-diagonal instance: a random partition of `dim` into blocks, each a
/// Ginibre, nilpotent or rank-deficient draw.
inline BlockOperator generate_block(Eigen::Index dim, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<ComplexMatrix> blocks;
  Eigen::Index left = dim;
  while (left > 0) {
    const auto size = static_cast<Eigen::Index>(1 + rng.below(static_cast<std::uint64_t>(std::min<Eigen::Index>(left, 4))));
    Mat b;
    switch (rng.below(3)) {
      case 0: b = detail::gaussian(size, size, rng) / std::sqrt(static_cast<double>(size)); break;
      case 1: {
        b = detail::gaussian(size, size, rng);
        b.triangularView<Eigen::Lower>().setZero();
        break;
      }
      default: {
        const Eigen::Index r = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(size)));
        b = detail::haar_unitary(size, rng).leftCols(r) * detail::haar_unitary(size, rng).leftCols(r).adjoint();
        if (r == 0) b = Mat::Zero(size, size);
        break;
      }
    }
    blocks.emplace_back(std::move(b));
    left -= size;
  }
  return BlockOperator(std::move(blocks));
}

/// Deterministic random instance of the given kind.
inline ComplexMatrix generate(Generator kind, Eigen::Index dim, std::uint64_t seed) {
  if (dim < 1) throw Error(ErrorCode::DimensionMismatch, "generator dimension must be positive");
  SplitMix64 rng(seed);
  const double sn = std::sqrt(static_cast<double>(dim));
  switch (kind) {
    case Generator::Ginibre:
      return ComplexMatrix(Mat(detail::gaussian(dim, dim, rng) / sn));
    case Generator::HaarUnitaryScaled:
      return ComplexMatrix(detail::haar_unitary(dim, rng));
    case Generator::Nilpotent: {
      Mat m = detail::gaussian(dim, dim, rng) / sn;
      m.triangularView<Eigen::Lower>().setZero();
      return ComplexMatrix(std::move(m));
    }
    case Generator::RankDeficient: {
      const auto r = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(dim)));
      const Mat u = detail::haar_unitary(dim, rng);
      const Mat v = detail::haar_unitary(dim, rng);
      RealVec s = RealVec::Zero(dim);
      for (Eigen::Index i = 0; i < r; ++i) s(i) = 0.2 + 0.8 * rng.uniform();
      return ComplexMatrix(Mat(u * s.cast<Complex>().asDiagonal() * v.adjoint()));
    }
    case Generator::Hermitian: {
      const Mat g = detail::gaussian(dim, dim, rng) / sn;
      return ComplexMatrix(Mat(0.5 * (g + g.adjoint())));
    }
    case Generator::NearHalfNorm: {
      static constexpr std::array<double, 3> kTargets{0.5 - 1e-9, 0.5, 0.5 + 1e-9};
      const double target = kTargets[seed % 3];
      return ComplexMatrix(detail::rescale(detail::gaussian(dim, dim, rng), target));
    }
    case Generator::Block:
      return generate_block(dim, seed).assemble();
  }
  throw Error(ErrorCode::UnknownGenerator, "unhandled generator");
}

inline ComplexMatrix generate(std::string_view kind, Eigen::Index dim, std::uint64_t seed) {
  return generate(parse_generator(kind), dim, seed);
}

/// Rescale to operator norm `target` (the zero matrix stays zero).
inline ComplexMatrix with_norm(const ComplexMatrix& m, double target) {
  return ComplexMatrix(detail::rescale(m.eigen(), target));
}

}  // namespace cleanalg
