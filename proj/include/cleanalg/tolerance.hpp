#pragma once

#include <cmath>
#include <limits>
#include <sstream>

#include "cleanalg/error.hpp"

namespace cleanalg {

/// All numerical slack used by the library lives here.
///
/// Rank decisions keep a singular value sigma_i when
/// sigma_i > rank_cutoff(dim) * sigma_1, where rank_cutoff(dim) is
/// dim * rank_cutoff_rel.
struct ToleranceProfile {
  double rank_cutoff_rel = 0x1p-45;  // per unit of dimension
  double projection_tol = 1e-9;      // P^2 = P = P* residuals
  // Halmos eigenvalues near 0 or 1. Folding an eigenvalue mu moves the pair
  // by about sqrt(mu), so this sits well below the square of the identity
  // tolerances while staying above eigensolver noise (~n * eps).
  double generic_tol = 1e-12;
  double tie_tol = 1e-10;            // spectral threshold tie band

  double rank_cutoff(long dim) const noexcept {
    return static_cast<double>(dim < 1 ? 1 : dim) * rank_cutoff_rel;
  }

  void validate() const {
    auto check = [](double v, const char* name) {
      if (!(v > 0.0 && v < 1.0)) {
        std::ostringstream os;
        os << name << " = " << v << " must lie in (0, 1)";
        throw Error(ErrorCode::InvalidTolerance, os.str());
      }
    };
    check(rank_cutoff_rel, "rank_cutoff_rel");
    check(projection_tol, "projection_tol");
    check(generic_tol, "generic_tol");
    check(tie_tol, "tie_tol");
    if (rank_cutoff_rel < std::numeric_limits<double>::epsilon()) {
      throw Error(ErrorCode::InvalidTolerance, "rank_cutoff_rel below machine epsilon");
    }
  }
};

}  // namespace cleanalg
