#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "cleanalg/clean.hpp"
#include "cleanalg/error.hpp"
#include "cleanalg/lattice.hpp"
#include "cleanalg/matrix.hpp"
#include "cleanalg/tolerance.hpp"
#include "cleanalg/two_projections.hpp"

namespace cleanalg::io {

using json = nlohmann::json;

namespace detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ParseError, where + ": " + what);
}

inline const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

inline json optional_number(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

inline std::optional<double> read_optional(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) fail(key, "expected a number or null");
  return it->get<double>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matrices: {"dim": n, "entries": [[re, im], ...]} row-major, length n^2.

inline json to_json(const ComplexMatrix& m) {
  const Eigen::Index n = m.dim();
  json entries = json::array();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) entries.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
  return json{{"dim", n}, {"entries", std::move(entries)}};
}

inline ComplexMatrix matrix_from_json(const json& j, const std::string& where = "matrix") {
  const json& dj = detail::field(j, "dim", where);
  if (!dj.is_number_integer() || dj.get<long long>() < 1) detail::fail(where + ".dim", "expected a positive integer");
  const auto n = static_cast<Eigen::Index>(dj.get<long long>());
  const json& ej = detail::field(j, "entries", where);
  if (!ej.is_array()) detail::fail(where + ".entries", "expected an array");
  if (static_cast<Eigen::Index>(ej.size()) != n * n) {
    std::ostringstream os;
    os << "expected " << n * n << " entries for a square " << n << "x" << n << " matrix, found " << ej.size();
    detail::fail(where + ".entries", os.str());
  }
  Mat m(n, n);
  for (Eigen::Index k = 0; k < n * n; ++k) {
    const json& z = ej[static_cast<std::size_t>(k)];
    const std::string at = where + ".entries[" + std::to_string(k) + "]";
    if (!z.is_array() || z.size() != 2) detail::fail(at, "expected [re, im]");
    m(k / n, k % n) = Complex(detail::number(z[0], at + "[0]"), detail::number(z[1], at + "[1]"));
  }
  try {
    return ComplexMatrix(std::move(m));
  } catch (const Error& e) {
    detail::fail(where, e.what());
  }
}

inline json to_json(const BlockOperator& b) {
  json blocks = json::array();
  for (const auto& m : b.blocks()) blocks.push_back(to_json(m));
  return json{{"blocks", std::move(blocks)}};
}

inline BlockOperator block_from_json(const json& j, const std::string& where = "block_operator") {
  const json& bj = detail::field(j, "blocks", where);
  if (!bj.is_array()) detail::fail(where + ".blocks", "expected an array");
  std::vector<ComplexMatrix> blocks;
  for (std::size_t i = 0; i < bj.size(); ++i) blocks.push_back(matrix_from_json(bj[i], where + ".blocks[" + std::to_string(i) + "]"));
  if (blocks.empty()) throw Error(ErrorCode::BlockMismatch, where + ": empty block list");
  return BlockOperator(std::move(blocks));
}

// ---------------------------------------------------------------------------
// Projections: matrix JSON plus {"rank": r}.

inline json to_json(const Projection& p) {
  json j = to_json(p.matrix());
  j["rank"] = p.rank();
  return j;
}

/// Validates the matrix as a projection; a recorded rank must agree.
inline Projection projection_from_json(const json& j, const ToleranceProfile& tol = {},
                                       const std::string& where = "projection") {
  const ComplexMatrix m = matrix_from_json(j, where);
  Projection p = Projection::from_matrix(m, tol);
  if (auto it = j.find("rank"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<long long>() != p.rank()) {
      detail::fail(where + ".rank", "recorded rank disagrees with trace rank " + std::to_string(p.rank()));
    }
  }
  return p;
}

inline json to_json(const PairDecomposition& d) {
  json h = json::array();
  for (double x : d.eigenvalues) h.push_back(x);
  return json{
      {"meet_e_f", to_json(d.meet_ef)},
      {"meet_e_fperp", to_json(d.meet_efp)},
      {"meet_eperp_f", to_json(d.meet_epf)},
      {"meet_eperp_fperp", to_json(d.meet_epfp)},
      {"generic_unit", to_json(d.generic_unit)},
      {"E11", to_json(d.e11)},
      {"E12", to_json(d.e12)},
      {"E21", to_json(d.e21)},
      {"E22", to_json(d.e22)},
      {"H", to_json(d.h)},
      {"h_eigenvalues", std::move(h)},
  };
}

// ---------------------------------------------------------------------------
// Tolerance profiles; every field optional.

inline json to_json(const ToleranceProfile& t) {
  return json{{"rank_cutoff_rel", t.rank_cutoff_rel},
              {"projection_tol", t.projection_tol},
              {"generic_tol", t.generic_tol},
              {"tie_tol", t.tie_tol}};
}

inline ToleranceProfile tolerance_from_json(const json& j, const std::string& where = "tolerance") {
  if (!j.is_object()) detail::fail(where, "expected an object");
  ToleranceProfile t;
  auto read = [&](const char* key, double& out) {
    if (auto it = j.find(key); it != j.end()) out = detail::number(*it, where + "." + key);
  };
  read("rank_cutoff_rel", t.rank_cutoff_rel);
  read("projection_tol", t.projection_tol);
  read("generic_tol", t.generic_tol);
  read("tie_tol", t.tie_tol);
  t.validate();
  return t;
}

// ---------------------------------------------------------------------------
// Certificates.

inline json to_json(const SplitBoundCertificate& c) {
  return json{{"a1", detail::optional_number(c.a1)},
              {"a2", detail::optional_number(c.a2)},
              {"lambda", c.lambda},
              {"s_norm", c.s_norm},
              {"t_norm", c.t_norm}};
}

inline json to_json(const CleanCertificate& c) {
  return json{
      {"kind", std::string(to_string(c.kind))},
      {"branch", std::string(to_string(c.branch))},
      {"summand", to_json(c.summand)},
      {"inverse", to_json(c.inverse)},
      {"inverse_norm", c.inverse_norm},
      {"claimed_bound", detail::optional_number(c.claimed_bound)},
      {"lemma_bound", detail::optional_number(c.lemma_bound)},
      {"residuals",
       {{"idempotency", c.idempotency_residual},
        {"selfadjointness", c.selfadjointness_residual},
        {"inverse_left", c.inverse_left_residual},
        {"inverse_right", c.inverse_right_residual},
        {"left_projection_vs_p0", detail::optional_number(c.p0_residual)}}},
      {"lambda", detail::optional_number(c.lambda)},
      {"split_projection", to_json(c.split_projection)},
      {"split_bound", c.split_bound ? to_json(*c.split_bound) : json(nullptr)},
      {"summand_norm", c.summand_norm},
      {"te_norm", detail::optional_number(c.te_norm)},
      {"p0_fperp_norm", detail::optional_number(c.p0_fperp_norm)},
      {"degenerate", c.degenerate},
  };
}

inline CleanCertificate certificate_from_json(const json& j, const std::string& where = "certificate") {
  const json& kj = detail::field(j, "kind", where);
  if (!kj.is_string()) detail::fail(where + ".kind", "expected a string");
  CleanKind kind;
  if (kj == "clean_idempotent") {
    kind = CleanKind::CleanIdempotent;
  } else if (kj == "almost_star_projection") {
    kind = CleanKind::AlmostStarProjection;
  } else {
    detail::fail(where + ".kind", "unknown kind " + kj.dump());
  }
  CleanBranch branch = kind == CleanKind::CleanIdempotent ? CleanBranch::Split : CleanBranch::AlmostStar;
  if (auto it = j.find("branch"); it != j.end() && it->is_string()) {
    if (*it == "small_norm") branch = CleanBranch::SmallNorm;
    else if (*it == "split") branch = CleanBranch::Split;
    else if (*it == "almost_star") branch = CleanBranch::AlmostStar;
  }
  ComplexMatrix summand = matrix_from_json(detail::field(j, "summand", where), where + ".summand");
  ComplexMatrix inverse = matrix_from_json(detail::field(j, "inverse", where), where + ".inverse");
  const json& sp = detail::field(j, "split_projection", where);
  ComplexMatrix spm = matrix_from_json(sp, where + ".split_projection");
  const auto sp_rank = static_cast<Eigen::Index>(std::llround(spm.eigen().trace().real()));

  const json& res = detail::field(j, "residuals", where);
  auto res_num = [&](const char* key) { return detail::number(detail::field(res, key, where + ".residuals"), where + ".residuals." + key); };

  CleanCertificate c{kind,
                     branch,
                     std::move(summand),
                     std::move(inverse),
                     detail::number(detail::field(j, "inverse_norm", where), where + ".inverse_norm"),
                     detail::read_optional(j, "claimed_bound"),
                     detail::read_optional(j, "lemma_bound"),
                     res_num("idempotency"),
                     res_num("selfadjointness"),
                     res_num("inverse_left"),
                     res_num("inverse_right"),
                     Projection::trusted(std::move(spm), sp_rank),
                     detail::read_optional(j, "lambda"),
                     std::nullopt,
                     0.0,
                     detail::read_optional(j, "te_norm"),
                     detail::read_optional(j, "p0_fperp_norm"),
                     detail::read_optional(res, "left_projection_vs_p0"),
                     j.value("degenerate", false)};
  if (auto it = j.find("summand_norm"); it != j.end() && it->is_number()) c.summand_norm = it->get<double>();
  if (auto it = j.find("split_bound"); it != j.end() && it->is_object()) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    SplitBoundCertificate b;
    b.a1 = detail::read_optional(*it, "a1").value_or(inf);
    b.a2 = detail::read_optional(*it, "a2").value_or(inf);
    b.lambda = detail::number(detail::field(*it, "lambda", where), where + ".split_bound.lambda");
    b.s_norm = detail::number(detail::field(*it, "s_norm", where), where + ".split_bound.s_norm");
    b.t_norm = detail::number(detail::field(*it, "t_norm", where), where + ".split_bound.t_norm");
    c.split_bound = b;
  }
  return c;
}

inline json to_json(const BlockCleanCertificate& b) {
  json blocks = json::array();
  for (const auto& c : b.blocks) blocks.push_back(to_json(c));
  return json{{"blocks", std::move(blocks)},
              {"inverse_norm", b.inverse_norm},
              {"claimed_bound", detail::optional_number(b.claimed_bound)}};
}

inline json to_json(const VerificationReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back(json{{"name", c.name}, {"passed", c.passed}, {"measured", c.measured}, {"threshold", c.threshold}});
  return json{{"passed", r.passed()}, {"checks", std::move(checks)}};
}

// ---------------------------------------------------------------------------
// Files.

/// Parses a JSON file; syntax errors report line and column.
inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << path << ":" << line << ":" << col << ": " << e.what();
    throw Error(ErrorCode::ParseError, os.str());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, path + ": cannot open file for writing");
  out << j.dump(2) << '\n';
}

}  // namespace cleanalg::io
