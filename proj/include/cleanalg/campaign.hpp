#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cleanalg/clean.hpp"
#include "cleanalg/json_io.hpp"
#include "cleanalg/kernel.hpp"
#include "cleanalg/lattice.hpp"
#include "cleanalg/random.hpp"
#include "cleanalg/two_projections.hpp"

namespace cleanalg {

struct CampaignConfig {
  std::vector<Eigen::Index> dims{1, 2, 3, 4, 5, 6, 7, 8};
  std::uint64_t trials_per_dim = 200;
  std::uint64_t seed = 20240601;
  std::vector<Generator> generators{kAllGenerators.begin(), kAllGenerators.end()};
  std::vector<double> norm_scales{0.1, 0.49, 0.5, 0.51, 1.0, 10.0};
  ToleranceProfile tolerance{};
  std::size_t max_failure_dumps = 50;

  void validate() const {
    if (dims.empty()) throw Error(ErrorCode::ParseError, "campaign config: dims is empty");
    for (auto d : dims)
      if (d < 1) throw Error(ErrorCode::ParseError, "campaign config: dims must be positive");
    if (generators.empty()) throw Error(ErrorCode::ParseError, "campaign config: generators is empty");
    if (trials_per_dim < 1) throw Error(ErrorCode::ParseError, "campaign config: trials_per_dim must be >= 1");
    if (norm_scales.empty()) throw Error(ErrorCode::ParseError, "campaign config: norm_scales is empty");
    for (auto s : norm_scales)
      if (!(s > 0.0)) throw Error(ErrorCode::ParseError, "campaign config: norm_scales must be positive");
  }
};

struct CheckStats {
  std::uint64_t passed = 0;
  std::uint64_t failed = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  double worst_measured = 0.0;
  double threshold_at_worst = 0.0;
};

/// Enough to rebuild the instance: generate(generator, dim, seed) then
/// rescale to `scale` (except near_half_norm).
struct FailureRecord {
  std::string check;
  std::string generator;
  Eigen::Index dim;
  std::uint64_t trial;
  std::uint64_t seed;
  double scale;
  double measured;
  double threshold;
  std::string message;
  std::optional<ComplexMatrix> matrix;
};

struct CampaignReport {
  std::map<std::string, CheckStats> checks;
  std::vector<FailureRecord> failures;
  std::uint64_t instances = 0;
  double wall_clock_seconds = 0.0;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second.failed == 0; });
  }
  std::uint64_t failed_checks() const {
    std::uint64_t n = 0;
    for (const auto& [_, s] : checks) n += s.failed;
    return n;
  }
};

namespace campaign_detail {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;

/// Accumulator for one work item; merged in item order.
struct Recorder {
  CampaignReport report;
  const CampaignConfig* config;
  std::string generator;
  Eigen::Index dim = 0;
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  double scale = 0.0;
  const ComplexMatrix* instance = nullptr;

  /// Records measured <= threshold.
  void check(const std::string& name, double measured, double threshold, const std::string& message = {}) {
    auto& s = report.checks[name];
    const double slack = threshold - measured;
    const bool ok = measured <= threshold;  // NaN fails
    if (ok) {
      ++s.passed;
    } else {
      ++s.failed;
    }
    if (!(slack >= s.worst_slack)) {
      s.worst_slack = std::isnan(slack) ? -std::numeric_limits<double>::infinity() : slack;
      s.worst_measured = measured;
      s.threshold_at_worst = threshold;
    }
    if (!ok) {
      FailureRecord f{name, generator, dim, trial, seed, scale, measured, threshold, message, std::nullopt};
      if (instance) f.matrix = *instance;
      report.failures.push_back(std::move(f));
    }
  }

  void error(const std::string& name, const Error& e) {
    check(name, std::numeric_limits<double>::infinity(), 0.0, e.what());
  }
};

inline void merge(CampaignReport& into, CampaignReport&& from, std::size_t max_dumps) {
  into.instances += from.instances;
  for (auto& [name, s] : from.checks) {
    auto& t = into.checks[name];
    t.passed += s.passed;
    t.failed += s.failed;
    if (s.worst_slack < t.worst_slack) {
      t.worst_slack = s.worst_slack;
      t.worst_measured = s.worst_measured;
      t.threshold_at_worst = s.threshold_at_worst;
    }
  }
  for (auto& f : from.failures) {
    const auto same = std::count_if(into.failures.begin(), into.failures.end(),
                                    [&](const FailureRecord& g) { return g.check == f.check; });
    if (static_cast<std::size_t>(same) < max_dumps) into.failures.push_back(std::move(f));
  }
}

inline void clean_suite(Recorder& r, const ComplexMatrix& t, const ToleranceProfile& tol) {
  const double n = static_cast<double>(t.dim());
  const double t_norm = operator_norm(t);
  CleanCertificate c = [&] {
    try {
      return std::optional<CleanCertificate>(clean_decompose(t, tol));
    } catch (const Error& e) {
      r.error("clean.construction", e);
      return std::optional<CleanCertificate>();
    }
  }()
      .value_or(CleanCertificate{CleanKind::CleanIdempotent, CleanBranch::Split, ComplexMatrix::zero(1),
                                 ComplexMatrix::zero(1), -1.0, std::nullopt, std::nullopt, 0, 0, 0, 0,
                                 Projection::zero(1), std::nullopt, std::nullopt, 0, std::nullopt, std::nullopt,
                                 std::nullopt, false});
  if (c.inverse_norm < 0.0) return;
  r.check("clean.construction", 0.0, 0.0);
  r.check("clean.idempotency", c.idempotency_residual, 1e-8);
  r.check("clean.inverse_bound", c.inverse_norm, 4.0 + 1e-6);
  r.check("clean.inverse_residual", std::max(c.inverse_left_residual, c.inverse_right_residual), n * 1e-9);
  if (t_norm <= 0.5) {
    const double off = c.branch == CleanBranch::SmallNorm
                           ? detail::norm2(c.summand.eigen() - Mat::Identity(t.dim(), t.dim()))
                           : std::numeric_limits<double>::infinity();
    r.check("clean.small_norm_summand", off, 0.0);
    r.check("clean.small_norm_bound", c.inverse_norm, 2.0 + 1e-6);
  }
  if (c.branch == CleanBranch::Split) {
    r.check("clean.idempotent_norm", c.summand_norm, 2.0 + 2.0 * c.te_norm.value_or(0.0) + 1e-8);
    r.check("clean.lemma_bound", c.inverse_norm, c.lemma_bound.value_or(0.0) + 1e-6);
    r.check("clean.left_projection_is_p0", c.p0_residual.value_or(0.0), 1e-8);
    if (c.split_bound) {
      const auto& b = *c.split_bound;
      r.check("splitting.sandwich_lower", b.lower() - b.middle(), 1e-8);
      r.check("splitting.sandwich_upper", b.middle() - b.upper(), 1e-8);
    }
    if (!c.degenerate) r.check("clean.lambda", std::abs(c.lambda.value_or(0.0) - kInvSqrt2), 1e-8);
  }
  const auto v = verify_certificate(t, c, tol);
  r.check("verify.clean", static_cast<double>(std::count_if(v.checks.begin(), v.checks.end(),
                                                            [](const CheckResult& x) { return !x.passed; })),
          0.0);
}

inline void almost_star_suite(Recorder& r, const ComplexMatrix& t, const ToleranceProfile& tol) {
  const double n = static_cast<double>(t.dim());
  try {
    const CleanCertificate c = almost_star_clean(t, tol);
    r.check("almost_star.construction", 0.0, 0.0);
    r.check("almost_star.idempotency", c.idempotency_residual, 1e-8);
    r.check("almost_star.selfadjointness", c.selfadjointness_residual, 1e-8);
    r.check("almost_star.inverse_residual", std::max(c.inverse_left_residual, c.inverse_right_residual), n * 1e-9);
    const ComplexMatrix diff = t - c.summand;
    const auto s = svd(diff);
    r.check("almost_star.invertible", tol.rank_cutoff(t.dim()) * s.sigma(0) - s.sigma(s.sigma.size() - 1), 0.0);
    if (!c.degenerate) r.check("almost_star.p0_fperp", std::abs(c.p0_fperp_norm.value_or(0.0) - kInvSqrt2), 1e-8);
    const auto v = verify_certificate(t, c, tol);
    r.check("verify.almost_star", v.passed() ? 0.0 : 1.0, 0.0);
  } catch (const Error& e) {
    r.error("almost_star.construction", e);
  }
}

inline void splitting_suite(Recorder& r, const ComplexMatrix& t, SplitMix64& rng, const ToleranceProfile& tol) {
  const Eigen::Index n = t.dim();
  const Projection e = random_projection(n, static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n + 1))), rng);
  try {
    const auto s = invert_via_splitting(t, e, tol);
    const auto& b = s.bound;
    r.check("splitting.sandwich_lower", b.lower() - b.middle(), 1e-8);
    r.check("splitting.sandwich_upper", b.middle() - b.upper(), 1e-8);
    const Mat& sm = s.inverse.eigen();
    r.check("splitting.left_inverse", detail::norm2(sm * t.eigen() - Mat::Identity(n, n)), static_cast<double>(n) * 1e-9);
  } catch (const Error& e) {
    r.error("splitting.construction", e);
  }
}

/// Halmos decomposition, Remark identities, P0 and the difference norm law
/// on one random pair.
inline void pair_suite(Recorder& r, const Projection& e, const Projection& f, const ToleranceProfile& tol) {
  const Eigen::Index n = e.dim();
  const double dn = static_cast<double>(n);
  const Mat id = Mat::Identity(n, n);
  try {
    const PairDecomposition d = decompose_pair(e, f, tol);
    const Mat& e11 = d.e11.eigen();
    const Mat& e12 = d.e12.eigen();
    const Mat& e21 = d.e21.eigen();
    const Mat& e22 = d.e22.eigen();
    const Mat& h = d.h.eigen();
    const Mat& i0 = d.generic_unit.eigen();
    const Mat q = d.q().eigen();
    const Mat p = e11;
    r.check("pair.reconstruct_e",
            detail::norm2(e.eigen() - (e11 + d.meet_ef.eigen() + d.meet_efp.eigen())), dn * 1e-9);
    r.check("pair.reconstruct_f",
            detail::norm2(f.eigen() - (q + d.meet_ef.eigen() + d.meet_epf.eigen())), dn * 1e-9);
    r.check("pair.p_minus_q_squared", detail::norm2((p - q) * (p - q) - (i0 - h)), dn * 1e-9);
    const Mat* units[2][2] = {{&e11, &e12}, {&e21, &e22}};
    double mu = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l) {
            const Mat expect = j == k ? *units[i][l] : Mat(Mat::Zero(n, n));
            mu = std::max(mu, detail::norm2(*units[i][j] * *units[k][l] - expect));
          }
    mu = std::max(mu, detail::norm2(e11 + e22 - i0));
    mu = std::max(mu, detail::norm2(e12.adjoint() - e21));
    r.check("pair.matrix_units", mu, 1e-9);
    double comm = 0.0;
    for (const Mat* u : {&e11, &e12, &e21, &e22}) comm = std::max(comm, detail::norm2(h * *u - *u * h));
    r.check("pair.h_commutes", comm, 1e-9);
    r.check("pair.join_split",
            detail::norm2(join(e, f, tol).eigen() -
                          (i0 + d.meet_ef.eigen() + d.meet_efp.eigen() + d.meet_epf.eigen())),
            dn * 1e-9);
    const double ident_tol = std::min(1e-8, dn * 1e-9);
    const Mat twist = i0 - kI * e21 + kI * e12;
    r.check("pair.remark_q_square", detail::norm2((twist - 2.0 * q) * (twist - 2.0 * q) - 2.0 * i0), ident_tol);
    r.check("pair.remark_p_square", detail::norm2((twist - 2.0 * p) * (twist - 2.0 * p) - 2.0 * i0), ident_tol);
    const Mat qp = i0 - q;
    r.check("pair.remark_compression", detail::norm2(qp * (i0 + kI * e21 - kI * e12) * qp - qp), ident_tol);

    if (auto w = equivalent(d.meet_efp, d.meet_epf)) {
      const P0Construction c = build_p0(d, f, *w, tol);
      const Mat& p0 = c.p0.eigen();
      r.check("p0.projection", std::max(detail::norm2(p0 * p0 - p0), detail::norm2(p0 - p0.adjoint())), 1e-8);
      if (!c.degenerate) r.check("p0.fperp_norm", std::abs(c.p0_fperp_norm - kInvSqrt2), 1e-8);
      const Mat rhs = 0.5 * i0 + d.meet_ef.eigen() + 0.5 * (d.meet_efp.eigen() + d.meet_epf.eigen()) +
                      d.meet_epfp.eigen();
      const Mat a = p0 - e.complement().eigen();
      const Mat b = p0 - f.complement().eigen();
      r.check("p0.square_identities", std::max(detail::norm2(a * a - rhs), detail::norm2(b * b - rhs)), 1e-8);
    }

    if (d.meet_ef.is_zero() && meet(e, f, tol).is_zero() && !join(e, f, tol).is_zero()) {
      const auto x = difference_inverse(e, f, tol);
      const double closed = x.closed_form();
      r.check("difference.norm_law", std::abs(x.norm_value - closed) / closed, 1e-8);
      const Mat diff = e.eigen() - f.eigen();
      const Mat j = join(e, f, tol).eigen();
      r.check("difference.inverse_residual",
              std::max(detail::norm2(x.inverse_on_join.eigen() * diff - j), detail::norm2(diff * x.inverse_on_join.eigen() - j)),
              dn * 1e-9 * std::max(1.0, closed * closed));
    }
  } catch (const Error& err) {
    r.error("pair.construction", err);
  }
}

inline void block_suite(Recorder& r, const BlockOperator& b, const ToleranceProfile& tol) {
  try {
    const auto cert = clean_decompose(b, tol);
    r.check("block.inverse_bound", cert.inverse_norm, 4.0 + 1e-6);
    const Mat t = b.assemble().eigen();
    const Mat p = cert.summand().assemble().eigen();
    const Mat x = cert.inverse().assemble().eigen();
    const Eigen::Index n = t.rows();
    r.check("block.assembled", std::max(detail::norm2(p * p - p), detail::norm2((t - p) * x - Mat::Identity(n, n))),
            static_cast<double>(n) * 1e-9);
    const auto star = almost_star_clean(b, tol);
    const Mat p0 = star.summand().assemble().eigen();
    r.check("block.almost_star_projection", std::max(detail::norm2(p0 * p0 - p0), detail::norm2(p0 - p0.adjoint())),
            1e-8);
  } catch (const Error& e) {
    r.error("block.construction", e);
  }
}

struct WorkItem {
  Eigen::Index dim;
  Generator gen;
  std::size_t gen_index;
  std::uint64_t trial;
};

inline CampaignReport run_item(const CampaignConfig& cfg, const WorkItem& w) {
  Recorder r;
  r.config = &cfg;
  r.generator = std::string(to_string(w.gen));
  r.dim = w.dim;
  r.trial = w.trial;
  r.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(w.gen), static_cast<std::uint64_t>(w.dim), w.trial);
  const ToleranceProfile& tol = cfg.tolerance;
  const ComplexMatrix base = generate(w.gen, w.dim, r.seed);
  const double base_norm = operator_norm(base);

  const std::size_t nscales = w.gen == Generator::NearHalfNorm ? 1 : cfg.norm_scales.size();
  for (std::size_t k = 0; k < nscales; ++k) {
    const double scale = w.gen == Generator::NearHalfNorm ? base_norm : cfg.norm_scales[k];
    const ComplexMatrix t = w.gen == Generator::NearHalfNorm ? base : with_norm(base, scale);
    r.scale = scale;
    r.instance = &t;
    ++r.report.instances;
    clean_suite(r, t, tol);
    almost_star_suite(r, t, tol);
    if (w.gen == Generator::Block && base_norm > 0.0) {
      const BlockOperator blocks = generate_block(w.dim, r.seed);
      std::vector<ComplexMatrix> scaled;
      for (const auto& m : blocks.blocks()) scaled.push_back((scale / base_norm) * m);
      block_suite(r, BlockOperator(std::move(scaled)), tol);
    }
    if (k == 0) {
      SplitMix64 rng(derive_seed(r.seed, 0x5041495253ULL));
      if (w.gen == Generator::Ginibre || w.gen == Generator::HaarUnitaryScaled || w.gen == Generator::NearHalfNorm)
        splitting_suite(r, t, rng, tol);
      r.instance = nullptr;
      const auto kind = static_cast<PairKind>(w.trial % 4);
      const auto [e, f] = random_pair(w.dim, kind, rng);
      pair_suite(r, e, f, tol);
    }
    r.instance = nullptr;
  }
  return std::move(r.report);
}

inline std::size_t thread_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CLEAN_DECOMP_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
  }
  return n;
}

}  // namespace campaign_detail

/// Runs every property suite over the configured instance grid. Trials are
/// independent, seeded from (seed, generator, dim, trial); results merge in
/// a fixed order, so the report does not depend on the thread count.
inline CampaignReport run_campaign(const CampaignConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  std::vector<campaign_detail::WorkItem> items;
  for (auto d : cfg.dims)
    for (std::size_t g = 0; g < cfg.generators.size(); ++g)
      for (std::uint64_t t = 0; t < cfg.trials_per_dim; ++t) items.push_back({d, cfg.generators[g], g, t});

  std::vector<CampaignReport> parts(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) parts[i] = campaign_detail::run_item(cfg, items[i]);
  };
  const std::size_t nthreads = std::min(campaign_detail::thread_count(), std::max<std::size_t>(1, items.size()));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < nthreads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  CampaignReport out;
  for (auto& p : parts) campaign_detail::merge(out, std::move(p), cfg.max_failure_dumps);
  out.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

namespace io {

inline CampaignConfig campaign_config_from_json(const json& j) {
  if (!j.is_object()) detail::fail("config", "expected an object");
  CampaignConfig c;
  if (auto it = j.find("dims"); it != j.end()) {
    if (!it->is_array()) detail::fail("config.dims", "expected an array");
    c.dims.clear();
    for (const auto& d : *it) {
      if (!d.is_number_integer()) detail::fail("config.dims", "expected integers");
      c.dims.push_back(d.get<Eigen::Index>());
    }
  }
  if (auto it = j.find("trials_per_dim"); it != j.end()) {
    if (!it->is_number_integer() || it->get<long long>() < 1) detail::fail("config.trials_per_dim", "expected a positive integer");
    c.trials_per_dim = it->get<std::uint64_t>();
  }
  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0))
      detail::fail("config.seed", "expected an unsigned 64-bit integer");
    c.seed = it->get<std::uint64_t>();
  }
  if (auto it = j.find("generators"); it != j.end()) {
    if (!it->is_array()) detail::fail("config.generators", "expected an array");
    c.generators.clear();
    for (const auto& g : *it) {
      if (!g.is_string()) detail::fail("config.generators", "expected strings");
      c.generators.push_back(parse_generator(g.get<std::string>()));
    }
  }
  if (auto it = j.find("norm_scales"); it != j.end()) {
    if (!it->is_array()) detail::fail("config.norm_scales", "expected an array");
    c.norm_scales.clear();
    for (const auto& s : *it) c.norm_scales.push_back(detail::number(s, "config.norm_scales"));
  }
  if (auto it = j.find("tolerance"); it != j.end()) c.tolerance = tolerance_from_json(*it, "config.tolerance");
  if (auto it = j.find("max_failure_dumps"); it != j.end() && it->is_number_integer())
    c.max_failure_dumps = it->get<std::size_t>();
  c.validate();
  return c;
}

inline json to_json(const CampaignConfig& c) {
  json gens = json::array();
  for (auto g : c.generators) gens.push_back(std::string(to_string(g)));
  return json{{"dims", c.dims},
              {"trials_per_dim", c.trials_per_dim},
              {"seed", c.seed},
              {"generators", std::move(gens)},
              {"norm_scales", c.norm_scales},
              {"tolerance", to_json(c.tolerance)},
              {"max_failure_dumps", c.max_failure_dumps}};
}

/// The report is a pure function of the config unless timing is requested.
inline json to_json(const CampaignReport& r, const CampaignConfig& cfg, bool with_timing = false) {
  json checks = json::object();
  for (const auto& [name, s] : r.checks) {
    checks[name] = json{{"passed", s.passed},
                        {"failed", s.failed},
                        {"worst_slack", std::isfinite(s.worst_slack) ? json(s.worst_slack) : json(nullptr)},
                        {"worst_measured", std::isfinite(s.worst_measured) ? json(s.worst_measured) : json(nullptr)},
                        {"threshold_at_worst", s.threshold_at_worst}};
  }
  json failures = json::array();
  for (const auto& f : r.failures) {
    json fj{{"check", f.check},
            {"generator", f.generator},
            {"dim", f.dim},
            {"trial", f.trial},
            {"seed", f.seed},
            {"scale", f.scale},
            {"measured", std::isfinite(f.measured) ? json(f.measured) : json(nullptr)},
            {"threshold", f.threshold},
            {"message", f.message}};
    if (f.matrix) fj["matrix"] = to_json(*f.matrix);
    failures.push_back(std::move(fj));
  }
  json out{{"config", to_json(cfg)},
           {"instances", r.instances},
           {"all_passed", r.all_passed()},
           {"failed_checks", r.failed_checks()},
           {"checks", std::move(checks)},
           {"failures", std::move(failures)}};
  if (with_timing) out["wall_clock_seconds"] = r.wall_clock_seconds;
  return out;
}

}  // namespace io

}  // namespace cleanalg
