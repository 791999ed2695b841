// Command-line front end: decompose, verify, halmos, campaign, generate.
//
// Exit status: 0 success, 1 a check failed, 2 bad input.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cleanalg/cleanalg.hpp"

namespace {

using cleanalg::io::json;

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kInputError = 2;

bool is_block(const json& j) { return j.is_object() && j.contains("blocks") && !j.contains("kind"); }

cleanalg::ToleranceProfile load_tolerance(const std::string& path) {
  if (path.empty()) return {};
  return cleanalg::io::tolerance_from_json(cleanalg::io::read_json_file(path), path);
}

void print_report(const cleanalg::VerificationReport& r, const std::string& prefix) {
  for (const auto& c : r.checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << prefix << c.name << "  measured=" << c.measured
              << "  threshold=" << c.threshold << '\n';
}

int cmd_decompose(const std::string& input, const std::string& kind, const std::string& output,
                  const std::string& tol_path) {
  const auto tol = load_tolerance(tol_path);
  const json in = cleanalg::io::read_json_file(input);
  const bool star = kind == "almost-star";
  json out;
  double inverse_norm = 0.0;
  if (is_block(in)) {
    const auto t = cleanalg::io::block_from_json(in, input);
    const auto c = star ? cleanalg::almost_star_clean(t, tol) : cleanalg::clean_decompose(t, tol);
    inverse_norm = c.inverse_norm;
    out = cleanalg::io::to_json(c);
  } else {
    const auto t = cleanalg::io::matrix_from_json(in, input);
    const auto c = star ? cleanalg::almost_star_clean(t, tol) : cleanalg::clean_decompose(t, tol);
    inverse_norm = c.inverse_norm;
    out = cleanalg::io::to_json(c);
  }
  cleanalg::io::write_json_file(output, out);
  std::cout << "inverse_norm " << inverse_norm << '\n';
  return kOk;
}

int cmd_verify(const std::string& input, const std::string& cert_path, const std::string& tol_path) {
  const auto tol = load_tolerance(tol_path);
  const json in = cleanalg::io::read_json_file(input);
  const json cj = cleanalg::io::read_json_file(cert_path);
  bool ok = true;
  if (is_block(in)) {
    const auto t = cleanalg::io::block_from_json(in, input);
    const auto& blocks = cleanalg::io::detail::field(cj, "blocks", cert_path);
    if (!blocks.is_array() || blocks.size() != t.size())
      cleanalg::io::detail::fail(cert_path + ".blocks", "expected one certificate per block");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto c = cleanalg::io::certificate_from_json(blocks[i], cert_path + ".blocks[" + std::to_string(i) + "]");
      const auto r = cleanalg::verify_certificate(t[i], c, tol);
      print_report(r, "block[" + std::to_string(i) + "].");
      ok = ok && r.passed();
    }
  } else {
    const auto t = cleanalg::io::matrix_from_json(in, input);
    const auto c = cleanalg::io::certificate_from_json(cj, cert_path);
    const auto r = cleanalg::verify_certificate(t, c, tol);
    print_report(r, "");
    ok = r.passed();
  }
  std::cout << (ok ? "certificate verified" : "certificate REJECTED") << '\n';
  return ok ? kOk : kCheckFailed;
}

int cmd_halmos(const std::string& e_path, const std::string& f_path, const std::string& output,
               const std::string& tol_path) {
  const auto tol = load_tolerance(tol_path);
  const auto e = cleanalg::io::projection_from_json(cleanalg::io::read_json_file(e_path), tol, e_path);
  const auto f = cleanalg::io::projection_from_json(cleanalg::io::read_json_file(f_path), tol, f_path);
  const auto d = cleanalg::decompose_pair(e, f, tol);
  cleanalg::io::write_json_file(output, cleanalg::io::to_json(d));
  std::cout << "ranks: E^F=" << d.meet_ef.rank() << " E^F'=" << d.meet_efp.rank() << " E'^F=" << d.meet_epf.rank()
            << " E'^F'=" << d.meet_epfp.rank() << " generic=" << d.generic_unit.rank() << '\n';
  return kOk;
}

int cmd_campaign(const std::string& config_path, const std::string& report_path, bool timing) {
  const auto cfg = cleanalg::io::campaign_config_from_json(cleanalg::io::read_json_file(config_path));
  const auto report = cleanalg::run_campaign(cfg);
  cleanalg::io::write_json_file(report_path, cleanalg::io::to_json(report, cfg, timing));
  for (const auto& [name, s] : report.checks)
    std::cout << (s.failed == 0 ? "PASS " : "FAIL ") << name << "  passed=" << s.passed << " failed=" << s.failed
              << " worst_slack=" << s.worst_slack << '\n';
  std::cout << report.instances << " instances, " << report.failed_checks() << " failed checks, "
            << report.wall_clock_seconds << " s\n";
  return report.all_passed() ? kOk : kCheckFailed;
}

int cmd_generate(const std::string& kind, long dim, std::uint64_t seed, std::optional<double> norm,
                 const std::string& output) {
  auto m = cleanalg::generate(kind, dim, seed);
  if (norm) m = cleanalg::with_norm(m, *norm);
  cleanalg::io::write_json_file(output, cleanalg::io::to_json(m));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clean and almost-*-clean decompositions of complex matrices"};
  app.require_subcommand(1);

  std::string input, output, kind = "clean", tol_path, cert, e_path, f_path, config, report, gen_kind;
  long dim = 4;
  std::uint64_t seed = 0;
  std::optional<double> norm;
  bool timing = false;

  auto* dec = app.add_subcommand("decompose", "Compute a certified decomposition T = (T - P) + P");
  dec->add_option("--input", input, "Matrix or block-operator JSON")->required();
  dec->add_option("--kind", kind, "clean or almost-star")->check(CLI::IsMember({"clean", "almost-star"}));
  dec->add_option("--output", output, "Certificate JSON to write")->required();
  dec->add_option("--tol-profile", tol_path, "Tolerance profile JSON");

  auto* ver = app.add_subcommand("verify", "Recheck a certificate against its matrix");
  ver->add_option("--input", input, "Matrix or block-operator JSON")->required();
  ver->add_option("--cert", cert, "Certificate JSON")->required();
  ver->add_option("--tol-profile", tol_path, "Tolerance profile JSON");

  auto* hal = app.add_subcommand("halmos", "Two-projection decomposition of a pair (E, F)");
  hal->add_option("--e", e_path, "Projection JSON for E")->required();
  hal->add_option("--f", f_path, "Projection JSON for F")->required();
  hal->add_option("--output", output, "Pair decomposition JSON to write")->required();
  hal->add_option("--tol-profile", tol_path, "Tolerance profile JSON");

  auto* camp = app.add_subcommand("campaign", "Run the randomized property campaign");
  camp->add_option("--config", config, "Campaign config JSON")->required();
  camp->add_option("--report", report, "Report JSON to write")->required();
  camp->add_flag("--timing", timing, "Include wall-clock time in the report");

  auto* gen = app.add_subcommand("generate", "Write a random test matrix");
  gen->add_option("--kind", gen_kind, "Generator name")->required();
  gen->add_option("--dim", dim, "Dimension")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Seed");
  gen->add_option("--norm", norm, "Rescale to this operator norm");
  gen->add_option("--output", output, "Matrix JSON to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (*dec) return cmd_decompose(input, kind, output, tol_path);
    if (*ver) return cmd_verify(input, cert, tol_path);
    if (*hal) return cmd_halmos(e_path, f_path, output, tol_path);
    if (*camp) return cmd_campaign(config, report, timing);
    if (*gen) return cmd_generate(gen_kind, dim, seed, norm, output);
  } catch (const cleanalg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.code()) {
      case cleanalg::ErrorCode::InternalInvariantViolation:
      case cleanalg::ErrorCode::ConditionAFailed:
      case cleanalg::ErrorCode::ConditionBFailed:
      case cleanalg::ErrorCode::RankConditionFailed:
      case cleanalg::ErrorCode::CornerNotInvertible:
      case cleanalg::ErrorCode::CornerNotBoundedBelow:
      case cleanalg::ErrorCode::NotInvertibleDifference:
        return kCheckFailed;
      default:
        return kInputError;
    }
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
