// Command-line driver: loads a scenario file, runs classification, jump
// analysis, the numerical deformation pipeline, or the built-in invariant
// suites, and emits a human summary on stdout plus an optional structured
// JSON report. Exit codes: 0 definite verdicts, 1 malformed input or failed
// selftest, 2 Undetermined verdict, 3 deformation obstruction.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "corona/scenario.hpp"
#include "corona/selftest.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kBadInput = 1;
constexpr int kUndetermined = 2;
constexpr int kObstruction = 3;

std::string group_string(const corona::GroupSpec& g) {
  std::ostringstream os;
  bool first = true;
  if (g.free_rank == 1) {
    os << "Z";
    first = false;
  } else if (g.free_rank > 1) {
    os << "Z^" << g.free_rank;
    first = false;
  }
  for (long long d : g.torsion) {
    os << (first ? "" : " + ") << "Z/" << d;
    first = false;
  }
  if (first) os << "trivial";
  return os.str();
}

std::string sequence_string(const std::vector<corona::GroupElement>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? " " : "") << xs[i].to_string();
  return os.str();
}

std::string integer_sequence_string(const std::vector<long long>& xs) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
  os << ")";
  return os.str();
}

void print_scenario_line(const corona::Scenario& sc) {
  std::ostringstream os;
  os << "scenario: " << corona::to_string(sc.space.kind()) << " with partition [";
  const auto& part = sc.space.partition();
  for (std::size_t i = 0; i < part.size(); ++i) os << (i ? ", " : "") << part[i];
  os << "], group " << group_string(sc.group) << ", "
     << (sc.is_symbolic() ? "symbolic" : "numeric") << " mode";
  std::cout << os.str() << "\n";
}

corona::CircleMode resolve_circle_mode(const corona::Scenario& sc, const std::string& flag) {
  if (!flag.empty()) return corona::circle_mode_from_string(flag);
  if (sc.circle_mode) return *sc.circle_mode;
  return corona::CircleMode::StrictCyclic;
}

int run_classify(const std::string& scenario_path, const std::string& report_path,
                 const std::string& relation, const std::string& circle_flag,
                 bool no_timestamp) {
  corona::Scenario sc = corona::load_scenario(scenario_path);
  if (!sc.is_symbolic())
    throw std::invalid_argument("classify requires a symbolic scenario (use analyze/deform "
                                "for numeric ones)");
  const corona::CircleMode mode = resolve_circle_mode(sc, circle_flag);
  std::vector<corona::Relation> relations;
  if (relation == "all")
    relations = {corona::Relation::MvN, corona::Relation::Unitary, corona::Relation::Homotopy};
  else
    relations = {corona::relation_from_string(relation)};

  print_scenario_line(sc);
  if (sc.space.has_wrap()) std::cout << "circle mode: " << corona::to_string(mode) << "\n";

  const auto& [jp, jq] = *sc.symbolic;
  std::vector<corona::EquivalenceCertificate> certs;
  for (corona::Relation r : relations) {
    switch (r) {
      case corona::Relation::MvN:
        certs.push_back(corona::decide_mvn(jp, jq, sc.space, mode));
        break;
      case corona::Relation::Unitary:
        certs.push_back(corona::decide_unitary(jp, jq, sc.space, sc.capabilities, mode));
        break;
      case corona::Relation::Homotopy:
        certs.push_back(corona::decide_homotopy(jp, jq, sc.space, sc.capabilities, mode));
        break;
    }
  }

  bool undetermined = false;
  for (const auto& c : certs) {
    std::ostringstream os;
    os << corona::to_string(c.relation) << ": " << corona::to_string(c.verdict);
    if (c.witness_t) os << "  t = " << sequence_string(*c.witness_t);
    if (c.witness_s) os << "  s = " << sequence_string(*c.witness_s);
    if (c.refutation) os << "  (" << *c.refutation << ")";
    std::cout << os.str() << "\n";
    undetermined |= c.verdict == corona::Verdict::Undetermined;
  }

  if (!report_path.empty()) {
    corona::Json rep;
    rep["command"] = "classify";
    rep["group"] = corona::group_to_json(sc.group);
    rep["space"] = corona::space_to_json(sc.space);
    rep["circle_mode"] = corona::to_string(mode);
    rep["certificates"] = corona::Json::array();
    for (const auto& c : certs) rep["certificates"].push_back(corona::certificate_to_json(c));
    corona::write_report(std::move(rep), report_path, !no_timestamp);
    std::cout << "report: " << report_path << "\n";
  }
  return undetermined ? kUndetermined : kOk;
}

void print_lifting_report(const corona::LiftingReport& r) {
  std::cout << "lifting " << r.name << ": measured jumps " << sequence_string(r.measured.jumps)
            << ", declared " << sequence_string(r.declared.jumps)
            << (r.measured.jumps == r.declared.jumps ? "" : "  MISMATCH") << "\n";
  for (const auto& p : r.points) {
    std::printf("  x=%g: jump %lld, window norm %.3g, outside window %.3g\n", p.x, p.jump,
                p.window_norm, p.outside_window);
  }
  if (r.wrap)
    std::printf("  wrap: jump %lld, window norm %.3g, outside window %.3g\n", r.wrap->jump,
                r.wrap->window_norm, r.wrap->outside_window);
}

int run_analyze(const std::string& scenario_path, const std::string& report_path,
                std::optional<int> dim_flag, bool no_timestamp) {
  corona::Scenario sc = corona::load_scenario(scenario_path);
  if (sc.is_symbolic())
    throw std::invalid_argument("analyze requires a numeric scenario");
  corona::NumericInstance inst = corona::instantiate_scenario(sc, dim_flag);
  print_scenario_line(sc);
  corona::LiftingReport rp = corona::analyze_lifting("p", inst.p, inst.declared_p);
  corona::LiftingReport rq = corona::analyze_lifting("q", inst.q, inst.declared_q);
  print_lifting_report(rp);
  print_lifting_report(rq);

  if (!report_path.empty()) {
    corona::Json rep;
    rep["command"] = "analyze";
    rep["group"] = corona::group_to_json(sc.group);
    rep["space"] = corona::space_to_json(sc.space);
    rep["liftings"] = corona::Json::array();
    rep["liftings"].push_back(corona::lifting_report_to_json(rp));
    rep["liftings"].push_back(corona::lifting_report_to_json(rq));
    corona::write_report(std::move(rep), report_path, !no_timestamp);
    std::cout << "report: " << report_path << "\n";
  }
  return kOk;
}

int run_deform(const std::string& scenario_path, const std::string& report_path,
               const std::string& circle_flag, std::optional<double> tol_flag,
               std::optional<int> dim_flag, bool no_timestamp) {
  corona::Scenario sc = corona::load_scenario(scenario_path);
  if (sc.is_symbolic())
    throw std::invalid_argument("deform requires a numeric scenario");
  const corona::CircleMode mode = resolve_circle_mode(sc, circle_flag);
  const double tol = tol_flag.value_or(sc.tolerance);
  corona::NumericInstance inst = corona::instantiate_scenario(sc, dim_flag);
  print_scenario_line(sc);
  if (sc.space.has_wrap()) std::cout << "circle mode: " << corona::to_string(mode) << "\n";

  corona::Json rep;
  rep["command"] = "deform";
  rep["group"] = corona::group_to_json(sc.group);
  rep["space"] = corona::space_to_json(sc.space);
  rep["circle_mode"] = corona::to_string(mode);
  rep["tolerance"] = tol;

  corona::DeformOutcome out = corona::deform_pipeline(inst.p, inst.q, mode);
  rep["certificate"] = corona::certificate_to_json(out.certificate);
  if (out.certificate.verdict != corona::Verdict::Equivalent) {
    rep["targets"] = nullptr;
    rep["measured_t"] = nullptr;
    rep["residuals"] = nullptr;
    rep["within_tolerance"] = false;
    if (!report_path.empty()) {
      corona::write_report(std::move(rep), report_path, !no_timestamp);
      std::cout << "report: " << report_path << "\n";
    }
    std::cerr << "deform: classification refuses the pair: "
              << out.certificate.refutation.value_or("not equivalent") << "\n";
    return kObstruction;
  }

  const corona::ResidualReport& res = out.witness->report;
  const bool within =
      res.max_domain_residual <= tol && res.max_codomain_residual <= tol;
  std::cout << "certificate: Equivalent, t = " << sequence_string(*out.certificate.witness_t)
            << "\n";
  std::cout << "common targets: " << integer_sequence_string(out.common_targets) << "\n";
  std::cout << "measured index data: " << integer_sequence_string(out.measured_t) << "\n";
  std::printf("residuals: domain %.3g, codomain %.3g, tolerance %g: %s\n",
              res.max_domain_residual, res.max_codomain_residual, tol,
              within ? "within" : "EXCEEDED");

  rep["targets"] = out.common_targets;
  rep["measured_t"] = out.measured_t;
  rep["residuals"] = corona::residual_report_to_json(res);
  rep["within_tolerance"] = within;
  if (!report_path.empty()) {
    corona::write_report(std::move(rep), report_path, !no_timestamp);
    std::cout << "report: " << report_path << "\n";
  }
  if (!within) {
    std::cerr << "deform: witness residuals exceed the tolerance\n";
    return kObstruction;
  }
  return kOk;
}

int run_selftest(const std::string& report_path, bool no_timestamp) {
  const std::vector<corona::SelftestResult> results =
      corona::run_selftest_suites(corona::standard_selftest_suites());
  int passed = 0;
  for (const auto& r : results) {
    std::printf("%-28s %s\n", r.name.c_str(), r.passed ? "pass" : "FAIL");
    if (!r.passed) std::printf("  violated: %s\n", r.detail.c_str());
    passed += r.passed ? 1 : 0;
  }
  std::printf("%d/%zu suites passed\n", passed, results.size());

  if (!report_path.empty()) {
    corona::Json rep;
    rep["command"] = "selftest";
    rep["suites"] = corona::Json::array();
    for (const auto& r : results) {
      corona::Json e;
      e["name"] = r.name;
      e["passed"] = r.passed;
      e["detail"] = r.detail;
      rep["suites"].push_back(e);
    }
    rep["passed"] = passed;
    rep["failed"] = static_cast<int>(results.size()) - passed;
    corona::write_report(std::move(rep), report_path, !no_timestamp);
    std::cout << "report: " << report_path << "\n";
  }
  return passed == static_cast<int>(results.size()) ? kOk : kBadInput;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"classification of projection-valued sections with compact jumps"};
  app.require_subcommand(1);

  std::string scenario_path, report_path;
  std::string relation = "all";
  std::string circle_flag;
  double tol_value = 1e-8;
  int dim_value = 64;
  bool no_timestamp = false;

  auto* classify = app.add_subcommand(
      "classify", "decide MvN/unitary/homotopy equivalence for a symbolic scenario");
  classify->add_option("scenario", scenario_path, "scenario JSON file")->required();
  classify->add_option("report", report_path, "structured report output path");
  classify->add_option("--relation", relation, "mvn|unitary|homotopy|all (default all)")
      ->check(CLI::IsMember({"mvn", "unitary", "homotopy", "all"}));
  classify->add_option("--circle-mode", circle_flag, "strict|paper (default strict)")
      ->check(CLI::IsMember({"strict", "paper"}));
  classify->add_flag("--no-timestamp", no_timestamp, "omit the timestamp from the report");

  auto* analyze =
      app.add_subcommand("analyze", "measure jump classes and residuals of a numeric scenario");
  analyze->add_option("scenario", scenario_path, "scenario JSON file")->required();
  analyze->add_option("report", report_path, "structured report output path");
  auto* analyze_dim = analyze->add_option("--dim", dim_value, "truncation dimension override");
  analyze->add_flag("--no-timestamp", no_timestamp, "omit the timestamp from the report");

  auto* deform = app.add_subcommand(
      "deform", "build and verify an explicit equivalence witness for a numeric scenario");
  deform->add_option("scenario", scenario_path, "scenario JSON file")->required();
  deform->add_option("report", report_path, "structured report output path");
  deform->add_option("--circle-mode", circle_flag, "strict|paper (default strict)")
      ->check(CLI::IsMember({"strict", "paper"}));
  auto* deform_tol =
      deform->add_option("--tol", tol_value, "residual tolerance (default 1e-8)");
  auto* deform_dim = deform->add_option("--dim", dim_value, "truncation dimension override");
  deform->add_flag("--no-timestamp", no_timestamp, "omit the timestamp from the report");

  auto* selftest = app.add_subcommand("selftest", "run every built-in invariant suite");
  selftest->add_option("report", report_path, "structured report output path");
  selftest->add_flag("--no-timestamp", no_timestamp, "omit the timestamp from the report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (classify->parsed())
      return run_classify(scenario_path, report_path, relation, circle_flag, no_timestamp);
    if (analyze->parsed())
      return run_analyze(scenario_path, report_path,
                         analyze_dim->count() ? std::optional<int>(dim_value) : std::nullopt,
                         no_timestamp);
    if (deform->parsed())
      return run_deform(scenario_path, report_path, circle_flag,
                        deform_tol->count() ? std::optional<double>(tol_value) : std::nullopt,
                        deform_dim->count() ? std::optional<int>(dim_value) : std::nullopt,
                        no_timestamp);
    if (selftest->parsed()) return run_selftest(report_path, no_timestamp);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::runtime_error& e) {
    // numerical obstructions carry the partition point in their message
    std::cerr << "error: " << e.what() << "\n";
    return kObstruction;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kBadInput;
  }
  return kBadInput;
}
