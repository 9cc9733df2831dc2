#pragma once

// Built-in invariant suites. Each suite replays one module's declared
// properties on fixed-seed randomized instances and throws on the first
// violation; the runner turns throws into named failures so a regression
// reports which invariant broke, not just that something did.

#include <functional>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "corona/catalog.hpp"
#include "corona/classify.hpp"
#include "corona/deform.hpp"
#include "corona/hilbert.hpp"
#include "corona/kgroup.hpp"
#include "corona/lifting.hpp"
#include "corona/space.hpp"

namespace corona {

struct SelftestSuite {
  std::string name;
  std::function<void()> run;
};

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;  // violated invariant on failure, empty on success
};

namespace selftest {

inline void require(bool ok, const std::string& invariant) {
  if (!ok) throw std::runtime_error(invariant);
}

inline GroupElement random_element(const GroupSpec& g, std::mt19937& rng, long long box) {
  std::uniform_int_distribution<long long> coeff(-box, box);
  std::vector<long long> free(g.free_rank), tor(g.torsion.size());
  for (auto& v : free) v = coeff(rng);
  for (auto& v : tor) v = coeff(rng);
  return GroupElement(g, std::move(free), std::move(tor));
}

inline BaseSpace sample_space(SpaceKind kind, int n) {
  std::vector<double> part;
  for (int i = 1; i <= n; ++i) part.push_back(i / (n + 1.0));
  return BaseSpace(kind, std::move(part));
}

inline void group_arithmetic() {
  GroupSpec g(1, {4});
  std::mt19937 rng(11);
  for (int it = 0; it < 200; ++it) {
    GroupElement a = random_element(g, rng, 20), b = random_element(g, rng, 20);
    require(add(a, b) == add(b, a), "group addition must commute");
    require(add(a, neg(a)).is_zero(), "a + (-a) must vanish");
    require(a.torsion_part()[0] >= 0 && a.torsion_part()[0] < 4,
            "torsion residues must be reduced into [0, order)");
  }
  GroupSpec z = GroupSpec::integers();
  require(add(GroupElement::from_integer(z, 5), GroupElement::from_integer(z, -7)) ==
              GroupElement::from_integer(z, -2),
          "integer embedding must be additive");
}

inline void telescoping_solver() {
  std::mt19937 rng(23);
  std::uniform_int_distribution<long long> coeff(-3, 3);
  for (const GroupSpec& g : {GroupSpec::integers(), GroupSpec(0, {3})}) {
    for (int it = 0; it < 120; ++it) {
      const int n = 1 + static_cast<int>(rng() % 3);
      const int shape = static_cast<int>(rng() % 4);
      std::set<int> forced;
      if (shape == 1) forced = {n};
      if (shape == 2) forced = {0, n};
      // derive a consistent system from a hidden witness
      std::vector<GroupElement> t;
      for (int i = 0; i <= n; ++i)
        t.push_back(forced.count(i) ? GroupElement::zero(g) : random_element(g, rng, 4));
      std::vector<GroupElement> deltas;
      for (int i = 1; i <= n; ++i) deltas.push_back(sub(t[i], t[i - 1]));
      std::optional<GroupElement> wrap;
      if (shape == 3) wrap = sub(t[0], t[n]);
      TelescopeResult r = solve_telescoping(g, deltas, forced, wrap);
      require(r.satisfiable(), "derived-consistent telescoping system must be satisfiable");
      const auto& w = *r.witness;
      for (int i = 1; i <= n; ++i)
        require(sub(w[i], w[i - 1]) == deltas[i - 1],
                "telescoping witness must satisfy the difference equations");
      for (int i : forced)
        require(w[i].is_zero(), "telescoping witness must honor forced zeros");
      if (wrap)
        require(sub(w[0], w[n]) == *wrap, "telescoping witness must honor the wrap equation");
    }
  }
  GroupSpec z = GroupSpec::integers();
  std::vector<GroupElement> deltas{GroupElement::from_integer(z, 2),
                                   GroupElement::from_integer(z, 1)};
  TelescopeResult r = solve_telescoping(z, deltas, {0, 2}, std::nullopt);
  require(!r.satisfiable(), "a line system with nonzero total must be refuted");
  require(!r.refutation.empty(), "refutations must carry an explanation");
}

inline void classification_implications() {
  std::mt19937 rng(37);
  const AlgebraCapabilities bk = AlgebraCapabilities::bk_preset();
  for (const GroupSpec& g : {GroupSpec::integers(), GroupSpec(0, {3})}) {
    for (SpaceKind kind :
         {SpaceKind::Interval, SpaceKind::HalfLine, SpaceKind::Line, SpaceKind::Circle}) {
      for (int it = 0; it < 40; ++it) {
        const int n = 1 + static_cast<int>(rng() % 2);
        BaseSpace s = sample_space(kind, n);
        std::vector<GroupElement> kp, kq;
        for (int i = 0; i < n; ++i) {
          kp.push_back(random_element(g, rng, 2));
          kq.push_back(random_element(g, rng, 2));
        }
        std::optional<GroupElement> wp, wq;
        if (s.has_wrap()) {
          wp = random_element(g, rng, 2);
          wq = random_element(g, rng, 2);
        }
        JumpData jp(g, kp, wp), jq(g, kq, wq);
        EquivalenceCertificate cm = decide_mvn(jp, jq, s);
        EquivalenceCertificate cu = decide_unitary(jp, jq, s, bk);
        EquivalenceCertificate ch = decide_homotopy(jp, jq, s, bk);
        require(cm.verdict != Verdict::Undetermined && cu.verdict != Verdict::Undetermined &&
                    ch.verdict != Verdict::Undetermined,
                "the B=K preset must give definite verdicts");
        if (ch.verdict == Verdict::Equivalent)
          require(cu.verdict == Verdict::Equivalent,
                  "homotopy equivalence must imply unitary equivalence");
        if (cu.verdict == Verdict::Equivalent)
          require(cm.verdict == Verdict::Equivalent,
                  "unitary equivalence must imply MvN equivalence");
      }
    }
  }
}

inline void topology_laws() {
  std::mt19937 rng(41);
  const GroupSpec z = GroupSpec::integers();
  std::uniform_int_distribution<long long> coeff(-3, 3);
  for (int it = 0; it < 150; ++it) {
    const int n = 1 + static_cast<int>(rng() % 3);
    std::vector<GroupElement> kp, kq;
    long long total = 0;
    for (int i = 0; i < n; ++i) {
      const long long a = coeff(rng), b = coeff(rng);
      total += a - b;
      kp.push_back(GroupElement::from_integer(z, a));
      kq.push_back(GroupElement::from_integer(z, b));
    }
    JumpData jp(z, kp), jq(z, kq);
    require(decide_mvn(jp, jq, sample_space(SpaceKind::Interval, n)).verdict ==
                Verdict::Equivalent,
            "interval instances must always classify Equivalent");
    require(decide_mvn(jp, jq, sample_space(SpaceKind::HalfLine, n)).verdict ==
                Verdict::Equivalent,
            "half-line instances must always classify Equivalent");
    const Verdict line = decide_mvn(jp, jq, sample_space(SpaceKind::Line, n)).verdict;
    require(line == (total == 0 ? Verdict::Equivalent : Verdict::NotEquivalent),
            "line instances must classify Equivalent exactly when the totals match");
  }
}

inline void certificate_verification() {
  std::mt19937 rng(43);
  const GroupSpec z = GroupSpec::integers();
  std::uniform_int_distribution<long long> coeff(-2, 2);
  int verified = 0;
  for (int it = 0; it < 150; ++it) {
    const int n = 1 + static_cast<int>(rng() % 2);
    std::vector<GroupElement> kp, kq;
    for (int i = 0; i < n; ++i) {
      kp.push_back(GroupElement::from_integer(z, coeff(rng)));
      kq.push_back(GroupElement::from_integer(z, coeff(rng)));
    }
    JumpData jp(z, kp), jq(z, kq);
    BaseSpace s = sample_space(it % 2 ? SpaceKind::Interval : SpaceKind::Line, n);
    EquivalenceCertificate c = decide_mvn(jp, jq, s);
    if (c.verdict != Verdict::Equivalent) continue;
    require(verify_certificate(c, jp, jq, s), "a fresh certificate must verify");
    EquivalenceCertificate bad = c;
    (*bad.witness_t)[0] = add((*bad.witness_t)[0], GroupElement::from_integer(z, 1));
    require(!verify_certificate(bad, jp, jq, s), "a tampered witness must fail verification");
    ++verified;
  }
  require(verified > 30, "the instance family must exercise verification");
}

inline void window_discipline() {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(64, 64);
  m(40, 2) = 0.5;
  bool threw = false;
  try {
    TruncatedOperator bad(64, 32, m, Eigen::VectorXd::Ones(32));
  } catch (const std::invalid_argument&) {
    threw = true;
  }
  require(threw, "entries outside the window must be rejected unless they match the tail");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(64, 64);
  for (int i = 0; i < 32; ++i) h(i, i) = 0.5;
  for (int i = 32; i < 64; ++i) h(i, i) = 1.0;
  threw = false;
  try {
    ProjectionMatrix bad(TruncatedOperator(64, 32, h, Eigen::VectorXd::Ones(32)));
  } catch (const std::invalid_argument&) {
    threw = true;
  }
  require(threw, "non-idempotent window blocks must be rejected");
}

inline void codimension_rules() {
  std::mt19937 rng(53);
  std::uniform_int_distribution<int> front(4, 28);
  std::uniform_real_distribution<double> angle(0.0, 1.3);
  for (int it = 0; it < 40; ++it) {
    const int fp = front(rng), fq = front(rng), fr = front(rng);
    ProjectionMatrix p = detail::front_sample(64, 32, fp, angle(rng));
    ProjectionMatrix q = detail::front_sample(64, 32, fq, angle(rng));
    ProjectionMatrix r = detail::front_sample(64, 32, fr, angle(rng));
    const long long pq = essential_codimension(p, q);
    require(pq == fp - fq, "front-projection codimension must count the front difference");
    require(pq == -essential_codimension(q, p), "codimension must be antisymmetric");
    require(pq + essential_codimension(q, r) == essential_codimension(p, r),
            "codimension must satisfy the chain rule");
  }
  for (int it = 0; it < 40; ++it) {
    const int f = front(rng);
    ProjectionMatrix p = detail::front_sample(64, 32, f, 0.0);
    ProjectionMatrix q = detail::front_sample(64, 32, f, angle(rng));
    require(op_norm(p.entries() - q.entries()) < 1.0, "rotation pairs must keep gap below one");
    require(essential_codimension(p, q) == 0, "gap below one must force zero codimension");
  }
  for (int rk = 0; rk <= 5; ++rk) {
    ProjectionMatrix p = detail::front_sample(64, 32, 20, 0.0);
    ProjectionMatrix q = detail::front_sample(64, 32, 20 - rk, 0.0);
    require(essential_codimension(p, q) == rk,
            "nested codimension must equal the rank of the difference");
  }
}

inline void truncation_stability() {
  std::mt19937 rng(59);
  std::uniform_int_distribution<int> front(4, 28);
  std::uniform_real_distribution<double> angle(0.0, 1.2);
  for (int it = 0; it < 30; ++it) {
    ProjectionMatrix p = detail::front_sample(80, 32, front(rng), angle(rng));
    ProjectionMatrix q = detail::front_sample(80, 32, front(rng), angle(rng));
    const long long narrow = essential_codimension(p, q);
    ProjectionMatrix pw(p.op.with_window(40));
    ProjectionMatrix qw(q.op.with_window(40));
    require(essential_codimension(pw, qw) == narrow,
            "codimension must be invariant under truncation growth");
  }
}

inline void transport_continuity() {
  FamilySpec spec;
  spec.family = "rotation";
  spec.amplitudes = {0.8};
  InstantiatedFamily fam = instantiate(spec, BaseSpace(SpaceKind::Interval, {}));
  const ProjectionPath& path = fam.lifting.paths[0];
  for (std::size_t j = 1; j < path.samples.size(); ++j) {
    TruncatedOperator u = transport_unitary(path.samples[j - 1], path.samples[j]);
    require(op_norm(u.entries.transpose() * u.entries -
                    Eigen::MatrixXd::Identity(u.dim, u.dim)) < 1e-8,
            "transport must be orthogonal");
    require(op_norm(u.entries * path.samples[j - 1].entries() * u.entries.transpose() -
                    path.samples[j].entries()) < 1e-6,
            "transport must conjugate consecutive projections");
  }
}

inline void catalog_oracle() {
  std::vector<std::pair<FamilySpec, BaseSpace>> cases;
  FamilySpec f1;
  f1.family = "front";
  f1.fronts = {10, 13};
  cases.emplace_back(f1, BaseSpace(SpaceKind::Interval, {0.5}));
  FamilySpec f2;
  f2.family = "rotation";
  f2.amplitudes = {0.5, 0.7};
  cases.emplace_back(f2, BaseSpace(SpaceKind::Line, {0.0}));
  FamilySpec f3;
  f3.family = "winding";
  f3.winding = 2;
  cases.emplace_back(f3, BaseSpace(SpaceKind::Circle, {0.5}));
  FamilySpec f4;
  f4.family = "composite";
  f4.fronts = {12, 14, 11};
  f4.amplitudes = {0.4, 0.6, 0.3};
  cases.emplace_back(f4, BaseSpace(SpaceKind::Line, {-1.0, 1.0}));
  for (const auto& [spec, space] : cases) {
    InstantiatedFamily fam = instantiate(spec, space);
    JumpData measured = jump_classes(fam.lifting);
    require(measured.jumps == fam.declared.jumps,
            "declared jump data must match the measured classes");
    if (space.has_wrap())
      require(measured.wrap == fam.declared.wrap,
              "declared wrap class must match the measured class");
  }
}

inline void corona_classes() {
  FamilySpec spec;
  spec.family = "front";
  spec.fronts = {10, 13};
  InstantiatedFamily fam = instantiate(spec, BaseSpace(SpaceKind::Interval, {0.5}));
  require(same_corona_class(as_section(fam.lifting), as_section(fam.lifting)),
          "a lifting must share its own corona class");
  FamilySpec c10, c11;
  c10.family = "front";
  c10.fronts = {10};
  c11.family = "front";
  c11.fronts = {11};
  BaseSpace interval(SpaceKind::Interval, {});
  BaseSpace line(SpaceKind::Line, {0.0});
  require(same_corona_class(as_section(instantiate(c10, interval).lifting),
                            as_section(instantiate(c11, interval).lifting)),
          "window-supported perturbations must not change the corona class");
  FamilySpec l10, l11;
  l10.family = "front";
  l10.fronts = {10, 10};
  l11.family = "front";
  l11.fronts = {11, 11};
  require(!same_corona_class(as_section(instantiate(l10, line).lifting),
                             as_section(instantiate(l11, line).lifting)),
          "differences that persist at infinity must split corona classes");
}

inline void smoothing_laws() {
  FamilySpec spec;
  spec.family = "front";
  spec.fronts = {10, 14};
  InstantiatedFamily fam = instantiate(spec, BaseSpace(SpaceKind::Interval, {0.5}));
  SectionData g = smooth_representative(fam.lifting);
  const Eigen::MatrixXd jump =
      g.paths[1].samples.front().entries - g.paths[0].samples.back().entries;
  require(op_norm(jump) <= 1e-10, "smoothed sections must be continuous at partition points");
  require(same_corona_class(as_section(fam.lifting), g),
          "smoothing must preserve the corona class");
  SectionData gg = smooth_representative(g);
  double worst = 0;
  for (std::size_t i = 0; i < g.paths.size(); ++i)
    for (std::size_t j = 0; j < g.paths[i].samples.size(); ++j)
      worst = std::max(worst, op_norm(gg.paths[i].samples[j].entries -
                                      g.paths[i].samples[j].entries));
  require(worst <= 1e-12, "smoothing must be idempotent");
}

inline void normalization_laws() {
  FamilySpec spec;
  spec.family = "front";
  spec.fronts = {10, 12};
  InstantiatedFamily fam = instantiate(spec, BaseSpace(SpaceKind::Interval, {0.5}));
  JumpData targets = JumpData::over_integers({0});
  LocalLifting norm = normalize_jumps(fam.lifting, targets);
  require(jump_classes(norm).jumps == targets.jumps,
          "normalization must reach the target jump classes");
  require(same_corona_class(as_section(fam.lifting), as_section(norm)),
          "normalization must preserve the corona class");
}

inline void witness_roundtrip() {
  FamilySpec p1, q1;
  p1.family = "front";
  p1.fronts = {10, 12};
  q1.family = "front";
  q1.fronts = {10, 10};
  BaseSpace interval(SpaceKind::Interval, {0.5});
  DeformOutcome d1 = deform_pipeline(instantiate(p1, interval).lifting,
                                     instantiate(q1, interval).lifting);
  FamilySpec p2, q2;
  p2.family = "front";
  p2.fronts = {10, 9, 10};
  q2.family = "composite";
  q2.fronts = {10, 12, 10};
  q2.amplitudes = {0.5, 0.4, 0.6};
  BaseSpace line(SpaceKind::Line, {-1.0, 1.0});
  DeformOutcome d2 =
      deform_pipeline(instantiate(p2, line).lifting, instantiate(q2, line).lifting);
  for (const DeformOutcome* d : {&d1, &d2}) {
    require(d->witness.has_value(), "matched pairs must produce a witness");
    const ResidualReport& r = d->witness->report;
    require(r.max_domain_residual <= 1e-6 && r.max_codomain_residual <= 1e-6,
            "witness residuals must stay within tolerance");
    const auto& t = *d->certificate.witness_t;
    bool match = t.size() == d->measured_t.size();
    for (std::size_t i = 0; match && i < t.size(); ++i)
      match = t[i].free_part()[0] == d->measured_t[i];
    require(match, "measured index data must reproduce the certificate witness");
  }
}

}  // namespace selftest

inline std::vector<SelftestSuite> standard_selftest_suites() {
  return {
      {"group-arithmetic", selftest::group_arithmetic},
      {"telescoping-solver", selftest::telescoping_solver},
      {"classification-implications", selftest::classification_implications},
      {"topology-laws", selftest::topology_laws},
      {"certificate-verification", selftest::certificate_verification},
      {"window-discipline", selftest::window_discipline},
      {"codimension-rules", selftest::codimension_rules},
      {"truncation-stability", selftest::truncation_stability},
      {"transport-continuity", selftest::transport_continuity},
      {"catalog-oracle", selftest::catalog_oracle},
      {"corona-classes", selftest::corona_classes},
      {"smoothing-laws", selftest::smoothing_laws},
      {"normalization-laws", selftest::normalization_laws},
      {"witness-roundtrip", selftest::witness_roundtrip},
  };
}

inline std::vector<SelftestResult> run_selftest_suites(const std::vector<SelftestSuite>& suites) {
  std::vector<SelftestResult> out;
  out.reserve(suites.size());
  for (const auto& s : suites) {
    SelftestResult r;
    r.name = s.name;
    try {
      s.run();
      r.passed = true;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace corona
