#pragma once

// Decision procedures for the three equivalence relations on jump data, each
// returning a certificate that is re-verifiable from the inputs alone.

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "corona/kgroup.hpp"
#include "corona/space.hpp"

namespace corona {

enum class Relation { MvN, Unitary, Homotopy };
enum class Verdict { Equivalent, NotEquivalent, Undetermined };
enum class CircleMode { StrictCyclic, PaperRemark };

inline std::string to_string(Relation r) {
  switch (r) {
    case Relation::MvN: return "mvn";
    case Relation::Unitary: return "unitary";
    case Relation::Homotopy: return "homotopy";
  }
  throw std::logic_error("unreachable relation");
}

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Equivalent: return "Equivalent";
    case Verdict::NotEquivalent: return "NotEquivalent";
    case Verdict::Undetermined: return "Undetermined";
  }
  throw std::logic_error("unreachable verdict");
}

inline std::string to_string(CircleMode m) {
  return m == CircleMode::StrictCyclic ? "strict" : "paper";
}

struct JumpData {
  GroupSpec spec;
  std::vector<GroupElement> jumps;        // k_1 .. k_n
  std::optional<GroupElement> wrap;       // k_0, present exactly for Circle

  JumpData() = default;
  JumpData(GroupSpec s, std::vector<GroupElement> ks,
           std::optional<GroupElement> w = std::nullopt)
      : spec(std::move(s)), jumps(std::move(ks)), wrap(std::move(w)) {
    for (const auto& k : jumps)
      if (k.spec() != spec) throw std::invalid_argument("JumpData: jump spec mismatch");
    if (wrap && wrap->spec() != spec)
      throw std::invalid_argument("JumpData: wrap spec mismatch");
  }

  static JumpData over_integers(const std::vector<long long>& ks,
                                std::optional<long long> wrap_value = std::nullopt) {
    GroupSpec z = GroupSpec::integers();
    std::vector<GroupElement> js;
    js.reserve(ks.size());
    for (long long v : ks) js.push_back(GroupElement::from_integer(z, v));
    std::optional<GroupElement> w;
    if (wrap_value) w = GroupElement::from_integer(z, *wrap_value);
    return JumpData(z, std::move(js), std::move(w));
  }
};

struct AlgebraCapabilities {
  bool good_index_theory = false;
  bool homogeneity_assumed = false;
  bool halving_assumed = false;

  // Fiber algebra K: stable rank one gives good index theory, and homogeneity
  // and halving hold for the projections this artifact constructs.
  static AlgebraCapabilities bk_preset() { return {true, true, true}; }
};

struct EquivalenceCertificate {
  Relation relation = Relation::MvN;
  Verdict verdict = Verdict::Undetermined;
  std::optional<std::vector<GroupElement>> witness_t;
  std::optional<std::vector<GroupElement>> witness_s;
  std::optional<std::string> refutation;
  CircleMode circle_mode = CircleMode::StrictCyclic;  // mode the verdict was computed under
};

namespace detail {

inline void check_jump_shapes(const JumpData& jp, const JumpData& jq, const BaseSpace& s) {
  if (jp.spec != jq.spec) throw std::invalid_argument("jump data specs differ");
  if (jp.jumps.size() != jq.jumps.size())
    throw std::invalid_argument("jump data lengths differ");
  if (static_cast<int>(jp.jumps.size()) != s.partition_size())
    throw std::invalid_argument("jump data length does not match partition");
  const bool need_wrap = s.has_wrap();
  if (jp.wrap.has_value() != need_wrap || jq.wrap.has_value() != need_wrap)
    throw std::invalid_argument(need_wrap ? "circle jump data requires a wrap jump"
                                          : "wrap jump only allowed on the circle");
}

inline std::vector<GroupElement> jump_deltas(const JumpData& jp, const JumpData& jq) {
  std::vector<GroupElement> d;
  d.reserve(jp.jumps.size());
  for (std::size_t i = 0; i < jp.jumps.size(); ++i) d.push_back(sub(jp.jumps[i], jq.jumps[i]));
  return d;
}

inline TelescopeResult solve_for_t(const JumpData& jp, const JumpData& jq, const BaseSpace& s,
                                   CircleMode mode) {
  std::vector<GroupElement> deltas = jump_deltas(jp, jq);
  std::optional<GroupElement> wrap;
  std::set<int> forced;
  if (s.has_wrap()) {
    if (mode == CircleMode::StrictCyclic) wrap = sub(*jp.wrap, *jq.wrap);
  } else {
    forced = s.forced_zero_indices();
  }
  return solve_telescoping(jp.spec, deltas, forced, wrap);
}

}  // namespace detail

inline EquivalenceCertificate decide_mvn(const JumpData& jp, const JumpData& jq,
                                         const BaseSpace& s,
                                         CircleMode mode = CircleMode::StrictCyclic) {
  detail::check_jump_shapes(jp, jq, s);
  EquivalenceCertificate cert;
  cert.relation = Relation::MvN;
  cert.circle_mode = mode;
  TelescopeResult r = detail::solve_for_t(jp, jq, s, mode);
  if (r.satisfiable()) {
    cert.verdict = Verdict::Equivalent;
    cert.witness_t = std::move(r.witness);
  } else {
    cert.verdict = Verdict::NotEquivalent;
    cert.refutation = std::move(r.refutation);
  }
  return cert;
}

inline EquivalenceCertificate decide_unitary(const JumpData& jp, const JumpData& jq,
                                             const BaseSpace& s, const AlgebraCapabilities& caps,
                                             CircleMode mode = CircleMode::StrictCyclic) {
  if (!caps.halving_assumed)
    throw std::invalid_argument("decide_unitary: halving hypothesis not met");
  detail::check_jump_shapes(jp, jq, s);
  EquivalenceCertificate cert;
  cert.relation = Relation::Unitary;
  cert.circle_mode = mode;
  TelescopeResult r = detail::solve_for_t(jp, jq, s, mode);
  if (!r.satisfiable()) {
    cert.verdict = Verdict::NotEquivalent;
    cert.refutation = std::move(r.refutation);
    return cert;
  }
  // s_i := c - t_i with c = 0 keeps witnesses canonical; every constraint on s
  // (reversed differences, forced zeros, constant s_i + t_i) follows from t's.
  std::vector<GroupElement> t = *r.witness;
  std::vector<GroupElement> sw;
  sw.reserve(t.size());
  for (const auto& ti : t) sw.push_back(neg(ti));
  cert.verdict = Verdict::Equivalent;
  cert.witness_t = std::move(t);
  cert.witness_s = std::move(sw);
  return cert;
}

inline EquivalenceCertificate decide_homotopy(const JumpData& jp, const JumpData& jq,
                                              const BaseSpace& s, const AlgebraCapabilities& caps,
                                              CircleMode mode = CircleMode::StrictCyclic) {
  detail::check_jump_shapes(jp, jq, s);
  EquivalenceCertificate cert;
  cert.relation = Relation::Homotopy;
  cert.circle_mode = mode;
  if (!caps.good_index_theory) {
    cert.verdict = Verdict::Undetermined;
    cert.refutation = "good index theory not available: criterion proven only under that hypothesis";
    return cert;
  }
  TelescopeResult r = detail::solve_for_t(jp, jq, s, mode);
  if (!r.satisfiable()) {
    cert.verdict = Verdict::NotEquivalent;
    cert.refutation = std::move(r.refutation);
    return cert;
  }
  std::vector<GroupElement> t = *r.witness;
  std::vector<GroupElement> sw;
  sw.reserve(t.size());
  for (const auto& ti : t) sw.push_back(neg(ti));  // s_i + t_i = 0 exactly
  cert.verdict = Verdict::Equivalent;
  cert.witness_t = std::move(t);
  cert.witness_s = std::move(sw);
  return cert;
}

// Recheck of an Equivalent certificate against the raw inputs. Any defect
// (shape, tampered witness, missing data) yields false rather than a throw.
inline bool verify_certificate(const EquivalenceCertificate& cert, const JumpData& jp,
                               const JumpData& jq, const BaseSpace& s) {
  if (cert.verdict != Verdict::Equivalent) return false;
  try {
    detail::check_jump_shapes(jp, jq, s);
  } catch (const std::invalid_argument&) {
    return false;
  }
  const int n = s.partition_size();
  if (!cert.witness_t) return false;
  const std::vector<GroupElement>& t = *cert.witness_t;
  if (static_cast<int>(t.size()) != n + 1) return false;
  for (const auto& ti : t)
    if (ti.spec() != jp.spec) return false;

  std::vector<GroupElement> deltas = detail::jump_deltas(jp, jq);
  for (int i = 1; i <= n; ++i)
    if (sub(t[i], t[i - 1]) != deltas[i - 1]) return false;
  if (!s.has_wrap()) {
    for (int i : s.forced_zero_indices())
      if (!t[i].is_zero()) return false;
  } else if (cert.circle_mode == CircleMode::StrictCyclic) {
    if (sub(t[0], t[n]) != sub(*jp.wrap, *jq.wrap)) return false;
  }

  if (cert.relation == Relation::MvN) return true;

  if (!cert.witness_s) return false;
  const std::vector<GroupElement>& sw = *cert.witness_s;
  if (sw.size() != t.size()) return false;
  for (const auto& si : sw)
    if (si.spec() != jp.spec) return false;
  for (int i = 1; i <= n; ++i)
    if (sub(sw[i], sw[i - 1]) != neg(deltas[i - 1])) return false;
  if (!s.has_wrap()) {
    for (int i : s.forced_zero_indices())
      if (!sw[i].is_zero()) return false;
  } else if (cert.circle_mode == CircleMode::StrictCyclic) {
    if (sub(sw[0], sw[n]) != neg(sub(*jp.wrap, *jq.wrap))) return false;
  }
  // s_i + t_i must be constant; for homotopy that constant must be 0.
  GroupElement c = add(sw[0], t[0]);
  for (int i = 0; i <= n; ++i)
    if (add(sw[i], t[i]) != c) return false;
  if (cert.relation == Relation::Homotopy && !c.is_zero()) return false;
  return true;
}

}  // namespace corona
