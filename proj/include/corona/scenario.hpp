#pragma once

// Scenario files and structured reports for the command-line driver. A
// scenario describes one classification problem in exactly one of two modes:
// symbolic (two abstract jump-data blocks) or numeric (two catalog family
// specs instantiated as sampled liftings). Reports use insertion-ordered
// JSON so identical inputs produce byte-identical output, except for the
// optional timestamp field appended last.

#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corona/catalog.hpp"
#include "corona/classify.hpp"
#include "corona/deform.hpp"
#include "corona/lifting.hpp"
#include "corona/space.hpp"

namespace corona {

using Json = nlohmann::ordered_json;

// Flips one tail entry of one subinterval path after instantiation. Breaks
// window support across the adjacent partition points on purpose; analyze
// uses it to demonstrate the located window-violation diagnostics.
struct TailOverride {
  std::string lifting;  // "p" or "q"
  int path = 0;
  int slot = 0;      // index into the tail vector
  double value = 0;  // 0 or 1
};

struct Scenario {
  GroupSpec group;
  BaseSpace space{SpaceKind::Interval, {}};
  std::optional<std::pair<JumpData, JumpData>> symbolic;
  std::optional<std::pair<FamilySpec, FamilySpec>> numeric;
  AlgebraCapabilities capabilities = AlgebraCapabilities::bk_preset();
  std::optional<CircleMode> circle_mode;  // file preference; a CLI flag wins
  double tolerance = 1e-8;
  std::optional<int> dim;  // truncation override for both numeric families
  std::optional<TailOverride> tail_override;

  bool is_symbolic() const { return symbolic.has_value(); }
};

namespace detail {

inline const Json& member(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw std::invalid_argument(std::string("scenario: missing field '") + key + "'");
  return j.at(key);
}

inline long long as_integer(const Json& j, const char* what) {
  if (!j.is_number_integer())
    throw std::invalid_argument(std::string("scenario: ") + what + " must be an integer");
  return j.get<long long>();
}

inline std::vector<long long> as_integer_list(const Json& j, const char* what) {
  if (!j.is_array())
    throw std::invalid_argument(std::string("scenario: ") + what + " must be a list");
  std::vector<long long> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(as_integer(v, what));
  return out;
}

}  // namespace detail

inline Relation relation_from_string(const std::string& s) {
  if (s == "mvn") return Relation::MvN;
  if (s == "unitary") return Relation::Unitary;
  if (s == "homotopy") return Relation::Homotopy;
  throw std::invalid_argument("unknown relation '" + s + "' (mvn|unitary|homotopy)");
}

inline CircleMode circle_mode_from_string(const std::string& s) {
  if (s == "strict") return CircleMode::StrictCyclic;
  if (s == "paper") return CircleMode::PaperRemark;
  throw std::invalid_argument("unknown circle mode '" + s + "' (strict|paper)");
}

inline Json group_to_json(const GroupSpec& g) {
  Json j;
  j["free_rank"] = g.free_rank;
  j["torsion"] = g.torsion;
  return j;
}

inline GroupSpec group_from_json(const Json& j) {
  const int rank = static_cast<int>(detail::as_integer(detail::member(j, "free_rank"), "free_rank"));
  return GroupSpec(rank, detail::as_integer_list(detail::member(j, "torsion"), "torsion"));
}

inline Json element_to_json(const GroupElement& e) {
  Json j;
  j["free"] = e.free_part();
  j["torsion"] = e.torsion_part();
  return j;
}

// Accepts either the full form {"free": [...], "torsion": [...]} or a bare
// integer, which embeds via the first summand.
inline GroupElement element_from_json(const GroupSpec& g, const Json& j) {
  if (j.is_number_integer()) return GroupElement::from_integer(g, j.get<long long>());
  if (!j.is_object())
    throw std::invalid_argument("scenario: group element must be an integer or an object");
  return GroupElement(g, detail::as_integer_list(detail::member(j, "free"), "free"),
                      detail::as_integer_list(detail::member(j, "torsion"), "torsion"));
}

inline Json jump_data_to_json(const JumpData& d) {
  Json j;
  j["jumps"] = Json::array();
  for (const auto& k : d.jumps) j["jumps"].push_back(element_to_json(k));
  if (d.wrap) j["wrap"] = element_to_json(*d.wrap);
  return j;
}

inline JumpData jump_data_from_json(const GroupSpec& g, const Json& j) {
  const Json& ks = detail::member(j, "jumps");
  if (!ks.is_array()) throw std::invalid_argument("scenario: 'jumps' must be a list");
  std::vector<GroupElement> jumps;
  jumps.reserve(ks.size());
  for (const auto& k : ks) jumps.push_back(element_from_json(g, k));
  std::optional<GroupElement> wrap;
  if (j.contains("wrap")) wrap = element_from_json(g, j.at("wrap"));
  return JumpData(g, std::move(jumps), std::move(wrap));
}

inline Json space_to_json(const BaseSpace& s) {
  Json j;
  j["kind"] = to_string(s.kind());
  j["partition"] = s.partition();
  return j;
}

inline BaseSpace space_from_json(const Json& j) {
  const Json& kind = detail::member(j, "kind");
  if (!kind.is_string()) throw std::invalid_argument("scenario: space kind must be a string");
  const Json& part = detail::member(j, "partition");
  if (!part.is_array()) throw std::invalid_argument("scenario: partition must be a list");
  std::vector<double> xs;
  xs.reserve(part.size());
  for (const auto& v : part) {
    if (!v.is_number()) throw std::invalid_argument("scenario: partition points must be numbers");
    xs.push_back(v.get<double>());
  }
  return BaseSpace(space_kind_from_string(kind.get<std::string>()), std::move(xs));
}

inline Json family_to_json(const FamilySpec& f) {
  Json j;
  j["family"] = f.family;
  j["fronts"] = f.fronts;
  j["amplitudes"] = f.amplitudes;
  j["winding"] = f.winding;
  j["base_front"] = f.base_front;
  j["dim"] = f.dim;
  j["window"] = f.window;
  j["samples_per_subinterval"] = f.samples_per_subinterval;
  return j;
}

inline FamilySpec family_from_json(const Json& j) {
  FamilySpec f;
  const Json& id = detail::member(j, "family");
  if (!id.is_string()) throw std::invalid_argument("scenario: family id must be a string");
  f.family = id.get<std::string>();
  if (j.contains("fronts")) f.fronts = detail::as_integer_list(j.at("fronts"), "fronts");
  if (j.contains("amplitudes")) {
    if (!j.at("amplitudes").is_array())
      throw std::invalid_argument("scenario: amplitudes must be a list");
    for (const auto& v : j.at("amplitudes")) {
      if (!v.is_number()) throw std::invalid_argument("scenario: amplitudes must be numbers");
      f.amplitudes.push_back(v.get<double>());
    }
  }
  if (j.contains("winding")) f.winding = detail::as_integer(j.at("winding"), "winding");
  if (j.contains("base_front")) f.base_front = detail::as_integer(j.at("base_front"), "base_front");
  if (j.contains("dim")) f.dim = static_cast<int>(detail::as_integer(j.at("dim"), "dim"));
  if (j.contains("window")) f.window = static_cast<int>(detail::as_integer(j.at("window"), "window"));
  if (j.contains("samples_per_subinterval"))
    f.samples_per_subinterval =
        static_cast<int>(detail::as_integer(j.at("samples_per_subinterval"), "samples"));
  return f;
}

inline Json capabilities_to_json(const AlgebraCapabilities& c) {
  Json j;
  j["good_index_theory"] = c.good_index_theory;
  j["homogeneity_assumed"] = c.homogeneity_assumed;
  j["halving_assumed"] = c.halving_assumed;
  return j;
}

// Either the preset string "BK" or an explicit flag object. Absent flags
// default to false, matching the library's conservative default.
inline AlgebraCapabilities capabilities_from_json(const Json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "BK") return AlgebraCapabilities::bk_preset();
    throw std::invalid_argument("scenario: unknown capabilities preset '" +
                                j.get<std::string>() + "'");
  }
  if (!j.is_object())
    throw std::invalid_argument("scenario: capabilities must be \"BK\" or an object");
  AlgebraCapabilities c;
  if (j.contains("good_index_theory")) c.good_index_theory = j.at("good_index_theory").get<bool>();
  if (j.contains("homogeneity_assumed"))
    c.homogeneity_assumed = j.at("homogeneity_assumed").get<bool>();
  if (j.contains("halving_assumed")) c.halving_assumed = j.at("halving_assumed").get<bool>();
  return c;
}

inline Scenario scenario_from_json(const Json& j) {
  Scenario sc;
  sc.group = group_from_json(detail::member(j, "group"));
  sc.space = space_from_json(detail::member(j, "space"));
  const bool has_symbolic = j.contains("symbolic");
  const bool has_numeric = j.contains("numeric");
  if (has_symbolic == has_numeric)
    throw std::invalid_argument(
        "scenario: exactly one of 'symbolic' and 'numeric' must be present");
  if (has_symbolic) {
    const Json& m = j.at("symbolic");
    JumpData p = jump_data_from_json(sc.group, detail::member(m, "p"));
    JumpData q = jump_data_from_json(sc.group, detail::member(m, "q"));
    detail::check_jump_shapes(p, q, sc.space);
    sc.symbolic = std::make_pair(std::move(p), std::move(q));
  } else {
    const Json& m = j.at("numeric");
    if (sc.group != GroupSpec::integers())
      throw std::invalid_argument("scenario: numeric mode requires the integer group");
    sc.numeric = std::make_pair(family_from_json(detail::member(m, "p")),
                                family_from_json(detail::member(m, "q")));
  }
  if (j.contains("capabilities")) sc.capabilities = capabilities_from_json(j.at("capabilities"));
  if (j.contains("circle_mode")) {
    if (!j.at("circle_mode").is_string())
      throw std::invalid_argument("scenario: circle_mode must be a string");
    sc.circle_mode = circle_mode_from_string(j.at("circle_mode").get<std::string>());
  }
  if (j.contains("tolerance")) {
    if (!j.at("tolerance").is_number())
      throw std::invalid_argument("scenario: tolerance must be a number");
    sc.tolerance = j.at("tolerance").get<double>();
    if (sc.tolerance <= 0) throw std::invalid_argument("scenario: tolerance must be positive");
  }
  if (j.contains("dim")) sc.dim = static_cast<int>(detail::as_integer(j.at("dim"), "dim"));
  if (j.contains("tail_override")) {
    const Json& t = j.at("tail_override");
    TailOverride o;
    const Json& which = detail::member(t, "lifting");
    if (!which.is_string() || (which.get<std::string>() != "p" && which.get<std::string>() != "q"))
      throw std::invalid_argument("scenario: tail_override.lifting must be \"p\" or \"q\"");
    o.lifting = which.get<std::string>();
    o.path = static_cast<int>(detail::as_integer(detail::member(t, "path"), "path"));
    o.slot = static_cast<int>(detail::as_integer(detail::member(t, "slot"), "slot"));
    o.value = static_cast<double>(detail::as_integer(detail::member(t, "value"), "value"));
    if (o.value != 0.0 && o.value != 1.0)
      throw std::invalid_argument("scenario: tail_override.value must be 0 or 1");
    sc.tail_override = o;
  }
  return sc;
}

inline Json scenario_to_json(const Scenario& sc) {
  Json j;
  j["group"] = group_to_json(sc.group);
  j["space"] = space_to_json(sc.space);
  if (sc.symbolic) {
    j["symbolic"]["p"] = jump_data_to_json(sc.symbolic->first);
    j["symbolic"]["q"] = jump_data_to_json(sc.symbolic->second);
  }
  if (sc.numeric) {
    j["numeric"]["p"] = family_to_json(sc.numeric->first);
    j["numeric"]["q"] = family_to_json(sc.numeric->second);
  }
  j["capabilities"] = capabilities_to_json(sc.capabilities);
  if (sc.circle_mode) j["circle_mode"] = to_string(*sc.circle_mode);
  j["tolerance"] = sc.tolerance;
  if (sc.dim) j["dim"] = *sc.dim;
  if (sc.tail_override) {
    Json t;
    t["lifting"] = sc.tail_override->lifting;
    t["path"] = sc.tail_override->path;
    t["slot"] = sc.tail_override->slot;
    t["value"] = static_cast<long long>(sc.tail_override->value);
    j["tail_override"] = t;
  }
  return j;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("scenario: cannot open '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw std::invalid_argument("scenario: '" + path + "' is not valid JSON: " + e.what());
  }
  return scenario_from_json(j);
}

inline Json certificate_to_json(const EquivalenceCertificate& cert) {
  Json j;
  j["relation"] = to_string(cert.relation);
  j["verdict"] = to_string(cert.verdict);
  if (cert.witness_t) {
    j["t"] = Json::array();
    for (const auto& e : *cert.witness_t) j["t"].push_back(element_to_json(e));
  } else {
    j["t"] = nullptr;
  }
  if (cert.witness_s) {
    j["s"] = Json::array();
    for (const auto& e : *cert.witness_s) j["s"].push_back(element_to_json(e));
  } else {
    j["s"] = nullptr;
  }
  if (cert.refutation)
    j["refutation"] = *cert.refutation;
  else
    j["refutation"] = nullptr;
  return j;
}

// ---------------------------------------------------------------------------
// Numeric-mode instantiation.

struct NumericInstance {
  LocalLifting p;
  LocalLifting q;
  JumpData declared_p;
  JumpData declared_q;
};

namespace detail {

// Adjacent subinterval paths must agree exactly on the tail pattern, else the
// mismatch at their shared partition point is not window-supported.
inline void require_window_support(const BaseSpace& space,
                                   const std::vector<ProjectionPath>& paths) {
  for (std::size_t i = 1; i < paths.size(); ++i) {
    const Eigen::VectorXd& a = paths[i - 1].samples[0].tail();
    const Eigen::VectorXd& b = paths[i].samples[0].tail();
    for (int s = 0; s < a.size(); ++s) {
      if (a(s) != b(s)) {
        std::ostringstream os;
        os << "window violation at partition point x=" << space.partition()[i - 1]
           << ": difference is not window-supported (tail slot " << s << " differs)";
        throw std::invalid_argument(os.str());
      }
    }
  }
  if (space.has_wrap() && !paths.empty()) {
    const Eigen::VectorXd& a = paths.back().samples[0].tail();
    const Eigen::VectorXd& b = paths.front().samples[0].tail();
    for (int s = 0; s < a.size(); ++s) {
      if (a(s) != b(s)) {
        std::ostringstream os;
        os << "window violation at the circle base point: difference is not "
              "window-supported (tail slot " << s << " differs)";
        throw std::invalid_argument(os.str());
      }
    }
  }
}

inline LocalLifting apply_tail_override(const LocalLifting& l, const TailOverride& o) {
  if (o.path < 0 || o.path >= static_cast<int>(l.paths.size()))
    throw std::invalid_argument("scenario: tail_override.path out of range");
  const ProjectionPath& target = l.paths[o.path];
  const int w = target.samples[0].window();
  if (o.slot < 0 || o.slot >= target.samples[0].dim() - w)
    throw std::invalid_argument("scenario: tail_override.slot out of range");
  std::vector<ProjectionMatrix> samples;
  samples.reserve(target.samples.size());
  for (const auto& p : target.samples) {
    Eigen::MatrixXd m = p.entries();
    Eigen::VectorXd t = p.tail();
    m(w + o.slot, w + o.slot) = o.value;
    t(o.slot) = o.value;
    samples.emplace_back(TruncatedOperator(p.dim(), w, std::move(m), std::move(t)));
  }
  std::vector<ProjectionPath> paths = l.paths;
  paths[o.path] = ProjectionPath(target.sub, target.grid, std::move(samples));
  require_window_support(l.space, paths);
  return LocalLifting(l.space, std::move(paths));
}

}  // namespace detail

// Builds both liftings of a numeric scenario, honoring the dim override (a
// command-line value beats the file's). The tail override, when present,
// runs last so its window violation surfaces with a located diagnostic.
inline NumericInstance instantiate_scenario(const Scenario& sc,
                                            std::optional<int> dim_flag = std::nullopt) {
  if (!sc.numeric) throw std::invalid_argument("scenario: numeric mode required");
  FamilySpec fp = sc.numeric->first;
  FamilySpec fq = sc.numeric->second;
  if (sc.dim) fp.dim = fq.dim = *sc.dim;
  if (dim_flag) fp.dim = fq.dim = *dim_flag;
  InstantiatedFamily ip = instantiate(fp, sc.space);
  InstantiatedFamily iq = instantiate(fq, sc.space);
  NumericInstance out{std::move(ip.lifting), std::move(iq.lifting), std::move(ip.declared),
                      std::move(iq.declared)};
  if (sc.tail_override) {
    if (sc.tail_override->lifting == "p")
      out.p = detail::apply_tail_override(out.p, *sc.tail_override);
    else
      out.q = detail::apply_tail_override(out.q, *sc.tail_override);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports.

struct PointReport {
  double x = 0;
  long long jump = 0;       // measured class
  double window_norm = 0;   // operator norm of the mismatch inside the window
  double outside_window = 0;  // largest entry of the mismatch outside it
};

struct LiftingReport {
  std::string name;
  JumpData declared;
  JumpData measured;
  std::vector<PointReport> points;
  std::optional<PointReport> wrap;
};

namespace detail {

inline PointReport mismatch_report(double x, long long jump, const ProjectionMatrix& right,
                                   const ProjectionMatrix& left) {
  PointReport r;
  r.x = x;
  r.jump = jump;
  const Eigen::MatrixXd d = right.entries() - left.entries();
  const int w = right.window();
  r.window_norm = op_norm(d.block(0, 0, w, w));
  double worst = 0;
  for (int i = 0; i < d.rows(); ++i)
    for (int j = 0; j < d.cols(); ++j)
      if (i >= w || j >= w) worst = std::max(worst, std::abs(d(i, j)));
  r.outside_window = worst;
  return r;
}

}  // namespace detail

inline LiftingReport analyze_lifting(std::string name, const LocalLifting& l,
                                     const JumpData& declared) {
  LiftingReport r;
  r.name = std::move(name);
  r.declared = declared;
  r.measured = jump_classes(l);
  const int n = l.space.partition_size();
  for (int i = 1; i <= n; ++i)
    r.points.push_back(detail::mismatch_report(l.space.partition()[i - 1],
                                               r.measured.jumps[i - 1].free_part()[0],
                                               l.paths[i].samples.front(),
                                               l.paths[i - 1].samples.back()));
  if (l.space.has_wrap())
    r.wrap = detail::mismatch_report(0.0, r.measured.wrap->free_part()[0],
                                     l.paths.front().samples.front(),
                                     l.paths.back().samples.back());
  return r;
}

inline Json lifting_report_to_json(const LiftingReport& r) {
  Json j;
  j["name"] = r.name;
  j["declared"] = jump_data_to_json(r.declared);
  j["measured"] = jump_data_to_json(r.measured);
  j["points"] = Json::array();
  for (const auto& p : r.points) {
    Json e;
    e["x"] = p.x;
    e["jump"] = p.jump;
    e["window_norm"] = p.window_norm;
    e["outside_window"] = p.outside_window;
    j["points"].push_back(e);
  }
  if (r.wrap) {
    Json e;
    e["jump"] = r.wrap->jump;
    e["window_norm"] = r.wrap->window_norm;
    e["outside_window"] = r.wrap->outside_window;
    j["wrap"] = e;
  } else {
    j["wrap"] = nullptr;
  }
  return j;
}

inline Json residual_report_to_json(const ResidualReport& r) {
  Json j;
  j["max_domain_residual"] = r.max_domain_residual;
  j["max_codomain_residual"] = r.max_codomain_residual;
  j["partition_mismatch"] = r.partition_mismatch;
  if (r.wrap_mismatch)
    j["wrap_mismatch"] = *r.wrap_mismatch;
  else
    j["wrap_mismatch"] = nullptr;
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

inline void write_report(Json j, const std::string& path, bool with_timestamp) {
  if (with_timestamp) j["timestamp"] = utc_timestamp();
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write report to '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace corona
