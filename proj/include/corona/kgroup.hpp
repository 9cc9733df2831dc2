#pragma once

// Exact arithmetic in a finitely generated abelian group Z^r + Z/d1 + ... + Z/dk,
// and the telescoping-difference solver t_i - t_{i-1} = delta_i with endpoint
// constraints. All values are immutable; all operations are pure.

#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace corona {

struct GroupSpec {
  int free_rank = 0;
  std::vector<long long> torsion;  // invariant factors, each >= 2

  GroupSpec() = default;
  GroupSpec(int rank, std::vector<long long> orders)
      : free_rank(rank), torsion(std::move(orders)) {
    if (free_rank < 0) throw std::invalid_argument("GroupSpec: free_rank must be >= 0");
    for (long long d : torsion)
      if (d < 2) throw std::invalid_argument("GroupSpec: torsion orders must be >= 2");
  }

  static GroupSpec integers() { return GroupSpec(1, {}); }

  bool operator==(const GroupSpec& o) const {
    return free_rank == o.free_rank && torsion == o.torsion;
  }
  bool operator!=(const GroupSpec& o) const { return !(*this == o); }
};

class GroupElement {
 public:
  GroupElement() = default;
  GroupElement(GroupSpec spec, std::vector<long long> free_part,
               std::vector<long long> torsion_part)
      : spec_(std::move(spec)), free_(std::move(free_part)), torsion_(std::move(torsion_part)) {
    if (static_cast<int>(free_.size()) != spec_.free_rank)
      throw std::invalid_argument("GroupElement: free part length mismatch");
    if (torsion_.size() != spec_.torsion.size())
      throw std::invalid_argument("GroupElement: torsion part length mismatch");
    for (std::size_t j = 0; j < torsion_.size(); ++j) torsion_[j] = reduce(torsion_[j], spec_.torsion[j]);
  }

  static GroupElement zero(const GroupSpec& spec) {
    return GroupElement(spec, std::vector<long long>(spec.free_rank, 0),
                        std::vector<long long>(spec.torsion.size(), 0));
  }

  // Embeds an integer n as n * generator of the first summand. For the
  // rank-one spec modeling K_0(K) this is the canonical identification.
  static GroupElement from_integer(const GroupSpec& spec, long long n) {
    GroupElement e = zero(spec);
    if (spec.free_rank > 0)
      e.free_[0] = n;
    else if (!spec.torsion.empty())
      e.torsion_[0] = reduce(n, spec.torsion[0]);
    else if (n != 0)
      throw std::invalid_argument("GroupElement: nonzero integer in the trivial group");
    return e;
  }

  const GroupSpec& spec() const { return spec_; }
  const std::vector<long long>& free_part() const { return free_; }
  const std::vector<long long>& torsion_part() const { return torsion_; }

  bool is_zero() const {
    for (long long v : free_) if (v != 0) return false;
    for (long long v : torsion_) if (v != 0) return false;
    return true;
  }

  bool operator==(const GroupElement& o) const {
    return spec_ == o.spec_ && free_ == o.free_ && torsion_ == o.torsion_;
  }
  bool operator!=(const GroupElement& o) const { return !(*this == o); }

  std::string to_string() const {
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < spec_.free_rank; ++i) os << (i ? "," : "") << free_[i];
    if (!torsion_.empty()) {
      os << ";";
      for (std::size_t j = 0; j < torsion_.size(); ++j) os << (j ? "," : "") << torsion_[j];
    }
    os << ")";
    return os.str();
  }

 private:
  static long long reduce(long long v, long long d) {
    long long r = v % d;
    return r < 0 ? r + d : r;
  }

  GroupSpec spec_;
  std::vector<long long> free_;
  std::vector<long long> torsion_;
};

inline void require_same_spec(const GroupElement& a, const GroupElement& b) {
  if (a.spec() != b.spec()) throw std::invalid_argument("group spec mismatch");
}

inline GroupElement add(const GroupElement& a, const GroupElement& b) {
  require_same_spec(a, b);
  std::vector<long long> f = a.free_part();
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += b.free_part()[i];
  std::vector<long long> t = a.torsion_part();
  for (std::size_t j = 0; j < t.size(); ++j) t[j] += b.torsion_part()[j];
  return GroupElement(a.spec(), std::move(f), std::move(t));
}

inline GroupElement neg(const GroupElement& a) {
  std::vector<long long> f = a.free_part();
  for (auto& v : f) v = -v;
  std::vector<long long> t = a.torsion_part();
  for (auto& v : t) v = -v;
  return GroupElement(a.spec(), std::move(f), std::move(t));
}

inline GroupElement sub(const GroupElement& a, const GroupElement& b) { return add(a, neg(b)); }

// Result of the telescoping solve: either a witness t_0..t_n or a refutation
// naming the violated condition. Unsatisfiable is a value, not an error.
struct TelescopeResult {
  std::optional<std::vector<GroupElement>> witness;
  std::string refutation;

  bool satisfiable() const { return witness.has_value(); }
};

// Solves t_i - t_{i-1} = deltas[i-1] for i = 1..n with t_i = 0 on forced_zero,
// and, when wrap is present (cyclic case), additionally t_0 - t_n = *wrap.
// When t_0 is unconstrained it is set to 0, so witnesses are canonical.
inline TelescopeResult solve_telescoping(const GroupSpec& spec,
                                         const std::vector<GroupElement>& deltas,
                                         const std::set<int>& forced_zero,
                                         const std::optional<GroupElement>& wrap = std::nullopt) {
  const int n = static_cast<int>(deltas.size());
  for (const auto& d : deltas)
    if (d.spec() != spec) throw std::invalid_argument("solve_telescoping: delta spec mismatch");
  if (wrap && wrap->spec() != spec)
    throw std::invalid_argument("solve_telescoping: wrap delta spec mismatch");
  if (wrap && !forced_zero.empty())
    throw std::invalid_argument("solve_telescoping: cyclic system cannot carry forced zeros");
  for (int i : forced_zero)
    if (i < 0 || i > n) throw std::invalid_argument("solve_telescoping: forced index out of range");

  // prefix[i] = delta_1 + ... + delta_i, so t_i = t_0 + prefix[i].
  std::vector<GroupElement> prefix(n + 1, GroupElement::zero(spec));
  for (int i = 1; i <= n; ++i) prefix[i] = add(prefix[i - 1], deltas[i - 1]);

  TelescopeResult res;
  GroupElement t0 = GroupElement::zero(spec);
  if (wrap) {
    // t_0 - t_n = wrap forces prefix[n] + wrap = 0 independently of t_0.
    GroupElement cyc = add(prefix[n], *wrap);
    if (!cyc.is_zero()) {
      std::ostringstream os;
      os << "cyclic condition violated: wrap delta + sum of deltas = " << cyc.to_string()
         << ", expected 0";
      res.refutation = os.str();
      return res;
    }
  } else if (!forced_zero.empty()) {
    const int first = *forced_zero.begin();
    t0 = neg(prefix[first]);
    for (int i : forced_zero) {
      GroupElement ti = add(t0, prefix[i]);
      if (!ti.is_zero()) {
        std::ostringstream os;
        os << "forced zero violated: t_" << i << " = t_" << first
           << " + (partial sum of deltas) = " << ti.to_string() << ", expected 0";
        res.refutation = os.str();
        return res;
      }
    }
  }

  std::vector<GroupElement> t(n + 1, GroupElement::zero(spec));
  for (int i = 0; i <= n; ++i) t[i] = add(t0, prefix[i]);

  // Re-verify every defining equation before handing the witness out.
  for (int i = 1; i <= n; ++i)
    if (sub(t[i], t[i - 1]) != deltas[i - 1])
      throw std::logic_error("solve_telescoping: witness failed re-verification");
  for (int i : forced_zero)
    if (!t[i].is_zero()) throw std::logic_error("solve_telescoping: forced zero not met");
  if (wrap && sub(t[0], t[n]) != *wrap)
    throw std::logic_error("solve_telescoping: wrap equation not met");

  res.witness = std::move(t);
  return res;
}

}  // namespace corona
