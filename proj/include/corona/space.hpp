#pragma once

// The four 1-D base spaces with a finite partition into closed subintervals.
// Decisions downstream depend only on ordering and endpoint flags, never on
// coordinate values.

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace corona {

enum class SpaceKind { Interval, HalfLine, Line, Circle };

inline std::string to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::Interval: return "Interval";
    case SpaceKind::HalfLine: return "HalfLine";
    case SpaceKind::Line: return "Line";
    case SpaceKind::Circle: return "Circle";
  }
  throw std::logic_error("unreachable space kind");
}

inline SpaceKind space_kind_from_string(const std::string& s) {
  if (s == "Interval" || s == "interval") return SpaceKind::Interval;
  if (s == "HalfLine" || s == "half_line" || s == "halfline") return SpaceKind::HalfLine;
  if (s == "Line" || s == "line") return SpaceKind::Line;
  if (s == "Circle" || s == "circle") return SpaceKind::Circle;
  throw std::invalid_argument("unknown space kind: " + s);
}

struct SubintervalInfo {
  int index = 0;
  double left = 0.0;   // -inf encoded as -infinity()
  double right = 0.0;  // +inf encoded as +infinity()

  bool left_infinite() const { return std::isinf(left); }
  bool right_infinite() const { return std::isinf(right); }
  bool has_infinite_end() const { return left_infinite() || right_infinite(); }
};

class BaseSpace {
 public:
  BaseSpace(SpaceKind kind, std::vector<double> partition)
      : kind_(kind), partition_(std::move(partition)) {
    for (std::size_t i = 1; i < partition_.size(); ++i)
      if (!(partition_[i - 1] < partition_[i]))
        throw std::invalid_argument("BaseSpace: partition must be strictly increasing");
    if (kind_ == SpaceKind::Interval || kind_ == SpaceKind::Circle) {
      for (double x : partition_)
        if (!(0.0 < x && x < 1.0))
          throw std::invalid_argument("BaseSpace: partition points must lie strictly inside (0,1)");
    }
    if (kind_ == SpaceKind::HalfLine) {
      for (double x : partition_)
        if (!(x > 0.0))
          throw std::invalid_argument("BaseSpace: partition points must be positive");
    }
  }

  SpaceKind kind() const { return kind_; }
  const std::vector<double>& partition() const { return partition_; }
  int partition_size() const { return static_cast<int>(partition_.size()); }
  int subinterval_count() const { return partition_size() + 1; }
  bool has_wrap() const { return kind_ == SpaceKind::Circle; }

  std::vector<SubintervalInfo> subintervals() const {
    const int n = partition_size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<SubintervalInfo> out(n + 1);
    for (int i = 0; i <= n; ++i) {
      SubintervalInfo& s = out[i];
      s.index = i;
      s.left = i == 0 ? left_end() : partition_[i - 1];
      s.right = i == n ? right_end() : partition_[i];
      (void)inf;
    }
    return out;
  }

  // Indices i where any equivalence witness must satisfy t_i = 0 because X_i
  // reaches an infinite end.
  std::set<int> forced_zero_indices() const {
    const int n = partition_size();
    switch (kind_) {
      case SpaceKind::Interval:
      case SpaceKind::Circle:
        return {};
      case SpaceKind::HalfLine:
        return {n};
      case SpaceKind::Line:
        return {0, n};
    }
    throw std::logic_error("unreachable space kind");
  }

  // Finite stand-in coordinates for smoothing ramps: x_0 and x_{n+1} when the
  // corresponding end is infinite are taken one unit beyond the partition.
  double anchor_left() const {
    switch (kind_) {
      case SpaceKind::Interval:
      case SpaceKind::Circle:
      case SpaceKind::HalfLine:
        return 0.0;
      case SpaceKind::Line:
        return partition_.empty() ? -1.0 : partition_.front() - 1.0;
    }
    throw std::logic_error("unreachable space kind");
  }
  double anchor_right() const {
    switch (kind_) {
      case SpaceKind::Interval:
      case SpaceKind::Circle:
        return 1.0;
      case SpaceKind::HalfLine:
      case SpaceKind::Line:
        return partition_.empty() ? 1.0 : partition_.back() + 1.0;
    }
    throw std::logic_error("unreachable space kind");
  }

  bool operator==(const BaseSpace& o) const {
    return kind_ == o.kind_ && partition_ == o.partition_;
  }
  bool operator!=(const BaseSpace& o) const { return !(*this == o); }

 private:
  double left_end() const {
    const double inf = std::numeric_limits<double>::infinity();
    switch (kind_) {
      case SpaceKind::Interval:
      case SpaceKind::HalfLine:
      case SpaceKind::Circle:
        return 0.0;
      case SpaceKind::Line:
        return -inf;
    }
    throw std::logic_error("unreachable space kind");
  }
  double right_end() const {
    const double inf = std::numeric_limits<double>::infinity();
    switch (kind_) {
      case SpaceKind::Interval:
      case SpaceKind::Circle:
        return 1.0;
      case SpaceKind::HalfLine:
      case SpaceKind::Line:
        return inf;
    }
    throw std::logic_error("unreachable space kind");
  }

  SpaceKind kind_;
  std::vector<double> partition_;
};

}  // namespace corona
