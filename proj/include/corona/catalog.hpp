#pragma once

// Deterministic projection-path families with analytically known jump data.
// Every family is an indicator diagonal whose window rank ("front") is
// constant on each subinterval, decorated with an in-subinterval 2-plane
// rotation that returns to zero at both ends. Jumps are therefore pure
// front-count differences.

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "corona/classify.hpp"
#include "corona/hilbert.hpp"
#include "corona/lifting.hpp"
#include "corona/space.hpp"

namespace corona {

struct FamilySpec {
  std::string family;                 // front | rotation | winding | composite
  std::vector<long long> fronts;      // per-subinterval window ranks (front, composite)
  std::vector<double> amplitudes;     // per-subinterval rotation amplitudes (rotation, composite)
  long long winding = 0;              // circle wrap class (winding family)
  long long base_front = 16;          // constant rank for rotation/winding families
  int dim = 64;
  int window = 32;
  int samples_per_subinterval = 16;
};

struct InstantiatedFamily {
  LocalLifting lifting;
  JumpData declared;
};

namespace detail {

inline ProjectionMatrix front_sample(int dim, int window, long long front, double theta) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (long long i = 0; i < front; ++i) m(i, i) = 1.0;
  for (int i = window; i < dim; ++i) m(i, i) = 1.0;
  if (theta != 0.0) {
    // rotate the 2-plane spanned by the last occupied and first free slot
    Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(dim, dim);
    const int a = static_cast<int>(front) - 1, b = static_cast<int>(front);
    rot(a, a) = std::cos(theta);
    rot(a, b) = -std::sin(theta);
    rot(b, a) = std::sin(theta);
    rot(b, b) = std::cos(theta);
    m = rot * m * rot.transpose();
    // conjugation by a window rotation keeps exact zeros outside the window
    for (int i = window; i < dim; ++i) m(i, i) = 1.0;
  }
  return ProjectionMatrix(TruncatedOperator(dim, window, std::move(m),
                                            Eigen::VectorXd::Ones(dim - window)),
                          1e-8, 1e-8);
}

}  // namespace detail

inline InstantiatedFamily instantiate(const FamilySpec& spec, const BaseSpace& space) {
  const int n = space.partition_size();
  const int steps = spec.samples_per_subinterval;
  if (steps < 2) throw std::invalid_argument("catalog: need at least 2 samples per subinterval");
  if (spec.dim < spec.window + 16)
    throw std::invalid_argument("catalog: dim must leave stabilization headroom past the window");

  std::vector<long long> fronts;
  std::vector<double> amps(n + 1, 0.0);
  if (spec.family == "front" || spec.family == "composite") {
    fronts = spec.fronts;
    if (static_cast<int>(fronts.size()) != n + 1)
      throw std::invalid_argument("catalog: need one front per subinterval");
    if (spec.family == "composite") {
      if (static_cast<int>(spec.amplitudes.size()) != n + 1)
        throw std::invalid_argument("catalog: need one amplitude per subinterval");
      amps = spec.amplitudes;
    }
  } else if (spec.family == "rotation") {
    fronts.assign(n + 1, spec.base_front);
    if (static_cast<int>(spec.amplitudes.size()) != n + 1)
      throw std::invalid_argument("catalog: need one amplitude per subinterval");
    amps = spec.amplitudes;
  } else if (spec.family == "winding") {
    if (space.kind() != SpaceKind::Circle)
      throw std::invalid_argument("catalog: winding family lives on the circle");
    if (n == 0 && spec.winding != 0)
      throw std::invalid_argument(
          "catalog: nonzero winding needs an interior partition point to absorb the rank drift");
    fronts.resize(n + 1);
    for (int i = 0; i <= n; ++i)
      fronts[i] = spec.base_front - (n == 0 ? 0 : std::llround(double(i) * spec.winding / n));
  } else {
    throw std::invalid_argument("catalog: unknown family id: " + spec.family);
  }

  for (long long f : fronts)
    if (f < 1 || f > spec.window - 1)
      throw std::invalid_argument("catalog: fronts must keep rank and corank inside the window");
  for (double a : amps)
    if (std::abs(a) * M_PI / (steps - 1) > 0.45)
      throw std::invalid_argument("catalog: amplitude too large for the grid density");

  auto subs = space.subintervals();
  std::vector<ProjectionPath> paths;
  for (int i = 0; i <= n; ++i) {
    double left = subs[i].left_infinite() ? far_left_coordinate(space) : subs[i].left;
    double right = subs[i].right_infinite() ? far_right_coordinate(space) : subs[i].right;
    std::vector<double> grid(steps);
    std::vector<ProjectionMatrix> samples;
    for (int j = 0; j < steps; ++j) {
      double frac = double(j) / (steps - 1);
      grid[j] = j == 0 ? left : j == steps - 1 ? right : left + frac * (right - left);
      double theta = amps[i] * std::sin(M_PI * frac);
      samples.push_back(detail::front_sample(spec.dim, spec.window, fronts[i], theta));
    }
    paths.emplace_back(subs[i], std::move(grid), std::move(samples));
  }

  GroupSpec z = GroupSpec::integers();
  std::vector<GroupElement> ks;
  for (int i = 1; i <= n; ++i) ks.push_back(GroupElement::from_integer(z, fronts[i] - fronts[i - 1]));
  std::optional<GroupElement> wrap;
  if (space.has_wrap()) wrap = GroupElement::from_integer(z, fronts[0] - fronts[n]);
  return InstantiatedFamily{LocalLifting(space, std::move(paths)),
                            JumpData(z, std::move(ks), std::move(wrap))};
}

}  // namespace corona
