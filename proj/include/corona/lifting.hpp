#pragma once

// Local liftings: sampled projection paths over the subintervals of a
// partitioned base space. Jumps live at partition points and are always
// window-supported, exactly. Infinite ends carry a designated far sample at
// distance 10 where decay conditions are tested.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "corona/classify.hpp"
#include "corona/hilbert.hpp"
#include "corona/kgroup.hpp"
#include "corona/space.hpp"

namespace corona {

inline double far_left_coordinate(const BaseSpace& s) {
  return s.partition().empty() ? -10.0 : s.partition().front() - 10.0;
}
inline double far_right_coordinate(const BaseSpace& s) {
  return s.partition().empty() ? 10.0 : s.partition().back() + 10.0;
}

// General sampled section over one subinterval (entries need not be
// projections; smoothing produces these).
struct SectionPath {
  SubintervalInfo sub;
  std::vector<double> grid;
  std::vector<TruncatedOperator> samples;
};

struct SectionData {
  BaseSpace space;
  std::vector<SectionPath> paths;
};

struct ProjectionPath {
  SubintervalInfo sub;
  std::vector<double> grid;
  std::vector<ProjectionMatrix> samples;

  ProjectionPath() = default;
  ProjectionPath(SubintervalInfo si, std::vector<double> g, std::vector<ProjectionMatrix> ps,
                 bool require_homogeneous = true)
      : sub(si), grid(std::move(g)), samples(std::move(ps)) {
    if (grid.empty() || grid.size() != samples.size())
      throw std::invalid_argument("ProjectionPath: grid/sample size mismatch");
    for (std::size_t j = 1; j < grid.size(); ++j)
      if (!(grid[j - 1] < grid[j]))
        throw std::invalid_argument("ProjectionPath: grid must be strictly increasing");
    const int n = samples[0].dim(), w = samples[0].window();
    for (const auto& p : samples) {
      if (p.dim() != n || p.window() != w)
        throw std::invalid_argument("ProjectionPath: samples must share dim and window");
      if (p.tail() != samples[0].tail())
        throw std::invalid_argument("ProjectionPath: samples must share the tail pattern");
    }
    for (std::size_t j = 1; j < samples.size(); ++j)
      if (op_norm(samples[j].entries() - samples[j - 1].entries()) > 0.5)
        throw std::invalid_argument("ProjectionPath: consecutive sample gap exceeds 1/2");
    if (require_homogeneous) {
      for (const auto& p : samples) {
        const int r = p.window_rank();
        if (r < 1 || r > w - 1)
          throw std::invalid_argument(
              "ProjectionPath: window rank and corank must both be at least 1");
      }
    }
  }

  const ProjectionMatrix& first() const { return samples.front(); }
  const ProjectionMatrix& last() const { return samples.back(); }
};

struct LocalLifting {
  BaseSpace space;
  std::vector<ProjectionPath> paths;

  LocalLifting(BaseSpace s, std::vector<ProjectionPath> ps)
      : space(std::move(s)), paths(std::move(ps)) {
    const int n = space.partition_size();
    if (static_cast<int>(paths.size()) != n + 1)
      throw std::invalid_argument("LocalLifting: need one path per subinterval");
    for (int i = 1; i <= n; ++i) {
      if (paths[i - 1].grid.back() != space.partition()[i - 1] ||
          paths[i].grid.front() != space.partition()[i - 1]) {
        std::ostringstream os;
        os << "LocalLifting: paths " << i - 1 << " and " << i
           << " must both sample the partition point x=" << space.partition()[i - 1];
        throw std::invalid_argument(os.str());
      }
    }
    auto subs = space.subintervals();
    if (subs.front().left_infinite() && paths.front().grid.front() != far_left_coordinate(space))
      throw std::invalid_argument("LocalLifting: leftmost grid must start at the far sample");
    if (!subs.front().left_infinite() && paths.front().grid.front() != subs.front().left)
      throw std::invalid_argument("LocalLifting: leftmost grid must start at the endpoint");
    if (subs.back().right_infinite() && paths.back().grid.back() != far_right_coordinate(space))
      throw std::invalid_argument("LocalLifting: rightmost grid must end at the far sample");
    if (!subs.back().right_infinite() && paths.back().grid.back() != subs.back().right)
      throw std::invalid_argument("LocalLifting: rightmost grid must end at the endpoint");
    const auto& tail0 = paths[0].samples[0].tail();
    for (const auto& p : paths) {
      if (p.samples[0].dim() != paths[0].samples[0].dim() ||
          p.samples[0].window() != paths[0].samples[0].window())
        throw std::invalid_argument("LocalLifting: paths must share dim and window");
      if (p.samples[0].tail() != tail0)
        throw std::invalid_argument(
            "LocalLifting: paths must share one tail pattern (jumps must be window-supported)");
    }
  }

  int dim() const { return paths[0].samples[0].dim(); }
  int window() const { return paths[0].samples[0].window(); }
  const Eigen::VectorXd& tail() const { return paths[0].samples[0].tail(); }
};

inline SectionData as_section(const LocalLifting& l) {
  SectionData out{l.space, {}};
  for (const auto& p : l.paths) {
    SectionPath sp{p.sub, p.grid, {}};
    for (const auto& s : p.samples) sp.samples.push_back(s.op);
    out.paths.push_back(std::move(sp));
  }
  return out;
}

// True iff the two sections represent the same corona element: differences
// window-supported exactly at every shared sample, and vanishing (<= 1e-6)
// at the far samples of infinite-ended subintervals.
inline bool same_corona_class(const SectionData& f, const SectionData& g) {
  if (f.space != g.space) throw std::invalid_argument("same_corona_class: spaces differ");
  if (f.paths.size() != g.paths.size())
    throw std::invalid_argument("same_corona_class: path counts differ");
  for (std::size_t i = 0; i < f.paths.size(); ++i) {
    if (f.paths[i].grid != g.paths[i].grid)
      throw std::invalid_argument("same_corona_class: incompatible grids");
    if (f.paths[i].samples.size() != g.paths[i].samples.size())
      throw std::invalid_argument("same_corona_class: sample counts differ");
  }
  for (std::size_t i = 0; i < f.paths.size(); ++i) {
    const auto& fp = f.paths[i];
    const auto& gp = g.paths[i];
    for (std::size_t j = 0; j < fp.samples.size(); ++j) {
      const TruncatedOperator& a = fp.samples[j];
      const TruncatedOperator& b = gp.samples[j];
      if (a.dim != b.dim || a.window != b.window)
        throw std::invalid_argument("same_corona_class: dim/window mismatch");
      if (a.tail != b.tail) return false;
      for (int r = 0; r < a.dim; ++r)
        for (int c = 0; c < a.dim; ++c) {
          if (r < a.window && c < a.window) continue;
          if (a.entries(r, c) != b.entries(r, c)) return false;
        }
    }
    if (fp.sub.left_infinite() &&
        op_norm(fp.samples.front().entries - gp.samples.front().entries) > 1e-6)
      return false;
    if (fp.sub.right_infinite() &&
        op_norm(fp.samples.back().entries - gp.samples.back().entries) > 1e-6)
      return false;
  }
  return true;
}

// k_i = class of p_i(x_i) - p_{i-1}(x_i) in K_0, i = 1..n; the circle gets an
// extra wrap jump comparing p_0(0) with p_n(1).
inline JumpData jump_classes(const LocalLifting& l) {
  GroupSpec z = GroupSpec::integers();
  std::vector<GroupElement> ks;
  const int n = l.space.partition_size();
  for (int i = 1; i <= n; ++i) {
    long long k = essential_codimension(l.paths[i].first(), l.paths[i - 1].last());
    ks.push_back(GroupElement::from_integer(z, k));
  }
  std::optional<GroupElement> wrap;
  if (l.space.has_wrap()) {
    long long k0 = essential_codimension(l.paths.front().first(), l.paths.back().last());
    wrap = GroupElement::from_integer(z, k0);
  }
  return JumpData(z, std::move(ks), std::move(wrap));
}

namespace detail {

// Tent profile of the correction attached to partition point x_i: 0 at the
// neighbor anchors, 1 at x_i, linear in between, clamped outside.
inline double tent_factor(double x, double left, double peak, double right) {
  double f = x <= peak ? (x - left) / (peak - left) : (right - x) / (right - peak);
  return std::clamp(f, 0.0, 1.0);
}

}  // namespace detail

// Single continuous section in the same corona class: each jump J_i is split
// into linear tent corrections m_i and the output is f_i - m_i/2 + m_{i+1}/2.
// m_0 = m_{n+1} = 0, so the circle's wrap jump is left alone.
inline SectionData smooth_representative(const SectionData& f) {
  const BaseSpace& space = f.space;
  const int n = space.partition_size();
  if (static_cast<int>(f.paths.size()) != n + 1)
    throw std::invalid_argument("smooth_representative: path count does not match partition");

  std::vector<Eigen::MatrixXd> jump(n + 2);  // jump[i] for i = 1..n
  for (int i = 1; i <= n; ++i)
    jump[i] = f.paths[i].samples.front().entries - f.paths[i - 1].samples.back().entries;

  // anchor coordinates x_0 and x_{n+1} stand in for missing or infinite ends
  std::vector<double> xs(n + 2);
  xs[0] = space.anchor_left();
  for (int i = 1; i <= n; ++i) xs[i] = space.partition()[i - 1];
  xs[n + 1] = space.anchor_right();

  SectionData out{space, {}};
  for (int i = 0; i <= n; ++i) {
    const SectionPath& sp = f.paths[i];
    SectionPath np{sp.sub, sp.grid, {}};
    for (std::size_t j = 0; j < sp.samples.size(); ++j) {
      const double x = sp.grid[j];
      Eigen::MatrixXd m = sp.samples[j].entries;
      if (i >= 1)
        m -= 0.5 * detail::tent_factor(x, xs[i - 1], xs[i], xs[i + 1]) * jump[i];
      if (i + 1 <= n)
        m += 0.5 * detail::tent_factor(x, xs[i], xs[i + 1], xs[i + 2]) * jump[i + 1];
      np.samples.emplace_back(sp.samples[j].dim, sp.samples[j].window, std::move(m),
                              sp.samples[j].tail, sp.samples[j].policy);
    }
    out.paths.push_back(std::move(np));
  }
  return out;
}

inline SectionData smooth_representative(const LocalLifting& l) {
  return smooth_representative(as_section(l));
}

// Rank-m subprojection r <= p transported along the path: a window frame of
// the first sample is carried by per-step transport unitaries, re-projected
// and re-orthonormalized at every step to pin the residuals down.
inline ProjectionPath extract_subprojection(const ProjectionPath& path, long long m) {
  if (m < 0)
    throw std::invalid_argument(
        "extract_subprojection: negative rank; realize on the opposite side");
  const int w = path.samples[0].window();
  const int n = path.samples[0].dim();
  for (const auto& p : path.samples)
    if (m > p.window_rank() - 1)
      throw std::invalid_argument("extract_subprojection: m too large for the window rank");

  Eigen::VectorXd zero_tail = Eigen::VectorXd::Zero(n - w);
  std::vector<ProjectionMatrix> out;
  if (m == 0) {
    for (std::size_t j = 0; j < path.samples.size(); ++j)
      out.emplace_back(TruncatedOperator(n, w, Eigen::MatrixXd::Zero(n, n), zero_tail), 1e-8,
                       1e-8);
    return ProjectionPath(path.sub, path.grid, std::move(out), false);
  }

  Eigen::MatrixXd frame = path.samples[0].window_frame().rightCols(m);
  for (std::size_t j = 0; j < path.samples.size(); ++j) {
    if (j > 0) {
      TruncatedOperator u = transport_unitary(path.samples[j - 1], path.samples[j]);
      Eigen::MatrixXd moved =
          path.samples[j].op.window_block() * (u.entries.topLeftCorner(w, w) * frame);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(moved);
      frame = qr.householderQ() * Eigen::MatrixXd::Identity(w, m);
      // transported frame must stay inside ran(p); re-project once more
      frame = path.samples[j].op.window_block() * frame;
      Eigen::HouseholderQR<Eigen::MatrixXd> qr2(frame);
      frame = qr2.householderQ() * Eigen::MatrixXd::Identity(w, m);
    }
    Eigen::MatrixXd rm = Eigen::MatrixXd::Zero(n, n);
    rm.topLeftCorner(w, w) = frame * frame.transpose();
    ProjectionMatrix r(TruncatedOperator(n, w, std::move(rm), zero_tail), 1e-8, 1e-8);
    if (op_norm(path.samples[j].entries() * r.entries() - r.entries()) > 1e-8)
      throw std::runtime_error("extract_subprojection: transported frame left the range");
    out.push_back(std::move(r));
  }
  return ProjectionPath(path.sub, path.grid, std::move(out), false);
}

// Shifts the lifting's jumps to the requested targets by subtracting
// transported finite-rank subprojections, per-subinterval rank
// m_i = initial + sum_{j<=i} (k_j - target_j). The corona class is
// preserved. A nonzero initial correction acts on subinterval 0 itself,
// which liftings over spaces with a finite left end sometimes need.
inline LocalLifting normalize_jumps(const LocalLifting& l, const JumpData& targets,
                                    long long initial = 0) {
  const int n = l.space.partition_size();
  if (static_cast<int>(targets.jumps.size()) != n)
    throw std::invalid_argument("normalize_jumps: target length does not match partition");
  if (targets.wrap.has_value() != l.space.has_wrap())
    throw std::invalid_argument("normalize_jumps: wrap target present iff circle");
  if (targets.spec != GroupSpec::integers())
    throw std::invalid_argument("normalize_jumps: targets must be integer classes");

  JumpData current = jump_classes(l);
  std::vector<long long> m(n + 1, 0);
  m[0] = initial;
  for (int i = 1; i <= n; ++i) {
    long long ki = current.jumps[i - 1].free_part()[0];
    long long ti = targets.jumps[i - 1].free_part()[0];
    m[i] = m[i - 1] + (ki - ti);
  }
  auto subs = l.space.subintervals();
  for (int i = 0; i <= n; ++i) {
    if (m[i] < 0) {
      std::ostringstream os;
      os << "normalize_jumps: accumulated correction " << m[i] << " on subinterval " << i
         << " is negative; realize on the opposite side";
      throw std::invalid_argument(os.str());
    }
    if (m[i] > 0 && subs[i].has_infinite_end()) {
      std::ostringstream os;
      os << "normalize_jumps: nonzero correction on subinterval " << i
         << " would violate decay at its infinite end";
      throw std::invalid_argument(os.str());
    }
  }
  if (l.space.has_wrap()) {
    long long want = current.wrap->free_part()[0] + m[n] - m[0];
    if (targets.wrap->free_part()[0] != want) {
      std::ostringstream os;
      os << "normalize_jumps: circle wrap target must be " << want << " to close up";
      throw std::invalid_argument(os.str());
    }
  }

  std::vector<ProjectionPath> out;
  for (int i = 0; i <= n; ++i) {
    if (m[i] == 0) {
      out.push_back(l.paths[i]);
      continue;
    }
    ProjectionPath r = extract_subprojection(l.paths[i], m[i]);
    std::vector<ProjectionMatrix> ps;
    for (std::size_t j = 0; j < l.paths[i].samples.size(); ++j) {
      const ProjectionMatrix& p = l.paths[i].samples[j];
      ps.emplace_back(TruncatedOperator(p.dim(), p.window(),
                                        p.entries() - r.samples[j].entries(), p.op.tail),
                      1e-8, 1e-8);
    }
    out.emplace_back(l.paths[i].sub, l.paths[i].grid, std::move(ps));
  }
  LocalLifting result(l.space, std::move(out));

  JumpData achieved = jump_classes(result);
  for (int i = 0; i < n; ++i)
    if (achieved.jumps[i] != targets.jumps[i])
      throw std::logic_error("normalize_jumps: achieved jumps failed re-verification");
  if (l.space.has_wrap() && *achieved.wrap != *targets.wrap)
    throw std::logic_error("normalize_jumps: achieved wrap jump failed re-verification");
  if (!same_corona_class(as_section(l), as_section(result)))
    throw std::logic_error("normalize_jumps: corona class not preserved");
  return result;
}

}  // namespace corona
