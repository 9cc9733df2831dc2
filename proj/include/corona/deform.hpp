#pragma once

// Constructive deformation: partial-isometry witness paths realizing the
// equivalences that classify certifies. Witnesses are built per subinterval
// by transporting a polar seed; at each partition point the previous branch
// is corrected compactly and bridged back onto an independent branch over the
// first quarter of the subinterval.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "corona/classify.hpp"
#include "corona/hilbert.hpp"
#include "corona/lifting.hpp"

namespace corona {

struct IsometrySegment {
  SubintervalInfo sub;
  std::vector<double> grid;
  std::vector<TruncatedOperator> samples;
};

struct ResidualReport {
  double max_domain_residual = 0.0;           // worst ||u^T u - p|| over all samples
  double max_codomain_residual = 0.0;         // worst ||u u^T - q||
  std::vector<double> partition_mismatch;     // window norm of u_i(x_i) - u_{i-1}(x_i)
  std::optional<double> wrap_mismatch;        // circle: window norm of u_0(0) - u_n(1)
};

struct PartialIsometryPath {
  BaseSpace space;
  std::vector<IsometrySegment> segments;
  ResidualReport report;
};

namespace detail {

// Thin QR with positive diagonal, so the factor depends continuously on a
// near-orthonormal input (plain Householder Q flips column signs at will).
inline Eigen::MatrixXd orthonormalize_like(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::MatrixXd r = q.transpose() * m;
  for (int k = 0; k < q.cols(); ++k)
    if (r(k, k) < 0) q.col(k) = -q.col(k);
  return q;
}

// Continuous interpolation s -> R(s) in SO(r) from I to g. Rotation angles
// come from the real Schur form; paired -1 eigenvalues become half-turns.
class OrthogonalGeodesic {
 public:
  explicit OrthogonalGeodesic(const Eigen::MatrixXd& g_raw) {
    const int r = static_cast<int>(g_raw.rows());
    if (r == 0) {
      q_ = g_ = Eigen::MatrixXd(0, 0);
      return;
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(g_raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
    g_ = svd.matrixU() * svd.matrixV().transpose();
    if (g_.determinant() < 0)
      throw std::logic_error("OrthogonalGeodesic: determinant -1, flip a branch first");
    Eigen::RealSchur<Eigen::MatrixXd> schur(g_);
    q_ = schur.matrixU();
    const Eigen::MatrixXd& t = schur.matrixT();
    std::vector<int> minus;
    int i = 0;
    while (i < r) {
      if (i + 1 < r && std::abs(t(i + 1, i)) > 1e-10) {
        angles_.emplace_back(i, std::atan2(t(i + 1, i), t(i, i)));
        i += 2;
      } else {
        if (t(i, i) < 0) minus.push_back(i);
        ++i;
      }
    }
    if (minus.size() % 2 != 0)
      throw std::logic_error("OrthogonalGeodesic: unpaired reflection despite determinant 1");
    for (std::size_t k = 0; k + 1 < minus.size(); k += 2)
      pairs_.emplace_back(minus[k], minus[k + 1]);
    if (op_norm(at(1.0) - g_) > 1e-8)
      throw std::logic_error("OrthogonalGeodesic: Schur blocks did not reassemble the input");
  }

  Eigen::MatrixXd at(double s) const {
    const int r = static_cast<int>(q_.rows());
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(r, r);
    for (const auto& [i, th] : angles_) {
      const double a = s * th;
      m(i, i) = std::cos(a);
      m(i, i + 1) = -std::sin(a);
      m(i + 1, i) = std::sin(a);
      m(i + 1, i + 1) = std::cos(a);
    }
    for (const auto& [i, j] : pairs_) {
      const double a = s * M_PI;
      m(i, i) = std::cos(a);
      m(i, j) = -std::sin(a);
      m(j, i) = std::sin(a);
      m(j, j) = std::cos(a);
    }
    return q_ * m * q_.transpose();
  }

 private:
  Eigen::MatrixXd g_, q_;
  std::vector<std::pair<int, double>> angles_;
  std::vector<std::pair<int, int>> pairs_;
};

// Exact partial isometry p -> q agreeing with the polar factor of q a p on
// its support; where that connector is rank deficient (a fresh jump the old
// isometry cannot see) the gap is completed by matching singular frames, so
// the result is always a compact perturbation of q a p.
inline TruncatedOperator completed_connector(const TruncatedOperator& a,
                                             const ProjectionMatrix& p,
                                             const ProjectionMatrix& q) {
  const int n = p.dim(), w = p.window();
  if (p.tail() != q.tail())
    throw std::invalid_argument("completed_connector: projection tails differ");
  Eigen::MatrixXd bp = p.window_frame();
  Eigen::MatrixXd bq = q.window_frame();
  if (bp.cols() != bq.cols())
    throw std::logic_error("completed_connector: window ranks differ, check them upstream");
  Eigen::MatrixXd vm = Eigen::MatrixXd::Zero(n, n);
  for (int i = w; i < n; ++i) vm(i, i) = p.tail()(i - w);
  const int r = static_cast<int>(bp.cols());
  if (r > 0) {
    Eigen::MatrixXd c = bq.transpose() * a.window_block() * bp;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    int r0 = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > 1e-8 * std::max(1.0, sv(0))) ++r0;
    Eigen::MatrixXd g = svd.matrixU().leftCols(r0) * svd.matrixV().leftCols(r0).transpose();
    if (r0 < r) {
      // close the unsupported directions by the rotation nearest to identity
      Eigen::MatrixXd nq = svd.matrixU().rightCols(r - r0);
      Eigen::MatrixXd np = svd.matrixV().rightCols(r - r0);
      Eigen::BDCSVD<Eigen::MatrixXd> fill(nq.transpose() * np,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
      g += nq * (fill.matrixU() * fill.matrixV().transpose()) * np.transpose();
    }
    vm.topLeftCorner(w, w) = bq * g * bp.transpose();
  }
  return TruncatedOperator(n, w, std::move(vm), p.op.tail, TailPolicy::Exact);
}

// One transport step for a partial isometry: conjugate by the two-projection
// unitaries on both sides, then re-polish to kill accumulated drift.
inline TruncatedOperator transport_isometry_step(const TruncatedOperator& u,
                                                 const ProjectionMatrix& p0,
                                                 const ProjectionMatrix& p1,
                                                 const ProjectionMatrix& q0,
                                                 const ProjectionMatrix& q1) {
  TruncatedOperator up = transport_unitary(p0, p1);
  TruncatedOperator uq = transport_unitary(q0, q1);
  TruncatedOperator moved(u.dim, u.window, uq.entries * u.entries * up.entries.transpose(),
                          u.tail, TailPolicy::Declared);
  return completed_connector(moved, p1, q1);
}

inline std::vector<TruncatedOperator> transport_branch(const TruncatedOperator& seed,
                                                       const ProjectionPath& pp,
                                                       const ProjectionPath& qq) {
  std::vector<TruncatedOperator> out{seed};
  for (std::size_t j = 1; j < pp.samples.size(); ++j)
    out.push_back(transport_isometry_step(out.back(), pp.samples[j - 1], pp.samples[j],
                                          qq.samples[j - 1], qq.samples[j]));
  return out;
}

// Window frames of ran(p) carried continuously along the path.
inline std::vector<Eigen::MatrixXd> transported_frames(const ProjectionPath& pp) {
  const int w = pp.samples[0].window();
  std::vector<Eigen::MatrixXd> out;
  out.push_back(pp.samples[0].window_frame());
  for (std::size_t j = 1; j < pp.samples.size(); ++j) {
    TruncatedOperator u = transport_unitary(pp.samples[j - 1], pp.samples[j]);
    Eigen::MatrixXd moved =
        pp.samples[j].op.window_block() * (u.entries.topLeftCorner(w, w) * out.back());
    out.push_back(orthonormalize_like(moved));
  }
  return out;
}

// In-range reflection of the first frame vector, expressed at sample j; used
// to move a branch into the other connected component of its isometry fiber.
inline Eigen::MatrixXd range_reflector(int n, const Eigen::MatrixXd& frame) {
  const int w = static_cast<int>(frame.rows());
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n);
  s.topLeftCorner(w, w) -= 2.0 * frame.col(0) * frame.col(0).transpose();
  return s;
}

// Rotation of ran(p(j)) by r (given in the transported frame), embedded.
inline Eigen::MatrixXd range_rotation(int n, const Eigen::MatrixXd& frame,
                                      const Eigen::MatrixXd& r) {
  const int w = static_cast<int>(frame.rows());
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  m.topLeftCorner(w, w) += frame * (r - Eigen::MatrixXd::Identity(r.rows(), r.cols())) *
                           frame.transpose();
  return m;
}

inline int bridge_cut(std::size_t grid_size) {
  int b = std::max<int>(2, static_cast<int>((grid_size - 1) / 4));
  return std::min<int>(b, std::max<int>(1, static_cast<int>(grid_size) - 2));
}

}  // namespace detail

// Unitaries U(x) with U(x_first) = 1 conjugating p(x_first) to p(x) along the
// path, by chained two-projection transports.
inline std::vector<TruncatedOperator> trivialize_path(const ProjectionPath& path) {
  const int n = path.samples[0].dim(), w = path.samples[0].window();
  std::vector<TruncatedOperator> out{TruncatedOperator::identity(n, w)};
  for (std::size_t j = 1; j < path.samples.size(); ++j) {
    TruncatedOperator step = transport_unitary(path.samples[j - 1], path.samples[j]);
    out.emplace_back(n, w, step.entries * out.back().entries, out.back().tail,
                     TailPolicy::Exact);
  }
  for (std::size_t j = 0; j < out.size(); ++j)
    if (op_norm(out[j].entries * path.samples[0].entries() * out[j].entries.transpose() -
                path.samples[j].entries()) > 1e-6)
      throw std::runtime_error("trivialize_path: conjugation residual exceeds 1e-6");
  return out;
}

// Witness u with u^T u = p and u u^T = q everywhere, window-supported
// mismatches at partition points. Preconditions: identical grids, shared
// tails, and equal jump data (normalize_jumps arranges the latter).
inline PartialIsometryPath build_mvn_witness(const LocalLifting& lp, const LocalLifting& lq) {
  if (lp.space != lq.space) throw std::invalid_argument("build_mvn_witness: spaces differ");
  const int n = lp.space.partition_size();
  for (int i = 0; i <= n; ++i)
    if (lp.paths[i].grid != lq.paths[i].grid)
      throw std::invalid_argument("build_mvn_witness: incompatible grids");
  if (lp.dim() != lq.dim() || lp.window() != lq.window())
    throw std::invalid_argument("build_mvn_witness: dim/window mismatch");
  if (lp.tail() != lq.tail())
    throw std::invalid_argument("build_mvn_witness: liftings do not share a tail pattern");

  JumpData kp = jump_classes(lp), kq = jump_classes(lq);
  for (int i = 1; i <= n; ++i)
    if (kp.jumps[i - 1] != kq.jumps[i - 1]) {
      std::ostringstream os;
      os << "index obstruction at partition point x=" << lp.space.partition()[i - 1]
         << ": jump classes differ (" << kp.jumps[i - 1].to_string() << " vs "
         << kq.jumps[i - 1].to_string() << ")";
      throw std::runtime_error(os.str());
    }
  if (lp.space.has_wrap() && *kp.wrap != *kq.wrap) {
    std::ostringstream os;
    os << "index obstruction at the wrap point: jump classes differ (" << kp.wrap->to_string()
       << " vs " << kq.wrap->to_string() << ")";
    throw std::runtime_error(os.str());
  }
  for (int i = 0; i <= n; ++i)
    if (lp.paths[i].first().window_rank() != lq.paths[i].first().window_rank()) {
      std::ostringstream os;
      os << "index obstruction on subinterval " << i << ": window ranks differ ("
         << lp.paths[i].first().window_rank() << " vs " << lq.paths[i].first().window_rank()
         << "); no exact partial isometry at this truncation";
      throw std::runtime_error(os.str());
    }

  PartialIsometryPath out{lp.space, {}, {}};
  TruncatedOperator prev_end = TruncatedOperator::identity(lp.dim(), lp.window());

  for (int i = 0; i <= n; ++i) {
    const ProjectionPath& pp = lp.paths[i];
    const ProjectionPath& qq = lq.paths[i];
    std::vector<TruncatedOperator> samples;

    TruncatedOperator bar_seed = detail::completed_connector(
        TruncatedOperator::identity(lp.dim(), lp.window()), pp.first(), qq.first());
    std::vector<TruncatedOperator> bar = detail::transport_branch(bar_seed, pp, qq);

    if (i == 0 && !lp.space.has_wrap()) {
      samples = std::move(bar);
    } else if (i >= 1) {
      // compact correction of q_i(x_i) u_{i-1}(x_i) p_i(x_i), then a bridge
      // from the corrected branch onto the independent one
      TruncatedOperator v = detail::completed_connector(prev_end, pp.first(), qq.first());
      std::vector<TruncatedOperator> tilde = detail::transport_branch(v, pp, qq);
      std::vector<Eigen::MatrixXd> frames = detail::transported_frames(pp);
      const int b = detail::bridge_cut(pp.grid.size());

      Eigen::MatrixXd traw = frames[b].transpose() *
                             (tilde[b].entries.transpose() * bar[b].entries).topLeftCorner(
                                 pp.first().window(), pp.first().window()) *
                             frames[b];
      if (traw.determinant() < 0) {
        for (std::size_t j = 0; j < bar.size(); ++j) {
          Eigen::MatrixXd flipped =
              bar[j].entries * detail::range_reflector(lp.dim(), frames[j]);
          bar[j] = detail::completed_connector(
              TruncatedOperator(lp.dim(), lp.window(), std::move(flipped), bar[j].tail,
                                TailPolicy::Declared),
              pp.samples[j], qq.samples[j]);
        }
        traw = frames[b].transpose() *
               (tilde[b].entries.transpose() * bar[b].entries).topLeftCorner(
                   pp.first().window(), pp.first().window()) *
               frames[b];
      }
      detail::OrthogonalGeodesic geo(traw);

      samples = bar;
      for (int j = 0; j <= b; ++j) {
        const double s = b == 0 ? 1.0 : double(j) / b;
        Eigen::MatrixXd bridged =
            tilde[j].entries * detail::range_rotation(lp.dim(), frames[j], geo.at(s));
        samples[j] = detail::completed_connector(
            TruncatedOperator(lp.dim(), lp.window(), std::move(bridged), tilde[j].tail,
                              TailPolicy::Declared),
            pp.samples[j], qq.samples[j]);
      }
    } else {
      samples = std::move(bar);  // circle X_0: seeded freely, re-anchored below
    }

    prev_end = samples.back();
    out.segments.push_back(IsometrySegment{pp.sub, pp.grid, std::move(samples)});
  }

  if (lp.space.has_wrap()) {
    // wrap correction: connect u_n(1) compactly into u_0 near the base point
    const ProjectionPath& pp = lp.paths[0];
    const ProjectionPath& qq = lq.paths[0];
    std::vector<TruncatedOperator>& u0 = out.segments[0].samples;
    TruncatedOperator v0 =
        detail::completed_connector(out.segments[n].samples.back(), pp.first(), qq.first());
    std::vector<TruncatedOperator> tilde = detail::transport_branch(v0, pp, qq);
    std::vector<Eigen::MatrixXd> frames = detail::transported_frames(pp);
    const int b = detail::bridge_cut(pp.grid.size());

    auto defect = [&](const std::vector<TruncatedOperator>& t) {
      return Eigen::MatrixXd(frames[b].transpose() *
                             (t[b].entries.transpose() * u0[b].entries).topLeftCorner(
                                 pp.first().window(), pp.first().window()) *
                             frames[b]);
    };
    Eigen::MatrixXd traw = defect(tilde);
    if (traw.determinant() < 0) {
      // u_0 is pinned on both sides; move the corrected branch instead
      for (std::size_t j = 0; j < tilde.size(); ++j) {
        Eigen::MatrixXd flipped =
            tilde[j].entries * detail::range_reflector(lp.dim(), frames[j]);
        tilde[j] = detail::completed_connector(
            TruncatedOperator(lp.dim(), lp.window(), std::move(flipped), tilde[j].tail,
                              TailPolicy::Declared),
            pp.samples[j], qq.samples[j]);
      }
      traw = defect(tilde);
    }
    detail::OrthogonalGeodesic geo(traw);
    for (int j = 0; j <= b; ++j) {
      const double s = b == 0 ? 1.0 : double(j) / b;
      Eigen::MatrixXd bridged =
          tilde[j].entries * detail::range_rotation(lp.dim(), frames[j], geo.at(s));
      u0[j] = detail::completed_connector(
          TruncatedOperator(lp.dim(), lp.window(), std::move(bridged), tilde[j].tail,
                            TailPolicy::Declared),
          pp.samples[j], qq.samples[j]);
    }
  }

  // residual report and invariant checks
  for (int i = 0; i <= n; ++i) {
    const auto& seg = out.segments[i];
    for (std::size_t j = 0; j < seg.samples.size(); ++j) {
      const Eigen::MatrixXd& u = seg.samples[j].entries;
      out.report.max_domain_residual =
          std::max(out.report.max_domain_residual,
                   op_norm(u.transpose() * u - lp.paths[i].samples[j].entries()));
      out.report.max_codomain_residual =
          std::max(out.report.max_codomain_residual,
                   op_norm(u * u.transpose() - lq.paths[i].samples[j].entries()));
    }
  }
  for (int i = 1; i <= n; ++i) {
    const TruncatedOperator& a = out.segments[i].samples.front();
    const TruncatedOperator& c = out.segments[i - 1].samples.back();
    if (a.tail != c.tail)
      throw std::logic_error("build_mvn_witness: partition mismatch not window-supported");
    out.report.partition_mismatch.push_back(
        op_norm((a.entries - c.entries).topLeftCorner(a.window, a.window)));
  }
  if (lp.space.has_wrap()) {
    const TruncatedOperator& a = out.segments[0].samples.front();
    const TruncatedOperator& c = out.segments[n].samples.back();
    out.report.wrap_mismatch =
        op_norm((a.entries - c.entries).topLeftCorner(a.window, a.window));
  }
  return out;
}

// Per-subinterval classes t_i = [p_i : u^T u] - [q_i : u u^T], checked for
// constancy across samples and forced to zero at infinite ends.
inline std::vector<long long> index_data(const PartialIsometryPath& u, const LocalLifting& lp,
                                         const LocalLifting& lq) {
  if (u.space != lp.space || u.space != lq.space)
    throw std::invalid_argument("index_data: spaces differ");
  const int n = lp.space.partition_size();
  if (static_cast<int>(u.segments.size()) != n + 1)
    throw std::invalid_argument("index_data: segment count mismatch");
  std::vector<long long> t(n + 1, 0);
  auto subs = lp.space.subintervals();
  for (int i = 0; i <= n; ++i) {
    const auto& seg = u.segments[i];
    if (seg.grid != lp.paths[i].grid || seg.grid != lq.paths[i].grid)
      throw std::invalid_argument("index_data: incompatible grids");
    std::optional<long long> val;
    for (std::size_t j = 0; j < seg.samples.size(); ++j) {
      const Eigen::MatrixXd& um = seg.samples[j].entries;
      ProjectionMatrix left(TruncatedOperator(seg.samples[j].dim, seg.samples[j].window,
                                              um.transpose() * um, seg.samples[j].tail),
                            1e-5, 1e-5);
      ProjectionMatrix right(TruncatedOperator(seg.samples[j].dim, seg.samples[j].window,
                                               um * um.transpose(), seg.samples[j].tail),
                             1e-5, 1e-5);
      long long v = essential_codimension(lp.paths[i].samples[j], left) -
                    essential_codimension(lq.paths[i].samples[j], right);
      if (val && *val != v) {
        std::ostringstream os;
        os << "index_data: non-constant index across subinterval " << i << " (" << *val
           << " then " << v << ")";
        throw std::runtime_error(os.str());
      }
      val = v;
    }
    if (subs[i].has_infinite_end() && *val != 0) {
      std::ostringstream os;
      os << "index_data: nonzero index " << *val << " on subinterval " << i
         << " with an infinite end";
      throw std::runtime_error(os.str());
    }
    t[i] = *val;
  }
  return t;
}

struct DeformOutcome {
  EquivalenceCertificate certificate;
  std::optional<PartialIsometryPath> witness;
  std::vector<long long> measured_t;          // from index_data against the raw inputs
  std::vector<long long> common_targets;      // normalized jump data both sides reach
};

// Full pipeline: gate on the MvN decision, shift both liftings to the common
// jump targets the witness dictates, build the partial isometry, and confirm
// the measured index data reproduces the certificate witness.
inline DeformOutcome deform_pipeline(const LocalLifting& lp, const LocalLifting& lq,
                                     CircleMode mode = CircleMode::StrictCyclic) {
  JumpData kp = jump_classes(lp), kq = jump_classes(lq);
  DeformOutcome out;
  out.certificate = decide_mvn(kp, kq, lp.space, mode);
  if (out.certificate.verdict != Verdict::Equivalent) return out;

  const int n = lp.space.partition_size();
  // Where no end forces t_i = 0 the witness is free up to an additive
  // constant; the truncation pins that constant to the initial window-rank
  // difference, the only anchor an exact equal-tail isometry can realize.
  if (lp.space.forced_zero_indices().empty()) {
    const long long anchor = lp.paths[0].samples[0].window_rank() -
                             lq.paths[0].samples[0].window_rank();
    const GroupSpec z0 = GroupSpec::integers();
    const GroupElement shift = GroupElement::from_integer(
        z0, anchor - (*out.certificate.witness_t)[0].free_part()[0]);
    for (GroupElement& ti : *out.certificate.witness_t) ti = add(ti, shift);
  }
  const std::vector<GroupElement>& t = *out.certificate.witness_t;
  std::vector<long long> a(n + 1), b(n + 1);
  for (int i = 0; i <= n; ++i) {
    long long ti = t[i].free_part()[0];
    a[i] = std::max<long long>(ti, 0);
    b[i] = std::max<long long>(-ti, 0);
  }

  GroupSpec z = GroupSpec::integers();
  std::vector<GroupElement> targets;
  for (int i = 1; i <= n; ++i) {
    long long ki = kp.jumps[i - 1].free_part()[0];
    long long li = kq.jumps[i - 1].free_part()[0];
    long long ci = ki - a[i] + a[i - 1];
    if (ci != li - b[i] + b[i - 1])
      throw std::logic_error("deform_pipeline: two-sided jump targets disagree");
    targets.push_back(GroupElement::from_integer(z, ci));
    out.common_targets.push_back(ci);
  }
  std::optional<GroupElement> wrap_target;
  if (lp.space.has_wrap()) {
    long long c0 = kp.wrap->free_part()[0] + a[n] - a[0];
    if (c0 != kq.wrap->free_part()[0] + b[n] - b[0])
      throw std::runtime_error(
          "deform: circle witness requires the strict cyclic condition; the certificate "
          "ignored the wrap class");
    wrap_target = GroupElement::from_integer(z, c0);
  }
  JumpData target_data(z, std::move(targets), std::move(wrap_target));

  LocalLifting np = normalize_jumps(lp, target_data, a[0]);
  LocalLifting nq = normalize_jumps(lq, target_data, b[0]);
  out.witness = build_mvn_witness(np, nq);
  out.measured_t = index_data(*out.witness, lp, lq);

  for (int i = 0; i <= n; ++i)
    if (out.measured_t[i] != t[i].free_part()[0])
      throw std::logic_error("deform_pipeline: measured index data deviates from the certificate");
  return out;
}

}  // namespace corona
