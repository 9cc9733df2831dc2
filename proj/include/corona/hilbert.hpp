#pragma once

// Numerical core on truncated l^2: operators carry a window and a declared
// diagonal 0/1 tail. "Compact" differences are exactly zero outside the
// window; that discipline is what makes trace-based codimension an exact
// integer cross-check for the rank-based Fredholm index.

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace corona {

// Exact: entries outside the window block equal the declared tail, verbatim.
// Declared: the tail is a promise about the untruncated continuation (used by
// general Fredholm inputs such as shifts); the stabilization check polices it.
enum class TailPolicy { Exact, Declared };

struct TruncatedOperator {
  int dim = 0;
  int window = 0;
  Eigen::MatrixXd entries;
  Eigen::VectorXd tail;  // length dim - window, each exactly 0.0 or 1.0
  TailPolicy policy = TailPolicy::Exact;

  TruncatedOperator() = default;
  TruncatedOperator(int n, int w, Eigen::MatrixXd m, Eigen::VectorXd t,
                    TailPolicy pol = TailPolicy::Exact)
      : dim(n), window(w), entries(std::move(m)), tail(std::move(t)), policy(pol) {
    if (window < 0 || dim < window + 8)
      throw std::invalid_argument("TruncatedOperator: dim must be at least window + 8");
    if (entries.rows() != dim || entries.cols() != dim)
      throw std::invalid_argument("TruncatedOperator: entries shape mismatch");
    if (tail.size() != dim - window)
      throw std::invalid_argument("TruncatedOperator: tail length mismatch");
    for (int i = 0; i < tail.size(); ++i)
      if (tail(i) != 0.0 && tail(i) != 1.0)
        throw std::invalid_argument("TruncatedOperator: tail entries must be exactly 0 or 1");
    if (policy == TailPolicy::Exact) validate_exact();
  }

  Eigen::Block<const Eigen::MatrixXd> window_block() const {
    return entries.block(0, 0, window, window);
  }

  // Same entries viewed with a wider window; the freed diagonal run joins the
  // block, the tail shrinks from the front.
  TruncatedOperator with_window(int w2) const {
    if (w2 < window || dim < w2 + 8)
      throw std::invalid_argument("with_window: widened window leaves no headroom");
    return TruncatedOperator(dim, w2, entries, tail.tail(dim - w2), policy);
  }

  static TruncatedOperator identity(int n, int w) {
    return TruncatedOperator(n, w, Eigen::MatrixXd::Identity(n, n),
                             Eigen::VectorXd::Ones(n - w));
  }

 private:
  void validate_exact() const {
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        if (i < window && j < window) continue;
        const double want = i == j ? tail(i - window) : 0.0;
        if (entries(i, j) != want)
          throw std::invalid_argument(
              "TruncatedOperator: entries outside the window do not match the declared tail");
      }
  }
};

inline double op_norm(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  return a.bdcSvd().singularValues()(0);
}

inline int numerical_rank(const Eigen::MatrixXd& a, double tol = 1e-8) {
  if (tol <= 0) throw std::invalid_argument("numerical_rank: tol must be positive");
  if (a.size() == 0 || a.rows() == 0 || a.cols() == 0) return 0;
  Eigen::VectorXd sv = a.bdcSvd().singularValues();
  const double cut = tol * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++r;
  return r;
}

struct ProjectionMatrix {
  TruncatedOperator op;

  ProjectionMatrix() = default;
  explicit ProjectionMatrix(TruncatedOperator o, double tol_sym = 1e-10,
                            double tol_idem = 1e-10)
      : op(std::move(o)) {
    if (op.policy != TailPolicy::Exact)
      throw std::invalid_argument("ProjectionMatrix: projections must carry an exact tail");
    if (op_norm(op.entries - op.entries.transpose()) > tol_sym)
      throw std::invalid_argument("ProjectionMatrix: not symmetric within tolerance");
    if (op_norm(op.entries * op.entries - op.entries) > tol_idem)
      throw std::invalid_argument("ProjectionMatrix: not idempotent within tolerance");
  }

  int dim() const { return op.dim; }
  int window() const { return op.window; }
  const Eigen::MatrixXd& entries() const { return op.entries; }
  const Eigen::VectorXd& tail() const { return op.tail; }

  // Orthonormal frame for the window part of the range (eigenvalues > 1/2).
  // Exact tails make the window block itself a projection, so the spectrum
  // clusters at 0 and 1.
  Eigen::MatrixXd window_frame() const {
    if (window() == 0) return Eigen::MatrixXd(0, 0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.window_block());
    int r = 0;
    for (int i = 0; i < window(); ++i)
      if (es.eigenvalues()(i) > 0.5) ++r;
    return es.eigenvectors().rightCols(r);
  }

  int window_rank() const { return static_cast<int>(window_frame().cols()); }
};

namespace detail {

inline void require_compatible(const TruncatedOperator& a, const TruncatedOperator& b,
                               const char* what) {
  if (a.dim != b.dim || a.window != b.window)
    throw std::invalid_argument(std::string(what) + ": dim/window mismatch");
}

// Kernel count of (cod . F) on the window part of ran(dom). Tail-compatible
// operators are bijective between the tails, so no kernel hides out there.
inline long long window_index(const TruncatedOperator& f, const ProjectionMatrix& dom,
                              const ProjectionMatrix& cod, int w) {
  const int n = f.dim;
  ProjectionMatrix dw(ProjectionMatrix(dom.op.with_window(w), 1e-8, 1e-8));
  ProjectionMatrix cw(ProjectionMatrix(cod.op.with_window(w), 1e-8, 1e-8));
  Eigen::MatrixXd bp = dw.window_frame();
  Eigen::MatrixXd bq = cw.window_frame();
  Eigen::MatrixXd bpn = Eigen::MatrixXd::Zero(n, bp.cols());
  bpn.topRows(w) = bp;
  Eigen::MatrixXd bqn = Eigen::MatrixXd::Zero(n, bq.cols());
  bqn.topRows(w) = bq;
  const long long ker = bp.cols() - numerical_rank(cod.op.entries * (f.entries * bpn));
  const long long coker = bq.cols() - numerical_rank(dom.op.entries * (f.entries.transpose() * bqn));
  return ker - coker;
}

}  // namespace detail

// Index of F : ran(dom) -> ran(cod). Computed from window-restricted kernel
// and cokernel counts, then confirmed with the window widened by 8; any
// disagreement means the truncation hides part of the kernel.
inline long long fredholm_index(const TruncatedOperator& f, const ProjectionMatrix& dom,
                                const ProjectionMatrix& cod) {
  detail::require_compatible(f, dom.op, "fredholm_index");
  detail::require_compatible(f, cod.op, "fredholm_index");
  if (f.dim < f.window + 16)
    throw std::runtime_error("truncation too small: no headroom to confirm the index");
  const double leak = op_norm((Eigen::MatrixXd::Identity(f.dim, f.dim) - cod.op.entries) *
                              f.entries * dom.op.entries);
  if (leak > 1e-8)
    throw std::invalid_argument("fredholm_index: F does not map the domain range into the codomain range");
  const long long at_w = detail::window_index(f, dom, cod, f.window);
  const long long at_w8 = detail::window_index(f, dom, cod, f.window + 8);
  if (at_w != at_w8) {
    std::ostringstream os;
    os << "truncation too small: index " << at_w << " at window " << f.window << " vs "
       << at_w8 << " at window " << f.window + 8;
    throw std::runtime_error(os.str());
  }
  return at_w;
}

// Integer class of p - q when that difference is window-supported. The trace
// must land on an integer and agree with the index of qp : ran p -> ran q.
inline long long essential_codimension(const ProjectionMatrix& p, const ProjectionMatrix& q) {
  detail::require_compatible(p.op, q.op, "essential_codimension");
  if (p.tail() != q.tail())
    throw std::invalid_argument("essential_codimension: difference not window-supported");
  const double tr = (p.entries() - q.entries()).trace();
  const long long r = std::llround(tr);
  if (std::abs(tr - static_cast<double>(r)) > 1e-6)
    throw std::runtime_error("essential_codimension: trace not within 1e-6 of an integer");
  TruncatedOperator qp(p.dim(), p.window(), q.entries() * p.entries(), p.op.tail,
                       TailPolicy::Declared);
  const long long idx = fredholm_index(qp, p, q);
  if (idx != r) {
    std::ostringstream os;
    os << "essential_codimension: trace method gives " << r << " but index method gives " << idx;
    throw std::runtime_error(os.str());
  }
  return r;
}

// Two-projection unitary U with U p U^T = p2, identity on the common tail.
inline TruncatedOperator transport_unitary(const ProjectionMatrix& p, const ProjectionMatrix& p2) {
  detail::require_compatible(p.op, p2.op, "transport_unitary");
  if (p.tail() != p2.tail())
    throw std::invalid_argument("transport_unitary: tails differ");
  const int w = p.window();
  const int n = p.dim();
  Eigen::MatrixXd dw = p.op.window_block() - p2.op.window_block();
  if (op_norm(dw) > 0.5) throw std::runtime_error("samples too coarse: projection gap exceeds 1/2");

  Eigen::MatrixXd iw = Eigen::MatrixXd::Identity(w, w);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(iw - dw * dw);
  Eigen::MatrixXd inv_sqrt = es.operatorInverseSqrt();
  Eigen::MatrixXd pw = p.op.window_block();
  Eigen::MatrixXd p2w = p2.op.window_block();
  Eigen::MatrixXd uw = (p2w * pw + (iw - p2w) * (iw - pw)) * inv_sqrt;

  Eigen::MatrixXd u = Eigen::MatrixXd::Identity(n, n);
  u.topLeftCorner(w, w) = uw;
  TruncatedOperator out(n, w, std::move(u), Eigen::VectorXd::Ones(n - w));
  if (op_norm(out.entries * out.entries.transpose() - Eigen::MatrixXd::Identity(n, n)) > 1e-8)
    throw std::runtime_error("transport_unitary: result not unitary within 1e-8");
  if (op_norm(out.entries * p.entries() * out.entries.transpose() - p2.entries()) > 1e-8)
    throw std::runtime_error("transport_unitary: conjugation residual exceeds 1e-8");
  return out;
}

// Exact partial isometry v with v^T v = p, v v^T = q, from the polar factor
// of q A p. Needs A to already connect the ranges at full rank.
inline TruncatedOperator polar_partial_isometry(const TruncatedOperator& a,
                                                const ProjectionMatrix& p,
                                                const ProjectionMatrix& q) {
  detail::require_compatible(a, p.op, "polar_partial_isometry");
  detail::require_compatible(a, q.op, "polar_partial_isometry");
  if (p.tail() != q.tail())
    throw std::invalid_argument("polar_partial_isometry: projection tails differ");
  for (int i = 0; i < p.tail().size(); ++i)
    if (p.tail()(i) == 1.0 && a.tail(i) != 1.0)
      throw std::invalid_argument("polar_partial_isometry: A must act as identity on the common tail");

  const int w = p.window();
  const int n = p.dim();
  const int rp = p.window_rank();
  const int rq = q.window_rank();
  if (rp != rq) {
    std::ostringstream os;
    os << "index obstruction: no exact partial isometry (window ranks " << rp << " vs " << rq
       << ")";
    throw std::runtime_error(os.str());
  }
  Eigen::MatrixXd c = q.op.window_block() * a.window_block() * p.op.window_block();
  Eigen::MatrixXd vm = Eigen::MatrixXd::Zero(n, n);
  for (int i = w; i < n; ++i) vm(i, i) = p.tail()(i - w);
  if (rp > 0) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    int rank_c = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > 1e-8 * std::max(1.0, sv(0))) ++rank_c;
    if (rank_c < rp)
      throw std::runtime_error("index obstruction: no exact partial isometry (connector rank deficient)");
    vm.topLeftCorner(w, w) =
        svd.matrixU().leftCols(rp) * svd.matrixV().leftCols(rp).transpose();
  }
  TruncatedOperator out(n, w, std::move(vm), p.op.tail);
  if (op_norm(out.entries.transpose() * out.entries - p.entries()) > 1e-8)
    throw std::runtime_error("polar_partial_isometry: v^T v residual exceeds 1e-8");
  if (op_norm(out.entries * out.entries.transpose() - q.entries()) > 1e-8)
    throw std::runtime_error("polar_partial_isometry: v v^T residual exceeds 1e-8");
  return out;
}

// Direct sum realized by interleaving coordinates, which keeps the result in
// window-then-tail form: even slots from a, odd slots from b.
inline TruncatedOperator dsum(const TruncatedOperator& a, const TruncatedOperator& b) {
  detail::require_compatible(a, b, "dsum");
  const int n = a.dim, w = a.window;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m(2 * i, 2 * j) = a.entries(i, j);
      m(2 * i + 1, 2 * j + 1) = b.entries(i, j);
    }
  Eigen::VectorXd t(2 * (n - w));
  for (int i = w; i < n; ++i) {
    t(2 * (i - w)) = a.tail(i - w);
    t(2 * (i - w) + 1) = b.tail(i - w);
  }
  TailPolicy pol = (a.policy == TailPolicy::Exact && b.policy == TailPolicy::Exact)
                       ? TailPolicy::Exact
                       : TailPolicy::Declared;
  return TruncatedOperator(2 * n, 2 * w, std::move(m), std::move(t), pol);
}

inline ProjectionMatrix dsum(const ProjectionMatrix& p, const ProjectionMatrix& q) {
  return ProjectionMatrix(dsum(p.op, q.op), 1e-8, 1e-8);
}

// Diagonal projection: explicit 0/1 pattern on the window, declared tail.
inline ProjectionMatrix indicator_projection(int n, int w, const std::vector<int>& window_ones,
                                             const Eigen::VectorXd& tail) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i : window_ones) {
    if (i < 0 || i >= w) throw std::invalid_argument("indicator_projection: index outside window");
    m(i, i) = 1.0;
  }
  for (int i = w; i < n; ++i) m(i, i) = tail(i - w);
  return ProjectionMatrix(TruncatedOperator(n, w, std::move(m), tail));
}

}  // namespace corona
