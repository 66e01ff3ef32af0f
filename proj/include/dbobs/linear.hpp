#pragma once

// Deadbeat observers for x+ = A x, y = C x.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "dbobs/error.hpp"
#include "dbobs/subspace.hpp"

namespace dbobs {

/// Relative rank tolerance used for structural decisions on a system
/// (subspace chain, PBH ranks, class emptiness).
inline constexpr double kDefaultSystemTol = 1e-10;

class LinearSystem {
 public:
  LinearSystem(Matrix a, Matrix c, double tol = kDefaultSystemTol) : a_(std::move(a)), c_(std::move(c)), tol_(tol) {
    if (a_.rows() == 0 || a_.rows() != a_.cols()) throw InvalidInput("LinearSystem: A must be square and non-empty");
    if (c_.rows() == 0 || c_.cols() != a_.cols()) throw InvalidInput("LinearSystem: C must have as many columns as A");
    if (!a_.allFinite() || !c_.allFinite()) throw InvalidInput("LinearSystem: non-finite entries");
    if (!(tol_ > 0.0) || !std::isfinite(tol_)) throw InvalidInput("LinearSystem: tolerance must be positive");
  }

  const Matrix& A() const { return a_; }
  const Matrix& C() const { return c_; }
  double tol() const { return tol_; }
  Eigen::Index n() const { return a_.rows(); }
  Eigen::Index m() const { return c_.rows(); }

  LinearSystem with_tol(double tol) const { return LinearSystem(a_, c_, tol); }

  friend bool operator==(const LinearSystem& l, const LinearSystem& r) {
    return l.a_ == r.a_ && l.c_ == r.c_ && l.tol_ == r.tol_;
  }

 private:
  Matrix a_;
  Matrix c_;
  double tol_;
};

/// S_0 = N(C), S_k = A S_{k-1} ∩ S_0 for k = 1..n.
struct SubspaceChain {
  std::vector<Subspace> subspaces;

  std::vector<Eigen::Index> dims() const {
    std::vector<Eigen::Index> out;
    out.reserve(subspaces.size());
    for (const auto& s : subspaces) out.push_back(s.dim());
    return out;
  }
  const Subspace& operator[](std::size_t k) const { return subspaces.at(k); }
  const Subspace& last() const { return subspaces.back(); }
};

struct ObserverGain {
  Matrix L;
  double residual = 0.0;  // ‖(A − L C)^n‖_F
};

/// Plant and observer trajectories over k = 0..steps.
struct ObserverTrace {
  std::vector<Vector> plant_states;
  std::vector<Vector> observer_states;
  std::vector<double> errors;
  /// Input applied at each k; empty for autonomous systems. NaN marks an
  /// entry that was not supplied (the final row of an exactly-sized input).
  std::vector<double> inputs;
  std::optional<int> deadbeat_horizon;

  std::size_t size() const { return errors.size(); }
};

/// Default relative tolerance when deciding that a trace has converged.
inline constexpr double kHorizonTol = 1e-9;

/// Smallest k with errors[j] <= tol * max(1, |plant_states[j]|) for all j >= k.
inline std::optional<int> deadbeat_horizon(const ObserverTrace& trace, double tol = kHorizonTol) {
  std::optional<int> horizon;
  for (std::size_t k = trace.errors.size(); k-- > 0;) {
    const double scale = std::max(1.0, trace.plant_states[k].norm());
    if (!(trace.errors[k] <= tol * scale)) break;
    horizon = static_cast<int>(k);
  }
  return horizon;
}

namespace detail {

inline Matrix matrix_power(const Matrix& a, Eigen::Index k) {
  Matrix p = Matrix::Identity(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < k; ++i) p = a * p;
  return p;
}

inline void require_scalar_output(const LinearSystem& sys, const char* what) {
  if (sys.m() != 1) throw InvalidInput(std::string(what) + ": requires a scalar output (C with one row)");
}

inline void require_vector(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) throw InvalidInput(std::string(what) + ": vector dimension mismatch");
  if (!v.allFinite()) throw InvalidInput(std::string(what) + ": vector has non-finite entries");
}

/// Numerical rank of [A − λI; C] through its real embedding
/// [[Re, −Im], [Im, Re]], whose rank is twice the complex rank.
inline Eigen::Index pencil_rank(const LinearSystem& sys, std::complex<double> lambda) {
  const Eigen::Index n = sys.n();
  const Eigen::Index m = sys.m();
  Matrix re(n + m, n);
  re << sys.A() - lambda.real() * Matrix::Identity(n, n), sys.C();
  if (lambda.imag() == 0.0) {
    Eigen::JacobiSVD<Matrix> svd(re);
    return count_rank(svd.singularValues(), sys.tol());
  }
  Matrix im = Matrix::Zero(n + m, n);
  im.topRows(n) = -lambda.imag() * Matrix::Identity(n, n);
  Matrix emb(2 * (n + m), 2 * n);
  emb << re, -im, im, re;
  Eigen::JacobiSVD<Matrix> svd(emb);
  return count_rank(svd.singularValues(), sys.tol()) / 2;
}

inline Eigen::VectorXcd eigenvalues(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericError("eigenvalue solver did not converge");
  return es.eigenvalues();
}

/// Eigenvalues below this magnitude count as zero in the PBH test.
inline double zero_eigenvalue_threshold(const Matrix& a) {
  return std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, a.norm());
}

}  // namespace detail

inline SubspaceChain subspace_chain(const LinearSystem& sys) {
  SubspaceChain chain;
  chain.subspaces.reserve(static_cast<std::size_t>(sys.n()) + 1);
  const Subspace s0 = null_space(sys.C(), sys.tol());
  chain.subspaces.push_back(s0);
  for (Eigen::Index k = 1; k <= sys.n(); ++k) {
    chain.subspaces.push_back(intersect(image(sys.A(), chain.subspaces.back(), sys.tol()), s0, sys.tol()));
  }
  return chain;
}

/// rank [A − λI; C] = n at every nonzero eigenvalue of A.
inline bool pbh_deadbeat_observable(const LinearSystem& sys) {
  const Eigen::VectorXcd eig = detail::eigenvalues(sys.A());
  const double zero = detail::zero_eigenvalue_threshold(sys.A());
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    const std::complex<double> lambda = eig(i);
    if (std::abs(lambda) <= zero) continue;
    if (lambda.imag() < 0.0) continue;  // conjugate pair: same rank
    if (detail::pencil_rank(sys, lambda) < sys.n()) return false;
  }
  return true;
}

/// rank [A − λI; C] = n at every eigenvalue of A, zero included.
inline bool pbh_observable(const LinearSystem& sys) {
  const Eigen::VectorXcd eig = detail::eigenvalues(sys.A());
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    const std::complex<double> lambda = std::abs(eig(i)) <= detail::zero_eigenvalue_threshold(sys.A())
                                            ? std::complex<double>(0.0, 0.0)
                                            : eig(i);
    if (lambda.imag() < 0.0) continue;
    if (detail::pencil_rank(sys, lambda) < sys.n()) return false;
  }
  return true;
}

/// S_n = {0}.
inline bool deadbeat_observable_via_sets(const LinearSystem& sys) { return subspace_chain(sys).last().is_zero(); }

/// ‖(A − L C)^n‖_F by n − 1 left multiplications.
inline double nilpotency_residual(const Matrix& a, const Matrix& l, const Matrix& c) {
  if (a.rows() != a.cols() || l.rows() != a.rows() || c.cols() != a.cols() || l.cols() != c.rows()) {
    throw InvalidInput("nilpotency_residual: shapes are not conformal");
  }
  const Matrix closed = a - l * c;
  Matrix power = closed;
  for (Eigen::Index i = 1; i < a.rows(); ++i) power = closed * power;
  return power.norm();
}

/// Deadbeat gain by iterated subspace intersection (scalar output).
///
/// X starts as a basis of N(C); each of the n − 2 passes replaces it by a
/// basis of A X ∩ N(C), written as the null space of C stacked on the
/// annihilator rows of A X. What remains is one direction w spanning
/// A S_{n−2}, and L = A (A w) / (C A w).
///
/// The inner null-space calls use the default SVD rank convention so the
/// computation matches the reference routine step for step.
inline ObserverGain deadbeat_gain(const LinearSystem& sys) {
  detail::require_scalar_output(sys, "deadbeat_gain");
  const Matrix& a = sys.A();
  const Matrix& c = sys.C();
  const Eigen::Index n = sys.n();

  if (!pbh_observable(sys)) throw NotObservable("deadbeat_gain: the pair (C, A) is not observable");

  Matrix l;
  if (n == 1) {
    if (std::abs(c(0, 0)) <= sys.tol() * std::abs(a(0, 0))) {
      throw NotObservable("deadbeat_gain: C is numerically zero");
    }
    l = a / c(0, 0);
  } else {
    Matrix x = detail::null_basis(c, std::nullopt);
    for (Eigen::Index i = 1; i <= n - 2; ++i) {
      const Matrix ax = a * x;
      const Matrix annihilator = detail::null_basis(ax.transpose(), std::nullopt).transpose();
      Matrix stacked(1 + annihilator.rows(), n);
      stacked << c, annihilator;
      x = detail::null_basis(stacked, std::nullopt);
    }
    if (x.cols() != 1) {
      throw NotObservable("deadbeat_gain: iteration produced a subspace of dimension " + std::to_string(x.cols()) +
                          " instead of 1");
    }
    const Matrix l_pre = a * x;
    const double denom = (c * l_pre)(0, 0);
    if (std::abs(denom) < sys.tol() * a.norm() * l_pre.norm()) {
      throw NotObservable("deadbeat_gain: C L_pre vanishes");
    }
    l = a * l_pre / denom;
  }
  return ObserverGain{l, nilpotency_residual(a, l, c)};
}

/// Ackermann's formula with every observer pole at zero:
/// L = A^n O^{-1} e_n, O = [C; CA; ...; CA^{n-1}].
///
/// Solved as O^T K = (A^T)^n with LU and partial pivoting, L = K(n, :)^T,
/// mirroring the usual controller-form implementation applied to (A^T, C^T).
inline ObserverGain ackermann_gain(const LinearSystem& sys) {
  detail::require_scalar_output(sys, "ackermann_gain");
  const Matrix& a = sys.A();
  const Matrix& c = sys.C();
  const Eigen::Index n = sys.n();

  Matrix obs(n, n);
  Matrix row = c;
  for (Eigen::Index i = 0; i < n; ++i) {
    obs.row(i) = row;
    row = row * a;
  }
  const Matrix obs_t = obs.transpose();
  Eigen::PartialPivLU<Matrix> lu(obs_t);
  const double rcond = lu.rcond();
  if (!(rcond > static_cast<double>(n) * std::numeric_limits<double>::epsilon())) {
    throw NotObservable("ackermann_gain: observability matrix is numerically singular");
  }
  const Matrix at_pow = detail::matrix_power(a.transpose(), n);
  const Matrix k = lu.solve(at_pow);
  Matrix l = k.row(n - 1).transpose();
  return ObserverGain{l, nilpotency_residual(a, l, c)};
}

/// [x]_k: x + S_k when x ∈ R(A^k), otherwise empty.
inline AffineSet equivalence_class(const LinearSystem& sys, const Vector& x, int k) {
  detail::require_vector(x, sys.n(), "equivalence_class");
  if (k < 0 || k > sys.n()) throw InvalidInput("equivalence_class: k must lie in [0, n]");
  if (k > 0 && !column_space(detail::matrix_power(sys.A(), k), sys.tol()).contains(x)) {
    return AffineSet::empty(sys.n());
  }
  return AffineSet(x, subspace_chain(sys)[static_cast<std::size_t>(k)]);
}

/// [x]_k^+: x + A S_k when x ∈ R(A^{k+1}), otherwise empty. k = −1 gives
/// the whole state space.
inline AffineSet class_plus(const LinearSystem& sys, const Vector& x, int k) {
  detail::require_vector(x, sys.n(), "class_plus");
  if (k < -1 || k > sys.n()) throw InvalidInput("class_plus: k must lie in [-1, n]");
  if (k == -1) return AffineSet(x, Subspace::full(sys.n()));
  if (!column_space(detail::matrix_power(sys.A(), k + 1), sys.tol()).contains(x)) {
    return AffineSet::empty(sys.n());
  }
  // Any η ∈ R(A^k) with A η = x maps to A η = x, so x itself anchors the set.
  return AffineSet(x, image(sys.A(), subspace_chain(sys)[static_cast<std::size_t>(k)], sys.tol()));
}

/// Largest k ∈ {p−2, ..., 0} with [x̂]_k^+ ∩ C^{-1}(y) nonempty, else −1.
inline int pi_index(const LinearSystem& sys, const Vector& xhat, const Vector& y, int p) {
  detail::require_vector(xhat, sys.n(), "pi_index");
  detail::require_vector(y, sys.m(), "pi_index");
  if (p < 1) throw InvalidInput("pi_index: p must be at least 1");
  if (p - 2 > sys.n()) throw InvalidInput("pi_index: p - 2 exceeds the state dimension");
  const AffineSet measured = preimage(sys.C(), y, sys.tol());
  if (measured.is_empty()) return -1;
  for (int k = p - 2; k >= 0; --k) {
    const AffineSet cls = class_plus(sys, xhat, k);
    if (!affine_intersect(cls, measured, sys.tol()).is_empty()) return k;
  }
  return -1;
}

/// A x̂ + L (y − C x̂).
inline Vector luenberger_step(const LinearSystem& sys, const Matrix& l, const Vector& xhat, const Vector& y) {
  detail::require_vector(xhat, sys.n(), "luenberger_step");
  detail::require_vector(y, sys.m(), "luenberger_step");
  if (l.rows() != sys.n() || l.cols() != sys.m()) throw InvalidInput("luenberger_step: gain has the wrong shape");
  return sys.A() * xhat + l * (y - sys.C() * xhat);
}

/// Precomputed A S_{n−2} so repeated geometric steps reuse the chain.
class GeometricObserver {
 public:
  explicit GeometricObserver(LinearSystem sys)
      : sys_(std::move(sys)), direction_(Subspace::zero(sys_.n())) {
    detail::require_scalar_output(sys_, "geometric observer");
    if (sys_.n() < 2) throw InvalidInput("geometric observer: requires n >= 2");
    const SubspaceChain chain = subspace_chain(sys_);
    direction_ = image(sys_.A(), chain[static_cast<std::size_t>(sys_.n() - 2)], sys_.tol());
  }

  const LinearSystem& system() const { return sys_; }

  /// (x̂ + A S_{n−2}) ∩ {z : C z = y}.
  Vector intersection(const Vector& xhat, double y) const {
    detail::require_vector(xhat, sys_.n(), "geometric_observer_step");
    const AffineSet estimate(xhat, direction_);
    const AffineSet measured = preimage(sys_.C(), Vector::Constant(1, y), sys_.tol());
    const AffineSet meet = affine_intersect(estimate, measured, sys_.tol());
    if (meet.is_empty()) throw Degenerate("geometric_observer_step: estimate class misses the measurement set");
    if (!meet.is_singleton()) {
      throw Degenerate("geometric_observer_step: intersection has dimension " + std::to_string(meet.dim()));
    }
    return meet.point();
  }

  Vector step(const Vector& xhat, double y) const { return sys_.A() * intersection(xhat, y); }

 private:
  LinearSystem sys_;
  Subspace direction_;
};

/// A ((x̂ + A S_{n−2}) ∩ (x + S_0)) for a scalar measurement y = C x.
inline Vector geometric_observer_step(const LinearSystem& sys, const Vector& xhat, double y) {
  return GeometricObserver(sys).step(xhat, y);
}

/// Observer update rule for simulate_cascade.
struct GainStrategy {
  Matrix L;
};
struct GeometricStrategy {};
using ObserverStrategy = std::variant<GainStrategy, GeometricStrategy>;

/// Runs x+ = A x alongside the chosen observer for `steps` steps.
inline ObserverTrace simulate_cascade(const LinearSystem& sys, const ObserverStrategy& strategy, const Vector& x0,
                                      const Vector& xhat0, int steps, double horizon_tol = kHorizonTol) {
  detail::require_vector(x0, sys.n(), "simulate_cascade");
  detail::require_vector(xhat0, sys.n(), "simulate_cascade");
  if (steps < sys.n()) throw InvalidInput("simulate_cascade: steps must be at least n");

  std::optional<GeometricObserver> geometric;
  if (std::holds_alternative<GeometricStrategy>(strategy)) geometric.emplace(sys);

  ObserverTrace trace;
  Vector x = x0;
  Vector xhat = xhat0;
  for (int k = 0; k <= steps; ++k) {
    trace.plant_states.push_back(x);
    trace.observer_states.push_back(xhat);
    trace.errors.push_back((xhat - x).norm());
    if (k == steps) break;
    const Vector y = sys.C() * x;
    if (geometric) {
      xhat = geometric->step(xhat, y(0));
    } else {
      xhat = luenberger_step(sys, std::get<GainStrategy>(strategy).L, xhat, y);
    }
    x = sys.A() * x;
  }
  trace.deadbeat_horizon = deadbeat_horizon(trace, horizon_tol);
  return trace;
}

}  // namespace dbobs
