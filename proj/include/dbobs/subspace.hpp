#pragma once

// Linear and affine subspaces of R^n held as orthonormal bases.
//
// Rank decisions follow the usual SVD convention: a singular value counts
// when it exceeds rel_tol * sigma_max, with rel_tol defaulting to
// max(rows, cols) * machine epsilon. Callers with better knowledge of the
// conditioning of their data pass an explicit relative tolerance.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "dbobs/error.hpp"

namespace dbobs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default tolerance for membership, containment and equality tests on
/// unit-scale data (orthonormal bases).
inline constexpr double kMembershipTol = 1e-9;

/// Orthonormality slack accepted when a basis is handed in from outside.
inline constexpr double kOrthonormalTol = 1e-10;

namespace detail {

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const char* what) {
  if (!all_finite(m)) {
    throw InvalidInput(std::string(what) + ": matrix has non-finite entries");
  }
}

inline double default_rank_tol(Eigen::Index rows, Eigen::Index cols) {
  return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
}

/// Numerical rank of the singular values `sv` (sorted descending).
inline Eigen::Index count_rank(const Vector& sv, double rel_tol) {
  if (sv.size() == 0) return 0;
  const double threshold = rel_tol * sv(0);
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > threshold) ++r;
  return r;
}

/// Null space of M; accepts M with zero rows (whole space).
inline Matrix null_basis(const Matrix& m, std::optional<double> rel_tol) {
  const Eigen::Index n = m.cols();
  if (m.rows() == 0) return Matrix::Identity(n, n);
  if (n == 0) return Matrix(0, 0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const double tol = rel_tol.value_or(default_rank_tol(m.rows(), n));
  const Eigen::Index r = count_rank(svd.singularValues(), tol);
  return svd.matrixV().rightCols(n - r);
}

/// Orthonormal basis of the column span of M; accepts M with zero columns.
/// Singular values count when they exceed rel_tol * scale, where scale
/// defaults to the largest singular value of M itself.
inline Matrix range_basis(const Matrix& m, std::optional<double> rel_tol, std::optional<double> scale = std::nullopt) {
  if (m.cols() == 0 || m.rows() == 0) return Matrix(m.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  const double tol = rel_tol.value_or(default_rank_tol(m.rows(), m.cols()));
  const double threshold = tol * scale.value_or(sv.size() > 0 ? sv(0) : 0.0);
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > threshold) ++r;
  return svd.matrixU().leftCols(r);
}

inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace detail

/// Linear subspace of R^n stored as an orthonormal basis (n x d). The zero
/// subspace has a basis with no columns.
class Subspace {
 public:
  /// Takes ownership of an orthonormal basis; rejects anything else.
  static Subspace from_orthonormal(Matrix basis, double tol = kMembershipTol) {
    detail::require_finite(basis, "Subspace");
    if (basis.rows() == 0) throw InvalidInput("Subspace: ambient dimension must be positive");
    if (basis.cols() > basis.rows()) throw InvalidInput("Subspace: more basis vectors than ambient dimension");
    if (!(tol > 0.0)) throw InvalidInput("Subspace: tolerance must be positive");
    const Matrix gram = basis.transpose() * basis;
    const Matrix eye = Matrix::Identity(basis.cols(), basis.cols());
    if (basis.cols() > 0 && (gram - eye).cwiseAbs().maxCoeff() > kOrthonormalTol) {
      throw InvalidInput("Subspace: basis columns are not orthonormal");
    }
    return Subspace(std::move(basis), tol);
  }

  /// Span of arbitrary columns, orthonormalized with the given rank tolerance.
  static Subspace span(const Matrix& vectors, std::optional<double> rel_tol = std::nullopt,
                       double tol = kMembershipTol) {
    detail::require_finite(vectors, "Subspace::span");
    if (vectors.rows() == 0) throw InvalidInput("Subspace::span: ambient dimension must be positive");
    return Subspace(detail::range_basis(vectors, rel_tol), tol);
  }

  static Subspace zero(Eigen::Index n, double tol = kMembershipTol) {
    if (n <= 0) throw InvalidInput("Subspace::zero: ambient dimension must be positive");
    return Subspace(Matrix(n, 0), tol);
  }

  static Subspace full(Eigen::Index n, double tol = kMembershipTol) {
    if (n <= 0) throw InvalidInput("Subspace::full: ambient dimension must be positive");
    return Subspace(Matrix::Identity(n, n), tol);
  }

  Eigen::Index ambient_dim() const { return basis_.rows(); }
  Eigen::Index dim() const { return basis_.cols(); }
  const Matrix& basis() const { return basis_; }
  double tol() const { return tol_; }

  bool is_zero() const { return dim() == 0; }
  bool is_full() const { return dim() == ambient_dim(); }

  /// Orthogonal projection onto the subspace.
  Vector project(const Vector& v) const {
    if (dim() == 0) return Vector::Zero(v.size());
    return basis_ * (basis_.transpose() * v);
  }

  /// Distance of v from the subspace.
  double distance(const Vector& v) const { return (v - project(v)).norm(); }

  /// v lies in the subspace when its residual is below tol * max(1, |v|).
  bool contains(const Vector& v) const {
    check_dim(v.size());
    return distance(v) <= tol_ * std::max(1.0, v.norm());
  }

  /// Every basis vector of `other` lies in this subspace.
  bool contains(const Subspace& other) const {
    check_dim(other.ambient_dim());
    if (other.dim() == 0) return true;
    const Matrix resid = other.basis() - (dim() == 0 ? Matrix::Zero(ambient_dim(), other.dim())
                                                     : Matrix(basis_ * (basis_.transpose() * other.basis())));
    const double slack = std::max(tol_, other.tol());
    return resid.colwise().norm().maxCoeff() <= slack;
  }

  Subspace with_tol(double tol) const {
    if (!(tol > 0.0)) throw InvalidInput("Subspace: tolerance must be positive");
    return Subspace(basis_, tol);
  }

 private:
  Subspace(Matrix basis, double tol) : basis_(std::move(basis)), tol_(tol) {}

  void check_dim(Eigen::Index n) const {
    if (n != ambient_dim()) throw InvalidInput("Subspace: ambient dimension mismatch");
  }

  Matrix basis_;
  double tol_;
};

/// {v : M v = 0}.
inline Subspace null_space(const Matrix& m, std::optional<double> rel_tol = std::nullopt) {
  if (m.rows() == 0 || m.cols() == 0) throw InvalidInput("null_space: matrix must be non-empty");
  detail::require_finite(m, "null_space");
  return Subspace::from_orthonormal(detail::null_basis(m, rel_tol));
}

/// Span of the columns of M.
inline Subspace column_space(const Matrix& m, std::optional<double> rel_tol = std::nullopt) {
  if (m.rows() == 0 || m.cols() == 0) throw InvalidInput("column_space: matrix must be non-empty");
  detail::require_finite(m, "column_space");
  return Subspace::from_orthonormal(detail::range_basis(m, rel_tol));
}

/// A S for square A.
inline Subspace image(const Matrix& a, const Subspace& s, std::optional<double> rel_tol = std::nullopt) {
  if (a.rows() != a.cols() || a.cols() != s.ambient_dim()) {
    throw InvalidInput("image: matrix must be square and match the subspace dimension");
  }
  detail::require_finite(a, "image");
  if (s.dim() == 0) return Subspace::zero(s.ambient_dim(), s.tol());
  // Rank is judged against |A|, not against A S alone: a direction that A
  // annihilates up to rounding must drop out even when nothing else survives.
  const double tol = rel_tol.value_or(detail::default_rank_tol(a.rows(), a.cols()));
  return Subspace::from_orthonormal(detail::range_basis(a * s.basis(), tol, detail::spectral_norm(a)), s.tol());
}

inline Subspace orth_complement(const Subspace& s) {
  const Eigen::Index n = s.ambient_dim();
  if (s.dim() == 0) return Subspace::full(n, s.tol());
  if (s.dim() == n) return Subspace::zero(n, s.tol());
  // The basis is orthonormal, so the rank of its transpose is exactly dim(s).
  Eigen::JacobiSVD<Matrix> svd(s.basis().transpose(), Eigen::ComputeFullV);
  return Subspace::from_orthonormal(svd.matrixV().rightCols(n - s.dim()), s.tol());
}

/// S ∩ T as the null space of the stacked annihilator rows of S and T.
inline Subspace intersect(const Subspace& s, const Subspace& t, std::optional<double> rel_tol = std::nullopt) {
  if (s.ambient_dim() != t.ambient_dim()) throw InvalidInput("intersect: ambient dimension mismatch");
  const double tol = std::max(s.tol(), t.tol());
  if (s.dim() == 0 || t.dim() == 0) return Subspace::zero(s.ambient_dim(), tol);
  const Matrix sc = orth_complement(s).basis();
  const Matrix tc = orth_complement(t).basis();
  Matrix stacked(sc.cols() + tc.cols(), s.ambient_dim());
  stacked << sc.transpose(), tc.transpose();
  return Subspace::from_orthonormal(detail::null_basis(stacked, rel_tol), tol);
}

/// Equal dimension and mutual containment.
inline bool subspace_equal(const Subspace& s, const Subspace& t) {
  if (s.ambient_dim() != t.ambient_dim()) throw InvalidInput("subspace_equal: ambient dimension mismatch");
  return s.dim() == t.dim() && s.contains(t) && t.contains(s);
}

/// Either empty or point + direction.
class AffineSet {
 public:
  static AffineSet empty(Eigen::Index n) {
    if (n <= 0) throw InvalidInput("AffineSet: ambient dimension must be positive");
    return AffineSet(n);
  }

  AffineSet(Vector point, Subspace direction) : n_(direction.ambient_dim()) {
    if (point.size() != direction.ambient_dim()) throw InvalidInput("AffineSet: point/direction dimension mismatch");
    if (!point.allFinite()) throw InvalidInput("AffineSet: point has non-finite entries");
    body_.emplace(Body{std::move(point), std::move(direction)});
  }

  /// Single point {x}.
  static AffineSet singleton(Vector x, double tol = kMembershipTol) {
    const auto n = x.size();
    return AffineSet(std::move(x), Subspace::zero(n, tol));
  }

  bool is_empty() const { return !body_.has_value(); }
  Eigen::Index ambient_dim() const { return n_; }

  /// -1 for the empty set.
  Eigen::Index dim() const { return is_empty() ? -1 : body_->direction.dim(); }
  bool is_singleton() const { return dim() == 0; }

  const Vector& point() const {
    if (is_empty()) throw InvalidInput("AffineSet: empty set has no point");
    return body_->point;
  }
  const Subspace& direction() const {
    if (is_empty()) throw InvalidInput("AffineSet: empty set has no direction");
    return body_->direction;
  }

  bool contains(const Vector& x) const {
    if (x.size() != n_) throw InvalidInput("AffineSet: dimension mismatch");
    if (is_empty()) return false;
    const Vector d = x - body_->point;
    const double scale = std::max({1.0, x.norm(), body_->point.norm()});
    return body_->direction.distance(d) <= body_->direction.tol() * scale;
  }

 private:
  struct Body {
    Vector point;
    Subspace direction;
  };

  explicit AffineSet(Eigen::Index n) : n_(n) {}

  Eigen::Index n_;
  std::optional<Body> body_;
};

/// Set equality of affine sets: same direction, and each point lies in the other.
inline bool affine_equal(const AffineSet& p, const AffineSet& q) {
  if (p.ambient_dim() != q.ambient_dim()) throw InvalidInput("affine_equal: ambient dimension mismatch");
  if (p.is_empty() || q.is_empty()) return p.is_empty() && q.is_empty();
  return subspace_equal(p.direction(), q.direction()) && p.contains(q.point()) && q.contains(p.point());
}

/// Exact intersection of two affine sets. The returned point is the
/// minimum-norm point of the intersection.
inline AffineSet affine_intersect(const AffineSet& p, const AffineSet& q,
                                  std::optional<double> rel_tol = std::nullopt) {
  if (p.ambient_dim() != q.ambient_dim()) throw InvalidInput("affine_intersect: ambient dimension mismatch");
  const Eigen::Index n = p.ambient_dim();
  if (p.is_empty() || q.is_empty()) return AffineSet::empty(n);

  const Subspace& u = p.direction();
  const Subspace& v = q.direction();
  const double tol = std::max(u.tol(), v.tol());
  const Vector rhs = q.point() - p.point();

  // p + U a = q + V b  <=>  [U, -V] [a; b] = q - p
  Vector anchor = p.point();
  if (u.dim() + v.dim() > 0) {
    Matrix sys(n, u.dim() + v.dim());
    sys << u.basis(), -v.basis();
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sys);
    cod.setThreshold(rel_tol.value_or(detail::default_rank_tol(sys.rows(), sys.cols())));
    const Vector ab = cod.solve(rhs);
    anchor += u.basis() * ab.head(u.dim());
  }
  const double scale = std::max({1.0, p.point().norm(), q.point().norm()});
  if (v.distance(anchor - q.point()) > tol * scale || u.distance(anchor - p.point()) > tol * scale) {
    return AffineSet::empty(n);
  }

  Subspace dir = intersect(u, v, rel_tol);
  Vector point = anchor - dir.project(anchor);
  return AffineSet(std::move(point), std::move(dir));
}

/// {z : M z = y}; empty when y is outside the range of M.
inline AffineSet preimage(const Matrix& m, const Vector& y, std::optional<double> rel_tol = std::nullopt,
                          double tol = kMembershipTol) {
  if (m.rows() == 0 || m.cols() == 0) throw InvalidInput("preimage: matrix must be non-empty");
  if (y.size() != m.rows()) throw InvalidInput("preimage: output dimension mismatch");
  detail::require_finite(m, "preimage");
  if (!y.allFinite()) throw InvalidInput("preimage: output has non-finite entries");
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(m);
  cod.setThreshold(rel_tol.value_or(detail::default_rank_tol(m.rows(), m.cols())));
  Vector z = cod.solve(y);
  const double scale = std::max({1.0, y.norm(), m.norm() * z.norm()});
  if ((m * z - y).norm() > tol * scale) return AffineSet::empty(m.cols());
  return AffineSet(std::move(z), null_space(m, rel_tol).with_tol(tol));
}

}  // namespace dbobs
