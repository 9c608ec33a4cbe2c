#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <vector>

#include "lowrank_sdp/errors.hpp"

namespace lowrank_sdp {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

enum class ConstraintKind { Elliptope, Spectahedron, Generic };

/// Linear equality constraints Tr(A_i X) = b_i with pairwise orthogonal A_i.
///
/// The elliptope (diag(X) = 1) and the spectahedron (Tr X = 1) never
/// materialize their constraint matrices; their operations reduce to row
/// norms and the Frobenius norm.
class ConstraintSet {
 public:
  static ConstraintSet elliptope(Index n);
  static ConstraintSet spectahedron(Index n);
  /// Builds and validates a generic set. Throws AssumptionViolation or
  /// DimensionMismatch.
  static ConstraintSet generic(Index n, std::vector<SparseMatrix> matrices, Vector rhs);

  ConstraintKind kind() const { return kind_; }
  Index dim() const { return n_; }
  Index count() const;
  Vector rhs() const;
  /// Explicit A_i (built on the fly for the structured kinds).
  SparseMatrix matrix(Index i) const;
  const std::vector<SparseMatrix>& generic_matrices() const { return matrices_; }

  /// m-vector of Tr(U^T A_i W).
  Vector traces(const Matrix& u, const Matrix& w) const;
  /// m-vector of Tr(Y^T A_i^2 Y).
  Vector squared_norms(const Matrix& y) const;
  /// sum_i c_i A_i W.
  Matrix combine(const Vector& coeffs, const Matrix& w) const;

 private:
  ConstraintSet(ConstraintKind kind, Index n) : kind_(kind), n_(n) {}

  ConstraintKind kind_;
  Index n_;
  std::vector<SparseMatrix> matrices_;
  Vector rhs_;
};

/// Checks symmetry of every A_i and pairwise orthogonality A_i A_j = 0.
void validate_constraints(const ConstraintSet& cs);

/// A feasible n x p factor Y, representative of the class {YQ : Q orthogonal}.
class FactorPoint {
 public:
  explicit FactorPoint(Matrix y);

  const Matrix& matrix() const { return y_; }
  Index dim() const { return y_.rows(); }
  Index rank() const { return y_.cols(); }
  /// Fingerprint of the stored entries, used to tag tangent vectors.
  std::uint64_t tag() const { return tag_; }

 private:
  Matrix y_;
  std::uint64_t tag_;
};

/// A tangent direction together with the tag of its base point.
struct TangentVector {
  Matrix z;
  std::uint64_t base_tag = 0;
};

std::uint64_t fingerprint(const Matrix& y);

Vector residual(const ConstraintSet& cs, const Matrix& y);

/// Seeded random feasible factor of rank p.
FactorPoint random_feasible(const ConstraintSet& cs, Index p, std::uint64_t seed);

/// Projection onto the horizontal space at Y (removes the vertical YΩ and
/// normal Σ α_i A_i Y components).
TangentVector project_horizontal(const ConstraintSet& cs, const FactorPoint& y, const Matrix& z);
FactorPoint retract(const ConstraintSet& cs, const FactorPoint& y, const TangentVector& z);
double inner(const TangentVector& z1, const TangentVector& z2);

/// Pieces of the horizontal projection, exposed for diagnostics and tests.
struct HorizontalSplit {
  Matrix horizontal;
  Matrix vertical;  // YΩ
  Matrix normal;    // Σ α_i A_i Y
  Matrix omega;
  Vector alpha;
};

namespace detail {

/// Horizontal projection at a fixed Y, with the Gram eigendecomposition and
/// the constraint norms computed once.
class Projector {
 public:
  Projector(const ConstraintSet& cs, const Matrix& y);

  HorizontalSplit split(const Matrix& z) const;
  Matrix operator()(const Matrix& z) const;

 private:
  Vector alpha(const Matrix& z) const;
  Matrix omega(const Matrix& z) const;

  const ConstraintSet* cs_;
  Matrix y_;
  Vector sq_norms_;
  Matrix gram_vectors_;
  Vector gram_values_;
};

HorizontalSplit split(const ConstraintSet& cs, const Matrix& y, const Matrix& z);
Matrix project(const ConstraintSet& cs, const Matrix& y, const Matrix& z);
/// Removes only the normal component (valid at rank-deficient Y).
Matrix project_tangent(const ConstraintSet& cs, const Matrix& y, const Matrix& z);
/// Solves Ω G + G Ω = C for skew Ω, with G = Y^T Y symmetric positive definite.
Matrix solve_skew_sylvester(const Matrix& gram, const Matrix& rhs);
Matrix retract(const ConstraintSet& cs, const Matrix& y, const Matrix& z);
/// Moves an arbitrary Ỹ onto the feasible set along the normal directions.
Matrix restore_feasibility(const ConstraintSet& cs, const Matrix& y_tilde);

inline double frob(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

}  // namespace detail

}  // namespace lowrank_sdp
