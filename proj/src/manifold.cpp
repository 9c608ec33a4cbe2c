#include "lowrank_sdp/manifold.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

namespace lowrank_sdp {

namespace {

constexpr double kSingularGramRatio = 1e-14;
constexpr double kDegenerateConstraint = 1e-14;
constexpr double kOrthogonalityTol = 1e-12;
constexpr double kFeasibilityTol = 1e-12;

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_rows(const ConstraintSet& cs, const Matrix& y, const char* what) {
  if (y.rows() != cs.dim()) {
    throw DimensionMismatch(std::string(what) + ": expected " + std::to_string(cs.dim()) +
                            " rows, got " + shape(y));
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch(std::string(what) + ": shapes " + shape(a) + " and " + shape(b) +
                            " differ");
  }
}

}  // namespace

ConstraintSet ConstraintSet::elliptope(Index n) {
  if (n <= 0) throw DimensionMismatch("elliptope dimension must be positive");
  return ConstraintSet(ConstraintKind::Elliptope, n);
}

ConstraintSet ConstraintSet::spectahedron(Index n) {
  if (n <= 0) throw DimensionMismatch("spectahedron dimension must be positive");
  return ConstraintSet(ConstraintKind::Spectahedron, n);
}

ConstraintSet ConstraintSet::generic(Index n, std::vector<SparseMatrix> matrices, Vector rhs) {
  if (n <= 0) throw DimensionMismatch("constraint dimension must be positive");
  ConstraintSet cs(ConstraintKind::Generic, n);
  cs.matrices_ = std::move(matrices);
  cs.rhs_ = std::move(rhs);
  for (auto& a : cs.matrices_) a.makeCompressed();
  validate_constraints(cs);
  return cs;
}

Index ConstraintSet::count() const {
  switch (kind_) {
    case ConstraintKind::Elliptope:
      return n_;
    case ConstraintKind::Spectahedron:
      return 1;
    case ConstraintKind::Generic:
      return static_cast<Index>(matrices_.size());
  }
  return 0;
}

Vector ConstraintSet::rhs() const {
  if (kind_ == ConstraintKind::Generic) return rhs_;
  return Vector::Ones(count());
}

SparseMatrix ConstraintSet::matrix(Index i) const {
  if (i < 0 || i >= count()) throw DimensionMismatch("constraint index out of range");
  if (kind_ == ConstraintKind::Generic) return matrices_[static_cast<std::size_t>(i)];
  SparseMatrix a(n_, n_);
  if (kind_ == ConstraintKind::Elliptope) {
    a.insert(i, i) = 1.0;
  } else {
    a.setIdentity();
  }
  a.makeCompressed();
  return a;
}

Vector ConstraintSet::traces(const Matrix& u, const Matrix& w) const {
  switch (kind_) {
    case ConstraintKind::Elliptope:
      return (u.array() * w.array()).rowwise().sum();
    case ConstraintKind::Spectahedron:
      return Vector::Constant(1, detail::frob(u, w));
    case ConstraintKind::Generic: {
      Vector t(count());
      for (std::size_t i = 0; i < matrices_.size(); ++i) {
        t(static_cast<Index>(i)) = detail::frob(u, matrices_[i] * w);
      }
      return t;
    }
  }
  return {};
}

Vector ConstraintSet::squared_norms(const Matrix& y) const {
  switch (kind_) {
    case ConstraintKind::Elliptope:
      return y.rowwise().squaredNorm();
    case ConstraintKind::Spectahedron:
      return Vector::Constant(1, y.squaredNorm());
    case ConstraintKind::Generic: {
      Vector t(count());
      for (std::size_t i = 0; i < matrices_.size(); ++i) {
        t(static_cast<Index>(i)) = (matrices_[i] * y).squaredNorm();
      }
      return t;
    }
  }
  return {};
}

Matrix ConstraintSet::combine(const Vector& coeffs, const Matrix& w) const {
  switch (kind_) {
    case ConstraintKind::Elliptope:
      return coeffs.asDiagonal() * w;
    case ConstraintKind::Spectahedron:
      return coeffs(0) * w;
    case ConstraintKind::Generic: {
      Matrix out = Matrix::Zero(w.rows(), w.cols());
      for (std::size_t i = 0; i < matrices_.size(); ++i) {
        const double c = coeffs(static_cast<Index>(i));
        if (c != 0.0) out += c * (matrices_[i] * w);
      }
      return out;
    }
  }
  return {};
}

void validate_constraints(const ConstraintSet& cs) {
  if (cs.kind() != ConstraintKind::Generic) return;
  const auto& mats = cs.generic_matrices();
  const Index n = cs.dim();
  if (static_cast<Index>(mats.size()) != cs.rhs().size()) {
    throw DimensionMismatch("got " + std::to_string(mats.size()) + " constraint matrices but " +
                            std::to_string(cs.rhs().size()) + " right-hand sides");
  }
  std::vector<double> norms(mats.size());
  // support index -> constraints touching that row/column
  std::map<Index, std::vector<std::size_t>> touching;
  for (std::size_t i = 0; i < mats.size(); ++i) {
    const SparseMatrix& a = mats[i];
    if (a.rows() != n || a.cols() != n) {
      throw DimensionMismatch("constraint matrix " + std::to_string(i) + " is " +
                              std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                              ", expected " + std::to_string(n) + "x" + std::to_string(n));
    }
    const SparseMatrix at = a.transpose();
    if ((a - at).norm() != 0.0) {
      throw DimensionMismatch("constraint matrix " + std::to_string(i) + " is not symmetric");
    }
    norms[i] = a.norm();
    std::set<Index> cols;
    for (Index k = 0; k < a.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
        if (it.value() != 0.0) cols.insert(it.col());
      }
    }
    for (Index c : cols) touching[c].push_back(i);
  }
  // A_i A_j can only be nonzero when the column support of A_i meets the row
  // support of A_j; by symmetry both supports coincide.
  std::set<std::pair<std::size_t, std::size_t>> candidates;
  for (const auto& [idx, list] : touching) {
    for (std::size_t a = 0; a < list.size(); ++a) {
      for (std::size_t b = a + 1; b < list.size(); ++b) candidates.emplace(list[a], list[b]);
    }
  }
  for (const auto& [i, j] : candidates) {
    const double prod = SparseMatrix(mats[i] * mats[j]).norm();
    if (prod > kOrthogonalityTol * norms[i] * norms[j]) throw AssumptionViolation(i, j, prod);
  }
}

std::uint64_t fingerprint(const Matrix& y) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < len; ++k) {
      h ^= bytes[k];
      h *= 1099511628211ULL;
    }
  };
  const Index rows = y.rows();
  const Index cols = y.cols();
  mix(&rows, sizeof rows);
  mix(&cols, sizeof cols);
  mix(y.data(), sizeof(double) * static_cast<std::size_t>(y.size()));
  return h;
}

FactorPoint::FactorPoint(Matrix y) : y_(std::move(y)), tag_(fingerprint(y_)) {}

Vector residual(const ConstraintSet& cs, const Matrix& y) {
  require_rows(cs, y, "residual");
  return cs.traces(y, y) - cs.rhs();
}

namespace detail {

namespace {

Eigen::SelfAdjointEigenSolver<Matrix> gram_eigen(const Matrix& gram) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Vector& d = eig.eigenvalues();
  const double dmax = d.maxCoeff();
  if (!(dmax > 0.0) || d.minCoeff() < kSingularGramRatio * dmax) {
    std::ostringstream os;
    os << "Gram matrix Y^T Y is numerically singular (eigenvalues in [" << d.minCoeff() << ", "
       << dmax << "])";
    throw SingularGram(os.str());
  }
  return eig;
}

Matrix skew_solve(const Matrix& v, const Vector& d, const Matrix& rhs) {
  Matrix c = v.transpose() * rhs * v;
  for (Index i = 0; i < c.rows(); ++i) {
    for (Index j = 0; j < c.cols(); ++j) c(i, j) /= d(i) + d(j);
  }
  Matrix omega = v * c * v.transpose();
  return 0.5 * (omega - omega.transpose());
}

Vector checked_squared_norms(const ConstraintSet& cs, const Matrix& y) {
  Vector sq = cs.squared_norms(y);
  for (Index i = 0; i < sq.size(); ++i) {
    if (sq(i) < kDegenerateConstraint) {
      throw DegenerateConstraint("Tr(Y^T A_i^2 Y) = " + std::to_string(sq(i)) +
                                 " vanishes for constraint " + std::to_string(i));
    }
  }
  return sq;
}

}  // namespace

Matrix solve_skew_sylvester(const Matrix& gram, const Matrix& rhs) {
  const auto eig = gram_eigen(gram);
  return skew_solve(eig.eigenvectors(), eig.eigenvalues(), rhs);
}

Projector::Projector(const ConstraintSet& cs, const Matrix& y) : cs_(&cs), y_(y) {
  require_rows(cs, y, "project_horizontal");
  sq_norms_ = checked_squared_norms(cs, y);
  const auto eig = gram_eigen(y.transpose() * y);
  gram_vectors_ = eig.eigenvectors();
  gram_values_ = eig.eigenvalues();
}

Vector Projector::alpha(const Matrix& z) const {
  return cs_->traces(z, y_).cwiseQuotient(sq_norms_);
}

Matrix Projector::omega(const Matrix& z) const {
  const Matrix yz = y_.transpose() * z;
  return skew_solve(gram_vectors_, gram_values_, yz - yz.transpose());
}

HorizontalSplit Projector::split(const Matrix& z) const {
  require_same_shape(y_, z, "project_horizontal");
  HorizontalSplit s;
  s.alpha = alpha(z);
  s.normal = cs_->combine(s.alpha, y_);
  s.omega = omega(z);
  s.vertical = y_ * s.omega;
  s.horizontal = z - s.vertical - s.normal;
  return s;
}

Matrix Projector::operator()(const Matrix& z) const {
  require_same_shape(y_, z, "project_horizontal");
  Matrix h = z - cs_->combine(alpha(z), y_);
  h.noalias() -= y_ * omega(z);
  return h;
}

HorizontalSplit split(const ConstraintSet& cs, const Matrix& y, const Matrix& z) {
  require_same_shape(y, z, "project_horizontal");
  return Projector(cs, y).split(z);
}

Matrix project(const ConstraintSet& cs, const Matrix& y, const Matrix& z) {
  require_same_shape(y, z, "project_horizontal");
  return Projector(cs, y)(z);
}

Matrix project_tangent(const ConstraintSet& cs, const Matrix& y, const Matrix& z) {
  require_rows(cs, y, "project_tangent");
  require_same_shape(y, z, "project_tangent");
  return z - cs.combine(cs.traces(z, y).cwiseQuotient(checked_squared_norms(cs, y)), y);
}

Matrix restore_feasibility(const ConstraintSet& cs, const Matrix& y_tilde) {
  switch (cs.kind()) {
    case ConstraintKind::Elliptope: {
      const Vector norms = y_tilde.rowwise().norm();
      for (Index i = 0; i < norms.size(); ++i) {
        if (!(norms(i) > 0.0)) {
          throw RetractionFailure("row " + std::to_string(i) + " of Y+Z vanishes");
        }
      }
      return norms.cwiseInverse().asDiagonal() * y_tilde;
    }
    case ConstraintKind::Spectahedron: {
      const double norm = y_tilde.norm();
      if (!(norm > 0.0)) throw RetractionFailure("Y+Z vanishes");
      return y_tilde / norm;
    }
    case ConstraintKind::Generic: {
      const auto& mats = cs.generic_matrices();
      const Vector b = cs.rhs();
      Vector alpha = Vector::Zero(cs.count());
      for (std::size_t k = 0; k < mats.size(); ++k) {
        const Index i = static_cast<Index>(k);
        const Matrix ay = mats[k] * y_tilde;
        const double t1 = frob(y_tilde, ay);
        const double t2 = ay.squaredNorm();
        const double t3 = frob(ay, mats[k] * ay);
        const double c = t1 - b(i);
        // t3 a^2 + 2 t2 a + c = 0, smallest-magnitude real root
        if (std::abs(t3) <= 1e-300) {
          if (t2 == 0.0) {
            if (c != 0.0) {
              throw RetractionFailure("constraint " + std::to_string(i) +
                                      " cannot be restored along A_i Y");
            }
            continue;
          }
          alpha(i) = -c / (2.0 * t2);
          continue;
        }
        const double disc = t2 * t2 - t3 * c;
        if (disc < 0.0) {
          throw RetractionFailure("no real root restores constraint " + std::to_string(i));
        }
        const double q = -(t2 + std::copysign(std::sqrt(disc), t2));
        if (q == 0.0) {
          alpha(i) = 0.0;
          continue;
        }
        const double r1 = q / t3;
        const double r2 = c / q;
        alpha(i) = std::abs(r1) < std::abs(r2) ? r1 : r2;
      }
      return y_tilde + cs.combine(alpha, y_tilde);
    }
  }
  return y_tilde;
}

Matrix retract(const ConstraintSet& cs, const Matrix& y, const Matrix& z) {
  require_rows(cs, y, "retract");
  require_same_shape(y, z, "retract");
  if (z.isZero(0.0)) return y;
  return restore_feasibility(cs, y + z);
}

}  // namespace detail

FactorPoint random_feasible(const ConstraintSet& cs, Index p, std::uint64_t seed) {
  if (p < 1 || p > cs.dim()) {
    throw DimensionMismatch("random_feasible: rank " + std::to_string(p) +
                            " outside [1, " + std::to_string(cs.dim()) + "]");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix y(cs.dim(), p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < cs.dim(); ++i) y(i, j) = normal(rng);
  }
  if (cs.kind() == ConstraintKind::Generic) {
    // shrink so no constraint overshoots; the correction then only grows
    // along A_i Y and always has a real root for PSD A_i
    const Vector t = cs.traces(y, y);
    const Vector b = cs.rhs();
    double ratio = 0.0;
    for (Index i = 0; i < b.size(); ++i) {
      if (b(i) > 0.0) ratio = std::max(ratio, t(i) / b(i));
    }
    if (ratio > 1.0) y /= std::sqrt(ratio);
  }
  Matrix feasible;
  try {
    feasible = detail::restore_feasibility(cs, y);
  } catch (const RetractionFailure& e) {
    throw InfeasibleStart(std::string("random start cannot be made feasible: ") + e.what());
  }
  if (residual(cs, feasible).lpNorm<Eigen::Infinity>() >
      kFeasibilityTol * std::max(1.0, cs.rhs().lpNorm<Eigen::Infinity>())) {
    throw InfeasibleStart("random start violates the constraints after correction");
  }
  return FactorPoint(std::move(feasible));
}

TangentVector project_horizontal(const ConstraintSet& cs, const FactorPoint& y, const Matrix& z) {
  return TangentVector{detail::project(cs, y.matrix(), z), y.tag()};
}

FactorPoint retract(const ConstraintSet& cs, const FactorPoint& y, const TangentVector& z) {
  if (z.base_tag != y.tag()) throw BasePointMismatch("retract: tangent vector is based elsewhere");
  return FactorPoint(detail::retract(cs, y.matrix(), z.z));
}

double inner(const TangentVector& z1, const TangentVector& z2) {
  if (z1.base_tag != z2.base_tag) {
    throw BasePointMismatch("inner: tangent vectors live at different base points");
  }
  require_same_shape(z1.z, z2.z, "inner");
  return detail::frob(z1.z, z2.z);
}

}  // namespace lowrank_sdp
