#pragma once

#include <cmath>

#include "lowrank_sdp/manifold.hpp"

namespace lowrank_sdp {

enum class Smoothness { Smooth, Nonsmooth };

/// Objective f on symmetric n x n matrices, evaluated through the factor
/// f~(Y) = f(Y Y^T). Every model minimizes; maximization problems are
/// negated inside the model.
class CostModel {
 public:
  virtual ~CostModel() = default;

  Index dim() const { return n_; }
  virtual Smoothness smoothness() const = 0;

  double value(const Matrix& y) const;
  /// f~(y_new) - f~(y) for two factors of the same shape. Models with
  /// polynomial structure evaluate it from the difference y_new - y, which
  /// stays accurate when the change is far below the roundoff of f.
  double value_change(const Matrix& y, const Matrix& y_new) const;
  /// Gradient of f~ in R^{n x p}, equal to 2 ∇_X f(YY^T) Y.
  Matrix euclidean_gradient(const Matrix& y) const;
  /// Directional derivative of the Euclidean gradient along Z.
  Matrix hessian_vector(const Matrix& y, const Matrix& z) const;
  /// ∇_X f(YY^T) V for an n x k block V (never forms the n x n gradient
  /// unless the model itself is dense).
  Matrix apply_x_gradient(const Matrix& y, const Matrix& v) const;

 protected:
  explicit CostModel(Index n) : n_(n) {}

 private:
  virtual double do_value(const Matrix& y) const = 0;
  virtual double do_value_change(const Matrix& y, const Matrix& y_new) const {
    return do_value(y_new) - do_value(y);
  }
  virtual Matrix do_gradient(const Matrix& y) const = 0;
  virtual Matrix do_hessian_vector(const Matrix& y, const Matrix& z) const = 0;
  virtual Matrix do_apply_x_gradient(const Matrix& y, const Matrix& v) const = 0;

  Index n_;
};

double value(const CostModel& cost, const FactorPoint& y);
Matrix euclidean_gradient(const CostModel& cost, const FactorPoint& y);
Matrix hessian_vector(const CostModel& cost, const FactorPoint& y, const Matrix& z);

/// f(X) = Tr(A X).
class LinearCost final : public CostModel {
 public:
  explicit LinearCost(SparseMatrix a);
  Smoothness smoothness() const override { return Smoothness::Smooth; }
  const SparseMatrix& matrix() const { return a_; }

 private:
  double do_value(const Matrix& y) const override;
  double do_value_change(const Matrix& y, const Matrix& y_new) const override;
  Matrix do_gradient(const Matrix& y) const override;
  Matrix do_hessian_vector(const Matrix& y, const Matrix& z) const override;
  Matrix do_apply_x_gradient(const Matrix& y, const Matrix& v) const override;

  SparseMatrix a_;
};

/// Smoothed l1-penalized variance, f(X) = -Tr(ΣX) + ρ Σ_ij sqrt(X_ij^2 + κ^2).
class DspcaCost final : public CostModel {
 public:
  /// Σ given explicitly (n x n, symmetric).
  static DspcaCost from_covariance(Matrix sigma, double rho, double kappa);
  /// Σ = A^T A held in factored form through the m x n data matrix A.
  static DspcaCost from_data(Matrix data, double rho, double kappa);

  Smoothness smoothness() const override { return Smoothness::Smooth; }
  double rho() const { return rho_; }
  double kappa() const { return kappa_; }
  DspcaCost with_kappa(double kappa) const;

  /// Same objective with |X_ij| in place of the smoothing.
  double nonsmooth_value(const Matrix& y) const;
  Matrix apply_sigma(const Matrix& v) const;

 private:
  DspcaCost(Index n, Matrix sigma_or_data, bool factored, double rho, double kappa);

  double do_value(const Matrix& y) const override;
  double do_value_change(const Matrix& y, const Matrix& y_new) const override;
  Matrix do_gradient(const Matrix& y) const override;
  Matrix do_hessian_vector(const Matrix& y, const Matrix& z) const override;
  Matrix do_apply_x_gradient(const Matrix& y, const Matrix& v) const override;

  Matrix smoothing_weights(const Matrix& x) const;

  Matrix sigma_or_data_;
  bool factored_;
  double rho_;
  double kappa_;
};

/// f(Z) = -Σ_i Tr(Y^T (a_i a_i^T - ρ I) Y)_+ over Z = YY^T in S^m, where a_i
/// are the columns of the m x n data matrix and Tr(.)_+ sums the positive
/// eigenvalues.
class SpectralSpcaCost final : public CostModel {
 public:
  SpectralSpcaCost(Matrix data, double rho);
  Smoothness smoothness() const override { return Smoothness::Nonsmooth; }
  const Matrix& data() const { return data_; }
  double rho() const { return rho_; }

 private:
  double do_value(const Matrix& y) const override;
  Matrix do_gradient(const Matrix& y) const override;
  Matrix do_hessian_vector(const Matrix& y, const Matrix& z) const override;
  Matrix do_apply_x_gradient(const Matrix& y, const Matrix& v) const override;

  Matrix data_;
  double rho_;
};

/// f = -[μ f_cvx + (1-μ) f_ccv] with f_cvx(Z) = Σ_i (a_i^T Z a_i - ρ)_+ and
/// f_ccv the spectral term of SpectralSpcaCost. Nonconvex once μ > 0.
class HomotopyCost final : public CostModel {
 public:
  HomotopyCost(Matrix data, double rho, double mu);
  Smoothness smoothness() const override { return Smoothness::Nonsmooth; }
  double mu() const { return mu_; }

 private:
  double do_value(const Matrix& y) const override;
  Matrix do_gradient(const Matrix& y) const override;
  Matrix do_hessian_vector(const Matrix& y, const Matrix& z) const override;
  Matrix do_apply_x_gradient(const Matrix& y, const Matrix& v) const override;

  Matrix data_;
  double rho_;
  double mu_;
};

/// f_ccv(YY^T) = Σ_i Tr(Y^T (a_i a_i^T - ρI) Y)_+ (maximization sense).
double spectral_positive_sum(const Matrix& data, double rho, const Matrix& y);
/// f_cvx(YY^T) = Σ_i (||Y^T a_i||^2 - ρ)_+ (maximization sense).
double convex_positive_sum(const Matrix& data, double rho, const Matrix& y);

/// h_κ(x) = sqrt(x^2 + κ^2).
inline double smooth_abs(double x, double kappa) { return std::sqrt(x * x + kappa * kappa); }

}  // namespace lowrank_sdp
