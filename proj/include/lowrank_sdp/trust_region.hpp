#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "lowrank_sdp/costs.hpp"
#include "lowrank_sdp/manifold.hpp"

namespace lowrank_sdp {

struct TrOptions {
  double delta0 = 1.0;
  double delta_max = 8.0;
  double rho_accept = 0.1;
  /// Riemannian gradient-norm tolerance; unset means 1e-8 * max(1, |f(Y0)|).
  std::optional<double> grad_tol;
  int max_outer = 500;
  /// Inner stopping exponent: ||r_j|| <= ||r_0|| min(||r_0||^theta, kappa_tcg).
  double theta = 1.0;
  double kappa_tcg = 0.1;
  /// Inner iteration cap; unset means n * p.
  std::optional<int> max_inner;

  void validate() const;
};

enum class TcgStop { NegativeCurvature, Boundary, Tolerance, MaxIterations };
/// Stagnated: the model predicts decreases below the roundoff of f for
/// several steps in a row while the gradient is still above tolerance.
enum class TrStatus { Converged, MaxIterations, RankDeficient, Stagnated };

const char* to_string(TcgStop stop);
const char* to_string(TrStatus status);

struct TrStepRecord {
  int iteration = 0;
  double cost = 0.0;       // cost at the iterate after the step decision
  double grad_norm = 0.0;  // Riemannian gradient norm at that iterate
  double radius = 0.0;     // radius used for the step
  std::optional<double> ratio;
  bool accepted = false;
  int inner_iterations = 0;
  std::optional<TcgStop> inner_stop;
  bool escape = false;     // saddle-escape line search rather than a TR step
};

struct TcgResult {
  Matrix step;
  Matrix hess_step;  // H[step]
  TcgStop stop = TcgStop::Tolerance;
  int iterations = 0;
  double model_value = 0.0;   // <g,s> + 1/2 <s,H s>
  double cauchy_value = 0.0;  // same at the Cauchy point
};

using LinearOperator = std::function<Matrix(const Matrix&)>;

/// Steihaug-Toint truncated CG on the model <g,s> + 1/2 <s,H[s]>, ||s|| <= delta.
/// `project`, when set, is reapplied to every residual so roundoff outside
/// the search space cannot accumulate in the null space of H.
TcgResult tcg_solve(const LinearOperator& hess, const Matrix& grad, double delta,
                    const TrOptions& opts, int max_inner, const LinearOperator& project = {});

TangentVector riemannian_gradient(const ConstraintSet& cs, const CostModel& cost,
                                  const FactorPoint& y);
TangentVector riemannian_hessian_vector(const ConstraintSet& cs, const CostModel& cost,
                                        const FactorPoint& y, const TangentVector& z);

struct TrResult {
  FactorPoint point;
  std::vector<TrStepRecord> records;
  TrStatus status = TrStatus::Converged;
  double initial_cost = 0.0;
  double initial_grad_norm = 0.0;
  double final_cost = 0.0;
  double final_grad_norm = 0.0;
  double grad_tol = 0.0;
  /// f(Y0) - f(after escape), when an escape line search ran.
  std::optional<double> escape_decrease;
};

/// Riemannian trust-region minimization from a feasible Y0. When `escape` is
/// given, a backtracking line search along it runs first (Y0 is then expected
/// to be a stationary point such as [Y | 0]). Rank deficiency reached during the run ends it with status
/// RankDeficient and the last accepted iterate.
TrResult minimize(const ConstraintSet& cs, const CostModel& cost, const FactorPoint& y0,
                  const TrOptions& opts = {},
                  const std::optional<TangentVector>& escape = std::nullopt);

namespace detail {

/// Riemannian gradient and Hessian operator at a fixed point, sharing the
/// quantities both need.
class RiemannianModel {
 public:
  RiemannianModel(const ConstraintSet& cs, const CostModel& cost, Matrix y);

  const Matrix& point() const { return y_; }

  const Matrix& gradient() const { return grad_; }
  double value() const { return value_; }
  Matrix hessian(const Matrix& z) const;
  Matrix project(const Matrix& z) const { return projector_(z); }

 private:
  const ConstraintSet& cs_;
  const CostModel& cost_model_;
  Matrix y_;
  Projector projector_;
  double value_;
  Matrix grad_;
  Vector alpha_;  // normal coefficients of the Euclidean gradient
  Matrix omega_;  // vertical coefficient of the Euclidean gradient
};

}  // namespace detail

}  // namespace lowrank_sdp
