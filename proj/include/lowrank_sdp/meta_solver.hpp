#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "lowrank_sdp/costs.hpp"
#include "lowrank_sdp/lanczos.hpp"
#include "lowrank_sdp/manifold.hpp"
#include "lowrank_sdp/trust_region.hpp"

namespace lowrank_sdp {

struct MetaOptions {
  Index p0 = 1;
  /// Threshold on the smallest dual eigenvalue: S_Y is accepted as PSD when
  /// λ_min >= -epsilon.
  double epsilon = 1e-12;
  /// Singular values above this count towards the numerical rank.
  double rank_tol = 1e-6;
  /// Unset means n.
  std::optional<Index> p_max;
  /// Options for every inner trust-region solve. When inner.grad_tol is unset
  /// the solver uses min(1e-8, 0.1 * epsilon) * max(1, |f(Y0)|) so the
  /// stationarity residual stays below the certificate threshold.
  TrOptions inner;
  /// Dual eigenproblems up to this size use a dense eigendecomposition;
  /// larger ones run Lanczos on the matrix-free dual operator.
  Index dense_eig_limit = 800;
  LanczosOptions lanczos;

  void validate(Index n) const;
};

/// Dual certificate S_Y = ∇_X f(YY^T) - Σ λ_i A_i and its smallest eigenpair.
struct DualCertificate {
  Vector lambda;
  double smin = 0.0;
  Vector vmin;
  double residual = 0.0;  // ||S_Y vmin - smin vmin||
  /// V -> S_Y V. Captures the cost model by reference; valid while it lives.
  std::function<Matrix(const Matrix&)> sy_apply;
};

enum class MetaStatus { CertifiedOptimal, RankDeficientStop, ReachedPMax };
const char* to_string(MetaStatus status);

/// One inner trust-region solve at a fixed rank.
struct RankRun {
  Index p = 0;
  TrStatus status = TrStatus::Converged;
  double initial_cost = 0.0;
  double initial_grad_norm = 0.0;
  double final_cost = 0.0;
  double final_grad_norm = 0.0;
  std::optional<double> escape_decrease;
  /// Smallest dual eigenvalue at the end of this rank, when computed.
  std::optional<double> smin;
  std::vector<TrStepRecord> steps;
};

struct MetaResult {
  Matrix y_star;
  Index rank_p = 0;          // working rank when the loop stopped
  Index numerical_rank = 0;  // singular values of y_star above rank_tol
  double objective = 0.0;    // f~(y_star), minimization sense
  MetaStatus status = MetaStatus::CertifiedOptimal;
  DualCertificate certificate;
  std::vector<RankRun> runs;

  Matrix x() const { return y_star * y_star.transpose(); }
};

/// Closed-form multipliers λ_i = Tr(Y^T A_i ∇_X f Y) / Tr(Y^T A_i^2 Y).
Vector multipliers(const ConstraintSet& cs, const CostModel& cost, const Matrix& y);

DualCertificate certificate(const ConstraintSet& cs, const CostModel& cost, const Matrix& y,
                            Index dense_eig_limit = 800, const LanczosOptions& lanczos = {});

/// Number of singular values of Y strictly greater than rank_tol.
Index numerical_rank(const Matrix& y, double rank_tol);

/// Keeps the singular directions of Y above rank_tol and restores
/// feasibility. Returns Y unchanged when it already has full numerical rank.
Matrix compress_rank(const ConstraintSet& cs, const Matrix& y, double rank_tol);

/// Solves min f(X) s.t. Tr(A_i X) = b_i, X PSD by factored problems of
/// increasing rank, certified through the dual matrix. `y0`, when given,
/// must be feasible and fixes the initial rank.
MetaResult solve(const ConstraintSet& cs, const CostModel& cost, const MetaOptions& opts = {},
                 std::uint64_t seed = 0, const std::optional<Matrix>& y0 = std::nullopt);

}  // namespace lowrank_sdp
