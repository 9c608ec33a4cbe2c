#pragma once

#include <cstdint>
#include <vector>

#include "lowrank_sdp/costs.hpp"
#include "lowrank_sdp/manifold.hpp"
#include "lowrank_sdp/meta_solver.hpp"
#include "lowrank_sdp/trust_region.hpp"

namespace lowrank_sdp {

// ---------------------------------------------------------------- max-cut

struct Edge {
  Index i = 0;  // 0-based, i < j
  Index j = 0;
  double weight = 1.0;
};

/// Undirected weighted graph without self-loops. Duplicate edges are merged
/// by summing their weights.
class Graph {
 public:
  Graph() = default;
  /// Throws DimensionMismatch on out-of-range or self-loop edges and
  /// NonFinite-style DimensionMismatch on non-finite weights.
  Graph(Index n, const std::vector<Edge>& edges);

  Index vertex_count() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  /// L = D - W.
  SparseMatrix laplacian() const;
  double total_weight() const;

 private:
  Index n_ = 0;
  std::vector<Edge> edges_;
};

/// Sum of weights of the edges whose endpoints get different signs.
double cut_value(const Graph& g, const Eigen::VectorXi& signs);

struct MaxCutBound {
  MetaResult result;
  double bound = 0.0;  // -(optimal value of min Tr(AX), A = -L/4)
};

MaxCutBound maxcut_bound(const Graph& g, const MetaOptions& opts = {}, std::uint64_t seed = 0);

struct Cut {
  Eigen::VectorXi signs;  // +1 / -1 per vertex
  double value = 0.0;
};

/// Best of `trials` random-hyperplane roundings sign(Y r), sign(0) = +1.
Cut maxcut_round(const Graph& g, const Matrix& y, int trials, std::uint64_t seed);

// ------------------------------------------------------------- sparse PCA

/// max_i ||a_i||^2 over the columns of the data matrix.
double rho_bar(const Matrix& data);

struct SpcaInstance {
  Matrix data;  // m x n, columns a_i
  double rho = 0.0;

  static SpcaInstance with_fraction(Matrix data, double fraction);
  double rho_bar() const { return lowrank_sdp::rho_bar(data); }
  Matrix covariance() const { return data.transpose() * data; }
};

struct SparseComponent {
  Vector vector;              // unit x (n) for DSPCA, unit z (m) for the spectral paths
  std::vector<bool> pattern;  // length n
  Index cardinality = 0;
  double objective = 0.0;     // variance minus penalty, maximization sense
};

/// Variance minus penalty of a unit x: x^T Σ x - ρ ||x||_1^2.
double dspca_objective(const Matrix& data, double rho, const Vector& x);
/// Σ_i ((a_i^T z)^2 - ρ)_+ for a unit z.
double spectral_objective(const Matrix& data, double rho, const Vector& z);

/// Dominant left singular vector of Y, i.e. the dominant eigenvector of YY^T,
/// with its largest entry made positive.
Vector dominant_direction(const Matrix& y);
/// Largest eigenvalue of YY^T.
double largest_eigenvalue(const Matrix& y);

struct DspcaStage {
  double kappa = 0.0;
  double smoothed_value = 0.0;   // maximization sense
  double nonsmooth_value = 0.0;  // maximization sense, |.| in place of the smoothing
  double lambda_max = 0.0;
  Index rank = 0;
  MetaStatus status = MetaStatus::CertifiedOptimal;
};

struct DspcaResult {
  MetaResult result;  // solve at the last smoothing parameter
  SparseComponent component;
  double lambda_max = 0.0;
  std::vector<DspcaStage> stages;
};

std::vector<double> default_kappas();

/// Smoothed l1-penalized PCA on the spectahedron, solved for each smoothing
/// parameter in turn and warm-started from the previous solution.
DspcaResult spca_dspca(const SpcaInstance& inst, const std::vector<double>& kappas = default_kappas(),
                       const MetaOptions& opts = {}, std::uint64_t seed = 0);

struct SpectralResult {
  MetaResult result;
  SparseComponent component;
  double value = 0.0;  // optimal relaxation value (maximization sense)
};

/// Starts from the best of the dominant data direction and the normalized
/// columns; `seed` is kept for interface symmetry and does not affect the run.
SpectralResult spca_spectral(const SpcaInstance& inst, const MetaOptions& opts = {},
                             std::uint64_t seed = 0);

/// 0, step, 2 step, ..., 1.
std::vector<double> mu_schedule(double step = 0.05);

struct HomotopyStep {
  double mu = 0.0;
  double f_ccv = 0.0;
  double f_evd = 0.0;
  double lambda_max = 0.0;
  Index rank = 0;
  TrStatus status = TrStatus::Converged;
};

struct HomotopyResult {
  Matrix y;
  SparseComponent component;
  std::vector<HomotopyStep> trace;
};

/// Drives a spectahedron factor towards a rank-one point by local solves of
/// μ f_cvx + (1-μ) f_ccv for increasing μ. Throws HomotopyStalled when the
/// largest eigenvalue at the end is below 1 - 1e-3.
HomotopyResult spca_homotopy(const SpcaInstance& inst, const Matrix& z0,
                             const std::vector<double>& mus = mu_schedule(),
                             const TrOptions& opts = {}, double rank_tol = 1e-6);

}  // namespace lowrank_sdp
