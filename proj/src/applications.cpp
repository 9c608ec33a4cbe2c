#include "lowrank_sdp/applications.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>

namespace lowrank_sdp {

// ---------------------------------------------------------------- max-cut

Graph::Graph(Index n, const std::vector<Edge>& edges) : n_(n) {
  if (n < 0) throw DimensionMismatch("Graph: negative vertex count");
  std::map<std::pair<Index, Index>, double> merged;
  for (const Edge& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n) {
      throw DimensionMismatch("Graph: edge endpoint outside [0, " + std::to_string(n) + ")");
    }
    if (e.i == e.j) throw DimensionMismatch("Graph: self-loop at vertex " + std::to_string(e.i));
    if (!std::isfinite(e.weight)) throw DimensionMismatch("Graph: non-finite edge weight");
    merged[{std::min(e.i, e.j), std::max(e.i, e.j)}] += e.weight;
  }
  edges_.reserve(merged.size());
  for (const auto& [key, w] : merged) edges_.push_back(Edge{key.first, key.second, w});
}

SparseMatrix Graph::laplacian() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(4 * edges_.size());
  for (const Edge& e : edges_) {
    trips.emplace_back(e.i, e.i, e.weight);
    trips.emplace_back(e.j, e.j, e.weight);
    trips.emplace_back(e.i, e.j, -e.weight);
    trips.emplace_back(e.j, e.i, -e.weight);
  }
  SparseMatrix l(n_, n_);
  l.setFromTriplets(trips.begin(), trips.end());
  return l;
}

double Graph::total_weight() const {
  double s = 0.0;
  for (const Edge& e : edges_) s += e.weight;
  return s;
}

double cut_value(const Graph& g, const Eigen::VectorXi& signs) {
  if (signs.size() != g.vertex_count()) throw DimensionMismatch("cut_value: wrong sign count");
  double s = 0.0;
  for (const Edge& e : g.edges()) {
    if (signs(e.i) != signs(e.j)) s += e.weight;
  }
  return s;
}

MaxCutBound maxcut_bound(const Graph& g, const MetaOptions& opts, std::uint64_t seed) {
  if (g.vertex_count() < 1) throw DimensionMismatch("maxcut_bound: empty graph");
  const ConstraintSet cs = ConstraintSet::elliptope(g.vertex_count());
  const LinearCost cost(SparseMatrix(-0.25 * g.laplacian()));
  MaxCutBound out;
  out.result = solve(cs, cost, opts, seed);
  out.bound = -out.result.objective;
  // The certificate's operator refers to `cost`, which dies here.
  out.result.certificate.sy_apply = nullptr;
  return out;
}

Cut maxcut_round(const Graph& g, const Matrix& y, int trials, std::uint64_t seed) {
  if (y.rows() != g.vertex_count()) throw DimensionMismatch("maxcut_round: factor has wrong rows");
  if (trials < 1) throw DimensionMismatch("maxcut_round: need at least one trial");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Cut best;
  best.value = -std::numeric_limits<double>::infinity();
  Vector r(y.cols());
  for (int t = 0; t < trials; ++t) {
    for (Index k = 0; k < r.size(); ++k) r(k) = normal(rng);
    const Vector proj = y * r;
    Eigen::VectorXi signs(proj.size());
    for (Index i = 0; i < proj.size(); ++i) signs(i) = proj(i) >= 0.0 ? 1 : -1;
    const double value = cut_value(g, signs);
    if (value > best.value) best = Cut{std::move(signs), value};
  }
  return best;
}

// ------------------------------------------------------------- sparse PCA

double rho_bar(const Matrix& data) {
  if (data.cols() == 0) return 0.0;
  return data.colwise().squaredNorm().maxCoeff();
}

SpcaInstance SpcaInstance::with_fraction(Matrix data, double fraction) {
  if (!(fraction >= 0.0)) throw DimensionMismatch("SpcaInstance: negative rho fraction");
  SpcaInstance inst{std::move(data), 0.0};
  inst.rho = fraction * inst.rho_bar();
  return inst;
}

double dspca_objective(const Matrix& data, double rho, const Vector& x) {
  const double l1 = x.lpNorm<1>();
  return (data * x).squaredNorm() - rho * l1 * l1;
}

double spectral_objective(const Matrix& data, double rho, const Vector& z) {
  return ((data.transpose() * z).array().square() - rho).cwiseMax(0.0).sum();
}

Vector dominant_direction(const Matrix& y) {
  const Eigen::JacobiSVD<Matrix> svd(y, Eigen::ComputeThinU);
  Vector u = svd.matrixU().col(0);
  Index imax = 0;
  u.cwiseAbs().maxCoeff(&imax);
  if (u(imax) < 0.0) u = -u;
  return u;
}

double largest_eigenvalue(const Matrix& y) {
  const Eigen::JacobiSVD<Matrix> svd(y);
  const double s = svd.singularValues()(0);
  return s * s;
}

namespace {

// Entries of X below the smoothing width are not resolved by the smoothed
// problem, so x_i counts when |x_i| ||x||_inf >= kappa.
SparseComponent dspca_component(const Matrix& data, double rho, double kappa, const Matrix& y) {
  SparseComponent c;
  c.vector = dominant_direction(y);
  const double top = c.vector.cwiseAbs().maxCoeff();
  const double cut = std::max(1e-6 * top, kappa / top);
  c.pattern.resize(static_cast<std::size_t>(c.vector.size()));
  for (Index i = 0; i < c.vector.size(); ++i) {
    const bool on = std::abs(c.vector(i)) >= cut;
    c.pattern[static_cast<std::size_t>(i)] = on;
    c.cardinality += on ? 1 : 0;
  }
  c.objective = dspca_objective(data, rho, c.vector);
  return c;
}

SparseComponent spectral_component(const Matrix& data, double rho, const Matrix& y) {
  SparseComponent c;
  c.vector = dominant_direction(y);
  const Vector proj = data.transpose() * c.vector;
  c.pattern.resize(static_cast<std::size_t>(proj.size()));
  for (Index i = 0; i < proj.size(); ++i) {
    const bool on = proj(i) * proj(i) >= rho;
    c.pattern[static_cast<std::size_t>(i)] = on;
    c.cardinality += on ? 1 : 0;
  }
  c.objective = spectral_objective(data, rho, c.vector);
  return c;
}

void require_instance(const SpcaInstance& inst, const char* what) {
  if (inst.data.rows() < 1 || inst.data.cols() < 1) {
    throw DimensionMismatch(std::string(what) + ": empty data matrix");
  }
  if (!inst.data.allFinite()) throw DimensionMismatch(std::string(what) + ": non-finite data");
  if (!(inst.rho >= 0.0)) throw DimensionMismatch(std::string(what) + ": rho must be >= 0");
}

}  // namespace

std::vector<double> default_kappas() { return {1e-1, 1e-2, 1e-3, 1e-4}; }

DspcaResult spca_dspca(const SpcaInstance& inst, const std::vector<double>& kappas,
                       const MetaOptions& opts, std::uint64_t seed) {
  require_instance(inst, "spca_dspca");
  if (kappas.empty()) throw DimensionMismatch("spca_dspca: empty smoothing ladder");
  for (std::size_t k = 0; k < kappas.size(); ++k) {
    if (!(kappas[k] > 0.0) || (k > 0 && !(kappas[k] < kappas[k - 1]))) {
      throw DimensionMismatch("spca_dspca: smoothing parameters must be positive and decreasing");
    }
  }
  const Index n = inst.data.cols();
  const ConstraintSet cs = ConstraintSet::spectahedron(n);
  const DspcaCost base = DspcaCost::from_data(inst.data, inst.rho, kappas.front());

  DspcaResult out;
  std::optional<Matrix> warm;
  for (const double kappa : kappas) {
    const DspcaCost cost = base.with_kappa(kappa);
    MetaResult res = solve(cs, cost, opts, seed, warm);
    res.certificate.sy_apply = nullptr;
    DspcaStage stage;
    stage.kappa = kappa;
    stage.smoothed_value = -res.objective;
    stage.nonsmooth_value = -cost.nonsmooth_value(res.y_star);
    stage.lambda_max = largest_eigenvalue(res.y_star);
    stage.rank = res.numerical_rank;
    stage.status = res.status;
    out.stages.push_back(stage);
    warm = compress_rank(cs, res.y_star, opts.rank_tol);
    out.result = std::move(res);
  }
  out.lambda_max = out.stages.back().lambda_max;
  out.component = dspca_component(inst.data, inst.rho, inst.rho > 0.0 ? kappas.back() : 0.0,
                                   out.result.y_star);
  return out;
}

namespace {

/// Starting factor off the zero plateau of the spectral cost: the best of
/// the dominant left singular vector and the normalized columns, completed
/// by further singular directions.
Matrix spectral_start(const SpcaInstance& inst, Index p) {
  const Index m = inst.data.rows();
  const Eigen::JacobiSVD<Matrix> svd(inst.data, Eigen::ComputeFullU);
  Vector best = svd.matrixU().col(0);
  double best_value = spectral_objective(inst.data, inst.rho, best);
  for (Index j = 0; j < inst.data.cols(); ++j) {
    const double norm = inst.data.col(j).norm();
    if (!(norm > 0.0)) continue;
    const Vector z = inst.data.col(j) / norm;
    const double v = spectral_objective(inst.data, inst.rho, z);
    if (v > best_value) {
      best_value = v;
      best = z;
    }
  }
  Matrix y(m, p);
  y.col(0) = best;
  Index col = 1;
  for (Index k = 0; k < m && col < p; ++k) {
    Vector u = svd.matrixU().col(k);
    u -= y.leftCols(col) * (y.leftCols(col).transpose() * u);
    u -= y.leftCols(col) * (y.leftCols(col).transpose() * u);
    const double norm = u.norm();
    if (norm < 1e-8) continue;
    y.col(col++) = u / norm;
  }
  return y / std::sqrt(static_cast<double>(p));
}

}  // namespace

SpectralResult spca_spectral(const SpcaInstance& inst, const MetaOptions& opts,
                             std::uint64_t seed) {
  require_instance(inst, "spca_spectral");
  const ConstraintSet cs = ConstraintSet::spectahedron(inst.data.rows());
  const SpectralSpcaCost cost(inst.data, inst.rho);
  SpectralResult out;
  out.result = solve(cs, cost, opts, seed, spectral_start(inst, opts.p0));
  out.result.certificate.sy_apply = nullptr;
  out.value = -out.result.objective;
  out.component = spectral_component(inst.data, inst.rho, out.result.y_star);
  if (inst.rho >= inst.rho_bar()) {
    // every clamped term is zero here; what the solver returns is roundoff
    out.value = 0.0;
    out.result.objective = 0.0;
    out.component.objective = 0.0;
    out.component.cardinality = 0;
    std::fill(out.component.pattern.begin(), out.component.pattern.end(), false);
  }
  return out;
}

std::vector<double> mu_schedule(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw DimensionMismatch("mu_schedule: step must lie in (0, 1]");
  std::vector<double> mus;
  const auto count = static_cast<int>(std::ceil(1.0 / step - 1e-9));
  for (int k = 0; k < count; ++k) mus.push_back(k * step);
  mus.push_back(1.0);
  return mus;
}

HomotopyResult spca_homotopy(const SpcaInstance& inst, const Matrix& z0,
                             const std::vector<double>& mus, const TrOptions& opts,
                             double rank_tol) {
  require_instance(inst, "spca_homotopy");
  const ConstraintSet cs = ConstraintSet::spectahedron(inst.data.rows());
  if (z0.rows() != cs.dim()) throw DimensionMismatch("spca_homotopy: factor has wrong rows");
  if (mus.empty()) throw DimensionMismatch("spca_homotopy: empty schedule");
  for (std::size_t k = 0; k < mus.size(); ++k) {
    if (!(mus[k] >= 0.0 && mus[k] <= 1.0) || (k > 0 && mus[k] < mus[k - 1])) {
      throw DimensionMismatch("spca_homotopy: schedule must be nondecreasing within [0, 1]");
    }
  }

  HomotopyResult out;
  Matrix y = compress_rank(cs, z0, rank_tol);
  for (const double mu : mus) {
    const HomotopyCost cost(inst.data, inst.rho, mu);
    TrStatus status = TrStatus::Converged;
    // A run that drops rank is resumed from the compressed factor.
    for (Index attempt = 0; attempt <= z0.cols(); ++attempt) {
      const TrResult tr = minimize(cs, cost, FactorPoint(y), opts);
      y = tr.point.matrix();
      status = tr.status;
      const Matrix compact = compress_rank(cs, y, rank_tol);
      const bool dropped = compact.cols() < y.cols();
      y = compact;
      if (status != TrStatus::RankDeficient || !dropped) break;
    }
    HomotopyStep step;
    step.mu = mu;
    step.f_ccv = spectral_positive_sum(inst.data, inst.rho, y);
    step.f_evd = spectral_objective(inst.data, inst.rho, dominant_direction(y));
    step.lambda_max = largest_eigenvalue(y);
    step.rank = y.cols();
    step.status = status;
    out.trace.push_back(step);
  }
  out.y = y;
  out.component = spectral_component(inst.data, inst.rho, y);
  const double lmax = out.trace.back().lambda_max;
  if (lmax < 1.0 - 1e-3) {
    HomotopyStalled err("spca_homotopy: largest eigenvalue " + std::to_string(lmax) +
                        " at the end of the schedule");
    err.set_last_iterate(y);
    throw err;
  }
  return out;
}

}  // namespace lowrank_sdp
