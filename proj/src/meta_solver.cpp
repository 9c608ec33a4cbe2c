#include "lowrank_sdp/meta_solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace lowrank_sdp {

namespace {

constexpr double kFeasibilityTol = 1e-10;
constexpr double kDegenerateTol = 1e-14;
constexpr double kLooseGradTol = 1e-6;
constexpr int kProbeRestarts = 10;
constexpr Index kProbeMinDim = 80;

void require_feasible(const ConstraintSet& cs, const Matrix& y) {
  const Vector r = residual(cs, y);
  const Vector b = cs.rhs();
  for (Index i = 0; i < r.size(); ++i) {
    if (!(std::abs(r(i)) <= kFeasibilityTol * std::max(1.0, std::abs(b(i))))) {
      throw InfeasibleStart("solve: initial factor violates constraint " + std::to_string(i));
    }
  }
}

/// Eigenvector for the smallest eigenvalue `lowest` of the dense symmetric S,
/// by inverse iteration with a shift just below it (S - σI is then positive
/// definite and factors by Cholesky).
Vector smallest_eigenvector(const Matrix& s, double lowest, double scale) {
  const Index n = s.rows();
  const double tol = 1e-10 * std::max(scale, 1e-300);
  for (double gap = 1e-9; gap < 1.0; gap *= 100.0) {
    const double shift = lowest - gap * std::max(scale, 1e-300);
    const Eigen::LLT<Matrix> llt(s - shift * Matrix::Identity(n, n));
    if (llt.info() != Eigen::Success) continue;
    Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
    for (Index k = 0; k < n; ++k) v(k) += 1e-3 * std::sin(static_cast<double>(k + 1));
    v.normalize();
    for (int it = 0; it < 8; ++it) {
      v = llt.solve(v);
      v.normalize();
      if ((s * v - lowest * v).norm() <= tol) break;
    }
    return v;
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  return eig.eigenvectors().col(0);
}

// Costs of a run re-expressed relative to `anchor`, the last cost reported
// by the previous run at the same X. Each run evaluates f afresh at its start,
// which can differ from the accumulated value by an ulp; shifting by the
// (exact, nonpositive) changes keeps the reported sequence non-increasing.
double rebased(double anchor, double start, double c) { return anchor + (c - start); }

RankRun summarize(Index p, const TrResult& tr, std::optional<double> anchor) {
  const double base = anchor.value_or(tr.initial_cost);
  RankRun run;
  run.p = p;
  run.status = tr.status;
  run.initial_cost = base;
  run.initial_grad_norm = tr.initial_grad_norm;
  run.final_cost = rebased(base, tr.initial_cost, tr.final_cost);
  run.final_grad_norm = tr.final_grad_norm;
  run.escape_decrease = tr.escape_decrease;
  run.steps = tr.records;
  for (auto& rec : run.steps) rec.cost = rebased(base, tr.initial_cost, rec.cost);
  return run;
}

}  // namespace

void MetaOptions::validate(Index n) const {
  const Index cap = p_max.value_or(n);
  if (!(p0 >= 1 && p0 <= cap && cap <= n)) {
    throw DimensionMismatch("MetaOptions: need 1 <= p0 <= p_max <= n");
  }
  if (!(epsilon >= 0.0)) throw DimensionMismatch("MetaOptions: epsilon < 0");
  if (!(rank_tol >= 0.0)) throw DimensionMismatch("MetaOptions: rank_tol < 0");
  if (dense_eig_limit < 0) throw DimensionMismatch("MetaOptions: dense_eig_limit < 0");
  inner.validate();
}

const char* to_string(MetaStatus status) {
  switch (status) {
    case MetaStatus::CertifiedOptimal:
      return "CertifiedOptimal";
    case MetaStatus::RankDeficientStop:
      return "RankDeficientStop";
    case MetaStatus::ReachedPMax:
      return "ReachedPMax";
  }
  return "unknown";
}

Vector multipliers(const ConstraintSet& cs, const CostModel& cost, const Matrix& y) {
  if (y.rows() != cs.dim() || cost.dim() != cs.dim()) {
    throw DimensionMismatch("multipliers: factor, cost and constraints disagree on n");
  }
  const Vector denom = cs.squared_norms(y);
  for (Index i = 0; i < denom.size(); ++i) {
    if (!(denom(i) >= kDegenerateTol)) {
      throw DegenerateConstraint("multipliers: Tr(Y^T A_i^2 Y) vanishes for constraint " +
                                 std::to_string(i));
    }
  }
  return cs.traces(y, cost.apply_x_gradient(y, y)).cwiseQuotient(denom);
}

namespace {

DualCertificate dual_operator(const ConstraintSet& cs, const CostModel& cost, const Matrix& y) {
  DualCertificate cert;
  cert.lambda = multipliers(cs, cost, y);
  const Vector lambda = cert.lambda;
  const CostModel* model = &cost;
  const ConstraintSet* set = &cs;
  cert.sy_apply = [model, set, y, lambda](const Matrix& v) -> Matrix {
    return model->apply_x_gradient(y, v) - set->combine(lambda, v);
  };
  return cert;
}

/// A few Lanczos restarts on S_Y. A Ritz pair (θ, v) with residual r
/// brackets an eigenvalue in [θ - r, θ + r], so θ + r < -epsilon proves S_Y
/// indefinite and v is a usable escape direction. Returns nothing when the
/// probe is inconclusive.
std::optional<DualCertificate> indefinite_probe(const ConstraintSet& cs, const CostModel& cost,
                                                const Matrix& y, double epsilon,
                                                LanczosOptions lanczos) {
  DualCertificate cert = dual_operator(cs, cost, y);
  lanczos.max_restarts = std::min(lanczos.max_restarts, kProbeRestarts);
  EigenPair pair;
  try {
    pair = lanczos_smallest(cert.sy_apply, cs.dim(), lanczos);
  } catch (const EigSolverNoConvergence& e) {
    if (e.best_vector().size() != cs.dim()) return std::nullopt;
    pair.value = e.best_value();
    pair.vector = e.best_vector();
    pair.residual = (cert.sy_apply(pair.vector) - pair.value * pair.vector).norm();
  }
  if (!(pair.value + pair.residual < -epsilon)) return std::nullopt;
  cert.smin = pair.value;
  cert.vmin = std::move(pair.vector);
  cert.residual = (cert.sy_apply(cert.vmin) - cert.smin * cert.vmin).norm();
  return cert;
}

}  // namespace

DualCertificate certificate(const ConstraintSet& cs, const CostModel& cost, const Matrix& y,
                            Index dense_eig_limit, const LanczosOptions& lanczos) {
  DualCertificate cert = dual_operator(cs, cost, y);
  const Index n = cs.dim();
  if (n <= dense_eig_limit) {
    Matrix s = cert.sy_apply(Matrix::Identity(n, n));
    s = 0.5 * (s + s.transpose()).eval();
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
    cert.smin = eig.eigenvalues()(0);
    cert.vmin = smallest_eigenvector(s, cert.smin, eig.eigenvalues().cwiseAbs().maxCoeff());
  } else {
    const EigenPair pair = lanczos_smallest(cert.sy_apply, n, lanczos);
    cert.smin = pair.value;
    cert.vmin = pair.vector;
  }
  cert.residual = (cert.sy_apply(cert.vmin) - cert.smin * cert.vmin).norm();
  return cert;
}

Index numerical_rank(const Matrix& y, double rank_tol) {
  if (y.size() == 0) return 0;
  const Eigen::JacobiSVD<Matrix> svd(y);
  return static_cast<Index>((svd.singularValues().array() > rank_tol).count());
}

Matrix compress_rank(const ConstraintSet& cs, const Matrix& y, double rank_tol) {
  const Eigen::JacobiSVD<Matrix> svd(y, Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const Index r = std::max<Index>(1, (sv.array() > rank_tol).count());
  if (r == y.cols()) return y;
  return detail::restore_feasibility(cs, y * svd.matrixV().leftCols(r));
}

MetaResult solve(const ConstraintSet& cs, const CostModel& cost, const MetaOptions& opts,
                 std::uint64_t seed, const std::optional<Matrix>& y0) {
  const Index n = cs.dim();
  if (cost.dim() != n) throw DimensionMismatch("solve: cost and constraints disagree on n");
  MetaOptions o = opts;
  if (y0) {
    if (y0->rows() != n || y0->cols() < 1) throw DimensionMismatch("solve: bad initial factor");
    o.p0 = y0->cols();
  }
  o.validate(n);
  const Index p_max = o.p_max.value_or(n);

  Matrix y = y0 ? *y0 : random_feasible(cs, o.p0, seed).matrix();
  if (y0) require_feasible(cs, y);
  const double scale = std::max(1.0, std::abs(cost.value(y)));
  if (!o.inner.grad_tol) {
    o.inner.grad_tol = std::min(1e-8, 0.1 * o.epsilon) * scale;
  }

  MetaResult out;
  Index p = o.p0;
  std::optional<TangentVector> escape;
  const double tight_tol = *o.inner.grad_tol;
  TrOptions loose = o.inner;
  loose.grad_tol = std::max(tight_tol, kLooseGradTol * scale);
  while (true) {
    const auto run = [&](const TrOptions& inner, const std::optional<TangentVector>& esc) {
      try {
        return minimize(cs, cost, FactorPoint(y), inner, esc);
      } catch (Error& e) {
        e.set_provenance(static_cast<long>(p), 0);
        throw;
      }
    };
    const auto certify = [&](std::size_t steps) {
      try {
        if (n > kProbeMinDim) {
          if (auto probe = indefinite_probe(cs, cost, y, o.epsilon, o.lanczos)) return *probe;
        }
        return certificate(cs, cost, y, o.dense_eig_limit, o.lanczos);
      } catch (Error& e) {
        e.set_provenance(static_cast<long>(p), static_cast<long>(steps));
        if (!e.last_iterate()) e.set_last_iterate(y);
        throw;
      }
    };

    // A loose solve first: a clearly negative dual eigenvalue is already a
    // valid escape direction, so the rank need not be polished.
    TrResult tr = run(loose, escape);
    std::optional<double> anchor;
    if (!out.runs.empty()) anchor = out.runs.back().final_cost;
    out.runs.push_back(summarize(p, tr, anchor));
    y = tr.point.matrix();
    DualCertificate cert = certify(tr.records.size());
    const bool clear_escape = cert.smin < -std::max(o.epsilon, 10.0 * tr.final_grad_norm);
    if (!clear_escape && tr.status != TrStatus::RankDeficient && tr.final_grad_norm > tight_tol) {
      TrResult fine = run(o.inner, std::nullopt);
      RankRun& last = out.runs.back();
      const double base = last.final_cost;
      last.status = fine.status;
      last.final_cost = rebased(base, fine.initial_cost, fine.final_cost);
      last.final_grad_norm = fine.final_grad_norm;
      const int offset = static_cast<int>(last.steps.size());
      for (TrStepRecord rec : fine.records) {
        rec.iteration += offset;
        rec.cost = rebased(base, fine.initial_cost, rec.cost);
        last.steps.push_back(rec);
      }
      y = fine.point.matrix();
      tr.status = fine.status;
      cert = certify(last.steps.size());
    }

    // A column that collapses before the rest has converged stops the
    // solve away from a critical point. The surviving columns are solved
    // on, then padded back with zeros, which leaves X unchanged. Skipped
    // when dropping the column would raise the cost.
    while (tr.status == TrStatus::RankDeficient && out.runs.back().final_grad_norm > tight_tol) {
      RankRun& last = out.runs.back();
      const Matrix compact = compress_rank(cs, y, o.rank_tol);
      if (compact.cols() == y.cols() || !(cost.value(compact) <= last.final_cost)) break;
      TrResult more = minimize(cs, cost, FactorPoint(compact), o.inner);
      const int offset = static_cast<int>(last.steps.size());
      for (TrStepRecord rec : more.records) {
        rec.iteration += offset;
        last.steps.push_back(rec);
      }
      last.status = more.status;
      last.final_cost = more.final_cost;
      last.final_grad_norm = more.final_grad_norm;
      Matrix padded = Matrix::Zero(n, p);
      padded.leftCols(more.point.matrix().cols()) = more.point.matrix();
      y = std::move(padded);
      tr.status = more.status == TrStatus::Converged ? TrStatus::RankDeficient : more.status;
      cert = certify(last.steps.size());
      if (more.status != TrStatus::RankDeficient) break;
    }

    const auto finish = [&](MetaStatus status, DualCertificate c) {
      out.runs.back().smin = c.smin;
      out.y_star = y;
      out.rank_p = p;
      out.numerical_rank = numerical_rank(y, o.rank_tol);
      out.objective = cost.value(y);
      out.status = status;
      out.certificate = std::move(c);
      return out;
    };

    if (p == o.p0 && numerical_rank(y, o.rank_tol) < p) {
      return finish(MetaStatus::RankDeficientStop, std::move(cert));
    }
    const bool certified = cert.smin >= -o.epsilon;
    if (certified) return finish(MetaStatus::CertifiedOptimal, std::move(cert));
    if (tr.status == TrStatus::RankDeficient) {
      return finish(MetaStatus::RankDeficientStop, std::move(cert));
    }
    if (p + 1 > p_max) return finish(MetaStatus::ReachedPMax, std::move(cert));

    out.runs.back().smin = cert.smin;
    Matrix grown = Matrix::Zero(n, p + 1);
    grown.leftCols(p) = y;
    Matrix dir = Matrix::Zero(n, p + 1);
    dir.col(p) = cert.vmin;
    y = std::move(grown);
    escape = TangentVector{std::move(dir), fingerprint(y)};
    ++p;
  }
}

}  // namespace lowrank_sdp
