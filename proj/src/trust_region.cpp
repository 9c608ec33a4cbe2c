#include "lowrank_sdp/trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lowrank_sdp {

namespace {

constexpr double kShrink = 0.25;
constexpr double kExpand = 2.0;
constexpr double kShrinkBelow = 0.25;
constexpr double kExpandAbove = 0.75;
constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;
// Consecutive steps whose predicted decrease is below the roundoff of f
// before the run is declared stagnated.
constexpr int kStagnationSteps = 10;

using detail::frob;

}  // namespace

void TrOptions::validate() const {
  if (!(rho_accept > 0.0 && rho_accept < 0.25)) {
    throw DimensionMismatch("TrOptions: rho_accept must lie in (0, 0.25)");
  }
  if (!(delta0 > 0.0 && delta0 <= delta_max)) {
    throw DimensionMismatch("TrOptions: need 0 < delta0 <= delta_max");
  }
  if (grad_tol && !(*grad_tol >= 0.0)) throw DimensionMismatch("TrOptions: grad_tol < 0");
  if (max_outer < 0) throw DimensionMismatch("TrOptions: max_outer < 0");
  if (!(theta > 0.0) || !(kappa_tcg > 0.0 && kappa_tcg < 1.0)) {
    throw DimensionMismatch("TrOptions: need theta > 0 and kappa_tcg in (0, 1)");
  }
  if (max_inner && *max_inner < 1) throw DimensionMismatch("TrOptions: max_inner < 1");
}

const char* to_string(TcgStop stop) {
  switch (stop) {
    case TcgStop::NegativeCurvature:
      return "negative_curvature";
    case TcgStop::Boundary:
      return "boundary";
    case TcgStop::Tolerance:
      return "tolerance";
    case TcgStop::MaxIterations:
      return "max_iterations";
  }
  return "unknown";
}

const char* to_string(TrStatus status) {
  switch (status) {
    case TrStatus::Converged:
      return "Converged";
    case TrStatus::MaxIterations:
      return "MaxIterations";
    case TrStatus::RankDeficient:
      return "RankDeficient";
    case TrStatus::Stagnated:
      return "Stagnated";
  }
  return "unknown";
}

TcgResult tcg_solve(const LinearOperator& hess, const Matrix& grad, double delta,
                    const TrOptions& opts, int max_inner, const LinearOperator& project) {
  TcgResult res;
  res.step = Matrix::Zero(grad.rows(), grad.cols());
  res.hess_step = Matrix::Zero(grad.rows(), grad.cols());
  Matrix r = grad;
  double rr = r.squaredNorm();
  const double r0 = std::sqrt(rr);
  if (r0 == 0.0) return res;

  const double stop_norm = r0 * std::min(std::pow(r0, opts.theta), opts.kappa_tcg);
  const double delta2 = delta * delta;
  Matrix d = -r;
  double e_pe = 0.0;  // <s, s>
  double e_pd = 0.0;  // <s, d>
  double d_pd = rr;   // <d, d>
  Matrix cauchy_step;
  Matrix cauchy_hstep;

  res.stop = TcgStop::MaxIterations;
  res.iterations = max_inner;
  for (int j = 0; j < max_inner; ++j) {
    const Matrix hd = hess(d);
    const double dhd = frob(d, hd);
    if (j == 0) {
      // d = -g, so dhd = <g, H g>
      const double tau = dhd <= 0.0 ? delta / r0 : std::min(rr / dhd, delta / r0);
      cauchy_step = tau * d;
      cauchy_hstep = tau * hd;
      res.cauchy_value = -tau * rr + 0.5 * tau * tau * dhd;
    }
    const double alpha = rr / dhd;
    const double e_pe_new = e_pe + 2.0 * alpha * e_pd + alpha * alpha * d_pd;
    if (dhd <= 0.0 || e_pe_new >= delta2) {
      const double tau =
          (-e_pd + std::sqrt(std::max(0.0, e_pd * e_pd + d_pd * (delta2 - e_pe)))) / d_pd;
      res.step += tau * d;
      res.hess_step += tau * hd;
      res.stop = dhd <= 0.0 ? TcgStop::NegativeCurvature : TcgStop::Boundary;
      res.iterations = j + 1;
      break;
    }
    res.step += alpha * d;
    res.hess_step += alpha * hd;
    e_pe = e_pe_new;
    r += alpha * hd;
    if (project) r = project(r);
    const double rr_new = r.squaredNorm();
    if (std::sqrt(rr_new) <= stop_norm) {
      res.stop = TcgStop::Tolerance;
      res.iterations = j + 1;
      break;
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    e_pd = beta * (e_pd + alpha * d_pd);
    d_pd = rr + beta * beta * d_pd;
    d = -r + beta * d;
  }

  res.model_value = frob(grad, res.step) + 0.5 * frob(res.step, res.hess_step);
  // Cauchy decrease guarantee; CG satisfies it in exact arithmetic.
  if (res.model_value > res.cauchy_value + 1e-12 * std::abs(res.cauchy_value)) {
    res.step = std::move(cauchy_step);
    res.hess_step = std::move(cauchy_hstep);
    res.model_value = res.cauchy_value;
  }
  return res;
}

namespace detail {

RiemannianModel::RiemannianModel(const ConstraintSet& cs, const CostModel& cost, Matrix y)
    : cs_(cs), cost_model_(cost), y_(std::move(y)), projector_(cs, y_) {
  value_ = cost.value(y_);
  HorizontalSplit parts = projector_.split(cost.euclidean_gradient(y_));
  grad_ = std::move(parts.horizontal);
  alpha_ = std::move(parts.alpha);
  omega_ = std::move(parts.omega);
}

Matrix RiemannianModel::hessian(const Matrix& z) const {
  // D_Y[P_Y(g)](Z) = Dg[Z] - ZΩ - Y DΩ[Z] - Σ (Dα_i[Z] A_i Y + α_i A_i Z). The
  // Y DΩ[Z] and Dα_i[Z] A_i Y terms are vertical and normal and vanish under
  // the outer projection.
  Matrix hz = cost_model_.hessian_vector(y_, z);
  hz -= z * omega_;
  hz -= cs_.combine(alpha_, z);
  return projector_(hz);
}

}  // namespace detail

TangentVector riemannian_gradient(const ConstraintSet& cs, const CostModel& cost,
                                  const FactorPoint& y) {
  return TangentVector{detail::project(cs, y.matrix(), euclidean_gradient(cost, y)), y.tag()};
}

TangentVector riemannian_hessian_vector(const ConstraintSet& cs, const CostModel& cost,
                                        const FactorPoint& y, const TangentVector& z) {
  if (z.base_tag != y.tag()) {
    throw BasePointMismatch("riemannian_hessian_vector: direction is based elsewhere");
  }
  detail::RiemannianModel model(cs, cost, y.matrix());
  return TangentVector{model.hessian(z.z), y.tag()};
}

namespace {

struct EscapeOutcome {
  Matrix point;
  double value;
  bool moved = false;
  double decrease = 0.0;  // -value_change, exact even below the ulp of value
};

/// Backtracking along a second-order descent direction Z from a stationary
/// Y0: the first-order term vanishes, so the model change is q t^2 with
/// q = 1/2 <Z, D(∇f~ - Σ α_i A_i Y)[Z]>.
EscapeOutcome escape_line_search(const ConstraintSet& cs, const CostModel& cost,
                                 const Matrix& y0, double f0, const Matrix& egrad,
                                 const Matrix& z) {
  const Vector alpha = cs.traces(egrad, y0).cwiseQuotient(cs.squared_norms(y0));
  const double q = 0.5 * frob(z, cost.hessian_vector(y0, z) - cs.combine(alpha, z));
  EscapeOutcome out{y0, f0, false};
  std::optional<EscapeOutcome> fallback;
  double t = 1.0;
  for (int k = 0; k < kMaxBacktracks; ++k, t *= 0.5) {
    Matrix cand;
    try {
      cand = detail::retract(cs, y0, t * z);
    } catch (const RetractionFailure&) {
      continue;
    }
    const double change = cost.value_change(y0, cand);
    if (!(change < 0.0)) continue;
    const double fc = f0 + change;
    if (q >= 0.0 || change <= kArmijo * q * t * t) return {std::move(cand), fc, true, -change};
    if (!fallback) fallback = EscapeOutcome{std::move(cand), fc, true, -change};
  }
  return fallback ? std::move(*fallback) : out;
}

}  // namespace

namespace {

TrResult run_trust_region(const ConstraintSet& cs, const CostModel& cost, const FactorPoint& y0,
                          const TrOptions& opts, const std::optional<TangentVector>& escape,
                          int& counter, Matrix& y) {
  y = y0.matrix();
  double f = cost.value(y);
  const double grad_tol = opts.grad_tol.value_or(1e-8 * std::max(1.0, std::abs(f)));
  const int max_inner =
      opts.max_inner.value_or(static_cast<int>(std::max<Index>(1, y.rows() * y.cols())));

  TrResult res{y0, {}, TrStatus::Converged, f, 0.0, f, 0.0, grad_tol, std::nullopt};

  if (escape) {
    if (escape->base_tag != y0.tag() || escape->z.rows() != y.rows() ||
        escape->z.cols() != y.cols()) {
      throw BasePointMismatch("minimize: escape direction is not based at Y0");
    }
    const Matrix egrad = cost.euclidean_gradient(y);
    // The Euclidean gradient of an invariant cost has no vertical part, so the
    // tangent projection equals the Riemannian gradient even where Y0 is rank
    // deficient.
    // The first-order term along an escape direction [0 | v] at [Y | 0]
    // vanishes identically, so the line search runs whatever the gradient
    // norm left by the previous rank.
    res.initial_grad_norm = detail::project_tangent(cs, y, egrad).norm();
    {
      EscapeOutcome moved = escape_line_search(cs, cost, y, f, egrad, escape->z);
      if (moved.moved) {
        res.escape_decrease = moved.decrease;
        y = std::move(moved.point);
        f = moved.value;
        TrStepRecord rec;
        rec.iteration = ++counter;
        rec.cost = f;
        rec.radius = 0.0;
        rec.accepted = true;
        rec.escape = true;
        try {
          rec.grad_norm = riemannian_gradient(cs, cost, FactorPoint(y)).z.norm();
        } catch (const SingularGram&) {
          rec.grad_norm = std::numeric_limits<double>::quiet_NaN();
        }
        res.records.push_back(rec);
      }
    }
  }

  std::optional<detail::RiemannianModel> model;
  try {
    model.emplace(cs, cost, y);
  } catch (const SingularGram&) {
    res.status = TrStatus::RankDeficient;
    res.point = FactorPoint(y);
    res.final_cost = f;
    res.final_grad_norm = detail::project_tangent(cs, y, cost.euclidean_gradient(y)).norm();
    if (!escape) res.initial_grad_norm = res.final_grad_norm;
    return res;
  }
  if (!escape) res.initial_grad_norm = model->gradient().norm();

  double delta = opts.delta0;
  double gnorm = model->gradient().norm();
  res.status = TrStatus::MaxIterations;
  int flat_steps = 0;
  const LinearOperator hess = [&model](const Matrix& z) { return model->hessian(z); };
  const LinearOperator proj = [&model](const Matrix& z) { return model->project(z); };
  for (int k = 0; k <= opts.max_outer; ++k) {
    if (gnorm <= grad_tol) {
      res.status = TrStatus::Converged;
      break;
    }
    if (k == opts.max_outer || delta < 1e-14 * opts.delta0) break;

    const TcgResult step = tcg_solve(hess, model->gradient(), delta, opts, max_inner, proj);
    Matrix cand = detail::retract(cs, y, step.step);
    const double change = cost.value_change(y, cand);
    const double fc = f + change;
    const double reg = 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
    const double ratio = (-change + reg) / (-step.model_value + reg);
    flat_steps = -step.model_value <= reg ? flat_steps + 1 : 0;
    const bool at_boundary =
        step.stop == TcgStop::Boundary || step.stop == TcgStop::NegativeCurvature;

    TrStepRecord rec;
    rec.iteration = ++counter;
    rec.radius = delta;
    rec.ratio = ratio;
    rec.inner_iterations = step.iterations;
    rec.inner_stop = step.stop;

    if (ratio < kShrinkBelow) {
      delta *= kShrink;
    } else if (ratio > kExpandAbove && at_boundary) {
      delta = std::min(kExpand * delta, opts.delta_max);
    }

    if (ratio > opts.rho_accept && change <= 0.0) {
      try {
        model.emplace(cs, cost, cand);
      } catch (const SingularGram&) {
        y = std::move(cand);
        f = fc;
        rec.accepted = true;
        rec.cost = f;
        rec.grad_norm = detail::project_tangent(cs, y, cost.euclidean_gradient(y)).norm();
        res.records.push_back(rec);
        res.status = TrStatus::RankDeficient;
        gnorm = rec.grad_norm;
        break;
      }
      y = std::move(cand);
      f = fc;
      gnorm = model->gradient().norm();
      rec.accepted = true;
    }
    rec.cost = f;
    rec.grad_norm = gnorm;
    res.records.push_back(rec);
    if (flat_steps >= kStagnationSteps && gnorm > grad_tol) {
      res.status = TrStatus::Stagnated;
      break;
    }
  }

  res.point = FactorPoint(std::move(y));
  res.final_cost = f;
  res.final_grad_norm = gnorm;
  return res;
}

}  // namespace

TrResult minimize(const ConstraintSet& cs, const CostModel& cost, const FactorPoint& y0,
                  const TrOptions& opts, const std::optional<TangentVector>& escape) {
  opts.validate();
  if (y0.dim() != cs.dim() || cost.dim() != cs.dim()) {
    throw DimensionMismatch("minimize: factor, cost and constraints disagree on n");
  }
  int counter = 0;
  Matrix y;
  try {
    return run_trust_region(cs, cost, y0, opts, escape, counter, y);
  } catch (Error& e) {
    e.set_provenance(static_cast<long>(y0.rank()), counter);
    if (!e.last_iterate() && y.size() > 0) e.set_last_iterate(y);
    throw;
  }
}

}  // namespace lowrank_sdp
