#include "lowrank_sdp/costs.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <vector>

namespace lowrank_sdp {

namespace {

void require_factor(Index n, const Matrix& y, const char* what) {
  if (y.rows() != n || y.cols() < 1) {
    throw DimensionMismatch(std::string(what) + ": expected " + std::to_string(n) +
                            " rows, got " + std::to_string(y.rows()) + "x" +
                            std::to_string(y.cols()));
  }
}

/// Central difference of the gradient, used where no closed-form Hessian is
/// implemented.
Matrix finite_difference_hessian(const CostModel& cost, const Matrix& y, const Matrix& z) {
  const double znorm = z.norm();
  if (znorm == 0.0) return Matrix::Zero(y.rows(), y.cols());
  const double h = 1e-6 * std::max(1.0, y.norm()) / std::max(1.0, znorm);
  return (cost.euclidean_gradient(y + h * z) - cost.euclidean_gradient(y - h * z)) / (2.0 * h);
}

/// Eigen-structure of M_i = w_i w_i^T - ρ Y^T Y for every data column.
struct SpectralTerms {
  Matrix w;                      // n x p, row i is (Y^T a_i)^T
  Matrix gram;                   // p x p
  std::vector<Vector> values;    // eigenvalues of M_i
  std::vector<Matrix> vectors;   // eigenvectors of M_i
};

SpectralTerms spectral_terms(const Matrix& data, double rho, const Matrix& y) {
  SpectralTerms t;
  t.w = data.transpose() * y;
  t.gram = y.transpose() * y;
  const Index n = data.cols();
  const Index p = y.cols();
  t.values.resize(static_cast<std::size_t>(n));
  t.vectors.resize(static_cast<std::size_t>(n));
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (p == 1) {
      t.values[k] = Vector::Constant(1, t.w(i, 0) * t.w(i, 0) - rho * t.gram(0, 0));
      t.vectors[k] = Matrix::Ones(1, 1);
      continue;
    }
    const Vector wi = t.w.row(i).transpose();
    eig.compute(wi * wi.transpose() - rho * t.gram);
    t.values[k] = eig.eigenvalues();
    t.vectors[k] = eig.eigenvectors();
  }
  return t;
}

double positive_sum(const SpectralTerms& t) {
  double s = 0.0;
  for (const auto& v : t.values) s += v.cwiseMax(0.0).sum();
  return s;
}

/// Gradient of f_ccv(YY^T) (maximization sense): Σ_i 2 B_i Y P_i with P_i the
/// projector onto the strictly positive eigenspace of M_i.
Matrix spectral_ascent_gradient(const Matrix& data, double rho, const Matrix& y,
                                const SpectralTerms& t) {
  const Index n = data.cols();
  const Index p = y.cols();
  Matrix wp(n, p);
  Matrix psum = Matrix::Zero(p, p);
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Vector& vals = t.values[k];
    const Matrix& vecs = t.vectors[k];
    Matrix proj = Matrix::Zero(p, p);
    for (Index j = 0; j < p; ++j) {
      if (vals(j) > 0.0) proj.noalias() += vecs.col(j) * vecs.col(j).transpose();
    }
    wp.row(i) = (proj * t.w.row(i).transpose()).transpose();
    psum += proj;
  }
  return 2.0 * (data * wp - rho * y * psum);
}

/// ∇_Z f_ccv applied to V: Σ_i Σ_{μ>0} B_i Y u u^T Y^T B_i V / μ.
Matrix spectral_ascent_x_gradient(const Matrix& data, double rho, const Matrix& y,
                                  const SpectralTerms& t, const Matrix& v) {
  const Index n = data.cols();
  const Index p = y.cols();
  const Matrix ytv = y.transpose() * v;  // p x k
  const Matrix atv = data.transpose() * v;  // n x k
  Matrix out = Matrix::Zero(v.rows(), v.cols());
  Matrix coeff_a(n, v.cols());  // row i multiplies a_i
  Matrix y_block = Matrix::Zero(p, v.cols());
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Vector& vals = t.values[k];
    const Matrix& vecs = t.vectors[k];
    Matrix q = Matrix::Zero(p, p);
    for (Index j = 0; j < p; ++j) {
      if (vals(j) > 0.0) q.noalias() += vecs.col(j) * vecs.col(j).transpose() / vals(j);
    }
    if (q.isZero(0.0)) {
      coeff_a.row(i).setZero();
      continue;
    }
    const Vector wi = t.w.row(i).transpose();
    // Y^T B_i V = w_i (a_i^T V) - ρ Y^T V
    const Matrix ytbv = wi * atv.row(i) - rho * ytv;
    const Matrix tq = q * ytbv;  // p x k
    // B_i Y T = a_i (w_i^T T) - ρ Y T
    coeff_a.row(i) = wi.transpose() * tq;
    y_block -= rho * tq;
  }
  out.noalias() += data * coeff_a;
  out.noalias() += y * y_block;
  return out;
}

}  // namespace

double CostModel::value(const Matrix& y) const {
  require_factor(n_, y, "value");
  return do_value(y);
}

double CostModel::value_change(const Matrix& y, const Matrix& y_new) const {
  require_factor(n_, y, "value_change");
  require_factor(n_, y_new, "value_change");
  if (y.cols() != y_new.cols()) throw DimensionMismatch("value_change: factors differ in rank");
  return do_value_change(y, y_new);
}

Matrix CostModel::euclidean_gradient(const Matrix& y) const {
  require_factor(n_, y, "euclidean_gradient");
  return do_gradient(y);
}

Matrix CostModel::hessian_vector(const Matrix& y, const Matrix& z) const {
  require_factor(n_, y, "hessian_vector");
  if (z.rows() != y.rows() || z.cols() != y.cols()) {
    throw DimensionMismatch("hessian_vector: direction shape differs from the factor");
  }
  return do_hessian_vector(y, z);
}

Matrix CostModel::apply_x_gradient(const Matrix& y, const Matrix& v) const {
  require_factor(n_, y, "apply_x_gradient");
  if (v.rows() != n_) throw DimensionMismatch("apply_x_gradient: block has wrong row count");
  return do_apply_x_gradient(y, v);
}

double value(const CostModel& cost, const FactorPoint& y) { return cost.value(y.matrix()); }

Matrix euclidean_gradient(const CostModel& cost, const FactorPoint& y) {
  return cost.euclidean_gradient(y.matrix());
}

Matrix hessian_vector(const CostModel& cost, const FactorPoint& y, const Matrix& z) {
  return cost.hessian_vector(y.matrix(), z);
}

// ---------------------------------------------------------------- LinearCost

LinearCost::LinearCost(SparseMatrix a) : CostModel(a.rows()), a_(std::move(a)) {
  if (a_.rows() != a_.cols()) throw DimensionMismatch("LinearCost: matrix must be square");
  a_.makeCompressed();
  const SparseMatrix at = a_.transpose();
  if ((a_ - at).norm() > 1e-14 * std::max(1.0, a_.norm())) {
    throw DimensionMismatch("LinearCost: matrix must be symmetric");
  }
}

double LinearCost::do_value(const Matrix& y) const { return detail::frob(y, a_ * y); }

double LinearCost::do_value_change(const Matrix& y, const Matrix& y_new) const {
  // Tr(Y'^T A Y') - Tr(Y^T A Y) = Tr((Y' - Y)^T A (Y' + Y)) for symmetric A
  return detail::frob(y_new - y, a_ * (y_new + y));
}

Matrix LinearCost::do_gradient(const Matrix& y) const { return 2.0 * (a_ * y); }

Matrix LinearCost::do_hessian_vector(const Matrix& /*y*/, const Matrix& z) const {
  return 2.0 * (a_ * z);
}

Matrix LinearCost::do_apply_x_gradient(const Matrix& /*y*/, const Matrix& v) const {
  return a_ * v;
}

// ----------------------------------------------------------------- DspcaCost

DspcaCost::DspcaCost(Index n, Matrix sigma_or_data, bool factored, double rho, double kappa)
    : CostModel(n),
      sigma_or_data_(std::move(sigma_or_data)),
      factored_(factored),
      rho_(rho),
      kappa_(kappa) {
  if (!(rho_ >= 0.0)) throw DimensionMismatch("DspcaCost: rho must be nonnegative");
  if (!(kappa_ > 0.0)) throw DimensionMismatch("DspcaCost: kappa must be positive");
}

DspcaCost DspcaCost::from_covariance(Matrix sigma, double rho, double kappa) {
  if (sigma.rows() != sigma.cols()) throw DimensionMismatch("DspcaCost: Σ must be square");
  const Index n = sigma.rows();
  return DspcaCost(n, std::move(sigma), false, rho, kappa);
}

DspcaCost DspcaCost::from_data(Matrix data, double rho, double kappa) {
  const Index n = data.cols();
  if (data.rows() >= n) {
    Matrix sigma = data.transpose() * data;
    return DspcaCost(n, std::move(sigma), false, rho, kappa);
  }
  return DspcaCost(n, std::move(data), true, rho, kappa);
}

DspcaCost DspcaCost::with_kappa(double kappa) const {
  return DspcaCost(dim(), sigma_or_data_, factored_, rho_, kappa);
}

Matrix DspcaCost::apply_sigma(const Matrix& v) const {
  if (factored_) return sigma_or_data_.transpose() * (sigma_or_data_ * v);
  return sigma_or_data_ * v;
}

Matrix DspcaCost::smoothing_weights(const Matrix& x) const {
  const double k2 = kappa_ * kappa_;
  return x.array() / (x.array().square() + k2).sqrt();
}

double DspcaCost::do_value(const Matrix& y) const {
  const Matrix x = y * y.transpose();
  const double variance = detail::frob(y, apply_sigma(y));
  const double penalty = (x.array().square() + kappa_ * kappa_).sqrt().sum();
  return -variance + rho_ * penalty;
}

double DspcaCost::do_value_change(const Matrix& y, const Matrix& y_new) const {
  const Matrix d = y_new - y;
  const double variance_change = detail::frob(d, apply_sigma(y_new + y));
  const Matrix x = y * y.transpose();
  const Matrix x_new = y_new * y_new.transpose();
  const Matrix dy = d * y_new.transpose();
  const Matrix dx = dy + (y * d.transpose());  // X' - X
  const double k2 = kappa_ * kappa_;
  // h(x') - h(x) = (x'^2 - x^2) / (h(x') + h(x))
  const auto h_sum = (x.array().square() + k2).sqrt() + (x_new.array().square() + k2).sqrt();
  const double penalty_change = (dx.array() * (x_new + x).array() / h_sum).sum();
  return -variance_change + rho_ * penalty_change;
}

double DspcaCost::nonsmooth_value(const Matrix& y) const {
  require_factor(dim(), y, "nonsmooth_value");
  const Matrix x = y * y.transpose();
  return -detail::frob(y, apply_sigma(y)) + rho_ * x.cwiseAbs().sum();
}

Matrix DspcaCost::do_gradient(const Matrix& y) const {
  const Matrix x = y * y.transpose();
  return 2.0 * (-apply_sigma(y) + rho_ * (smoothing_weights(x) * y));
}

Matrix DspcaCost::do_hessian_vector(const Matrix& y, const Matrix& z) const {
  const Matrix x = y * y.transpose();
  const double k2 = kappa_ * kappa_;
  const Matrix g = smoothing_weights(x);
  const Matrix curvature = k2 / (x.array().square() + k2).pow(1.5);
  const Matrix yz = y * z.transpose();
  const Matrix w = yz + yz.transpose();
  const Matrix dg = curvature.cwiseProduct(w);
  return 2.0 * (-apply_sigma(z) + rho_ * (g * z)) + 2.0 * rho_ * (dg * y);
}

Matrix DspcaCost::do_apply_x_gradient(const Matrix& y, const Matrix& v) const {
  const Matrix x = y * y.transpose();
  return -apply_sigma(v) + rho_ * (smoothing_weights(x) * v);
}

// ---------------------------------------------------------- SpectralSpcaCost

SpectralSpcaCost::SpectralSpcaCost(Matrix data, double rho)
    : CostModel(data.rows()), data_(std::move(data)), rho_(rho) {
  if (!(rho_ >= 0.0)) throw DimensionMismatch("SpectralSpcaCost: rho must be nonnegative");
}

double spectral_positive_sum(const Matrix& data, double rho, const Matrix& y) {
  return positive_sum(spectral_terms(data, rho, y));
}

double convex_positive_sum(const Matrix& data, double rho, const Matrix& y) {
  const Vector energy = (data.transpose() * y).rowwise().squaredNorm();
  return (energy.array() - rho).max(0.0).sum();
}

double SpectralSpcaCost::do_value(const Matrix& y) const {
  return -spectral_positive_sum(data_, rho_, y);
}

Matrix SpectralSpcaCost::do_gradient(const Matrix& y) const {
  return -spectral_ascent_gradient(data_, rho_, y, spectral_terms(data_, rho_, y));
}

Matrix SpectralSpcaCost::do_hessian_vector(const Matrix& y, const Matrix& z) const {
  return finite_difference_hessian(*this, y, z);
}

Matrix SpectralSpcaCost::do_apply_x_gradient(const Matrix& y, const Matrix& v) const {
  return -spectral_ascent_x_gradient(data_, rho_, y, spectral_terms(data_, rho_, y), v);
}

// -------------------------------------------------------------- HomotopyCost

HomotopyCost::HomotopyCost(Matrix data, double rho, double mu)
    : CostModel(data.rows()), data_(std::move(data)), rho_(rho), mu_(mu) {
  if (!(mu_ >= 0.0 && mu_ <= 1.0)) throw DimensionMismatch("HomotopyCost: mu must be in [0,1]");
  if (!(rho_ >= 0.0)) throw DimensionMismatch("HomotopyCost: rho must be nonnegative");
}

double HomotopyCost::do_value(const Matrix& y) const {
  double v = 0.0;
  if (mu_ > 0.0) v += mu_ * convex_positive_sum(data_, rho_, y);
  if (mu_ < 1.0) v += (1.0 - mu_) * spectral_positive_sum(data_, rho_, y);
  return -v;
}

Matrix HomotopyCost::do_gradient(const Matrix& y) const {
  Matrix g = Matrix::Zero(y.rows(), y.cols());
  if (mu_ > 0.0) {
    const Matrix w = data_.transpose() * y;
    const Vector active =
        ((w.rowwise().squaredNorm().array() - rho_) > 0.0).cast<double>().matrix();
    g -= mu_ * 2.0 * (data_ * (active.asDiagonal() * w));
  }
  if (mu_ < 1.0) {
    g -= (1.0 - mu_) * spectral_ascent_gradient(data_, rho_, y, spectral_terms(data_, rho_, y));
  }
  return g;
}

Matrix HomotopyCost::do_hessian_vector(const Matrix& y, const Matrix& z) const {
  return finite_difference_hessian(*this, y, z);
}

Matrix HomotopyCost::do_apply_x_gradient(const Matrix& y, const Matrix& v) const {
  Matrix out = Matrix::Zero(v.rows(), v.cols());
  if (mu_ > 0.0) {
    const Matrix w = data_.transpose() * y;
    const Vector active =
        ((w.rowwise().squaredNorm().array() - rho_) > 0.0).cast<double>().matrix();
    out -= mu_ * (data_ * (active.asDiagonal() * (data_.transpose() * v)));
  }
  if (mu_ < 1.0) {
    out -= (1.0 - mu_) *
           spectral_ascent_x_gradient(data_, rho_, y, spectral_terms(data_, rho_, y), v);
  }
  return out;
}

}  // namespace lowrank_sdp
