#include "lowrank_sdp/lanczos.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace lowrank_sdp {

namespace {

Vector random_unit(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v / v.norm();
}

/// Orthogonalizes v against the first `cols` columns of basis (twice).
double orthogonalize(const Matrix& basis, Index cols, Vector& v) {
  for (int pass = 0; pass < 2; ++pass) {
    const auto b = basis.leftCols(cols);
    v -= b * (b.transpose() * v);
  }
  return v.norm();
}

}  // namespace

EigenPair lanczos_smallest(const std::function<Matrix(const Matrix&)>& op, Index n,
                           const LanczosOptions& opts) {
  if (n < 1) throw DimensionMismatch("lanczos_smallest: empty operator");
  const Index m = std::min<Index>(n, std::max<Index>(opts.subspace, 2));
  const Index keep = std::max<Index>(1, m / 2);
  std::mt19937_64 rng(opts.seed);

  Matrix basis(n, m);
  Matrix images(n, m);  // op applied to each basis column
  Matrix h = Matrix::Zero(m, m);
  Index cur = 0;
  Vector next = random_unit(n, rng);
  double norm_est = 0.0;
  EigenPair best;
  best.value = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    while (cur < m) {
      basis.col(cur) = next;
      images.col(cur) = op(next);
      const Vector proj = basis.leftCols(cur + 1).transpose() * images.col(cur);
      h.block(0, cur, cur + 1, 1) = proj;
      h.block(cur, 0, 1, cur + 1) = proj.transpose();
      ++cur;
      if (cur == n) break;
      Vector f = images.col(cur - 1);
      const double wnorm = f.norm();
      double beta = orthogonalize(basis, cur, f);
      if (beta <= 1e-12 * std::max(wnorm, 1e-300)) {
        // invariant subspace: continue from a fresh orthogonal direction
        f = random_unit(n, rng);
        beta = orthogonalize(basis, cur, f);
      }
      next = f / beta;
    }

    Eigen::SelfAdjointEigenSolver<Matrix> eig(h.topLeftCorner(cur, cur));
    const Vector& theta = eig.eigenvalues();
    const Matrix& u = eig.eigenvectors();
    norm_est = std::max(norm_est, theta.cwiseAbs().maxCoeff());
    Vector x = basis.leftCols(cur) * u.col(0);
    const Vector ax = images.leftCols(cur) * u.col(0);
    const double xnorm = x.norm();
    const double res = (ax - theta(0) * x).norm() / xnorm;
    if (res < best.residual || !std::isfinite(best.value)) {
      best.value = theta(0);
      best.vector = x / xnorm;
      best.residual = res;
      best.restarts = restart;
    }
    if (res <= opts.tolerance * std::max(norm_est, 1e-300) || cur == n) {
      EigenPair out{theta(0), x / xnorm, res, restart};
      return out;
    }

    // thick restart: keep the `keep` smallest Ritz vectors
    const Index k = std::min(keep, cur - 1);
    const Matrix kept_basis = basis.leftCols(cur) * u.leftCols(k);
    const Matrix kept_images = images.leftCols(cur) * u.leftCols(k);
    basis.leftCols(k) = kept_basis;
    images.leftCols(k) = kept_images;
    h.setZero();
    h.topLeftCorner(k, k) = theta.head(k).asDiagonal();
    cur = k;
    // `next` is orthogonal to the old basis, hence to the kept Ritz vectors;
    // reorthogonalize against roundoff.
    double beta = orthogonalize(basis, cur, next);
    if (beta <= 1e-12) {
      next = random_unit(n, rng);
      beta = orthogonalize(basis, cur, next);
    }
    next /= beta;
  }
  throw EigSolverNoConvergence("Lanczos did not reach the requested residual", best.value,
                               best.vector);
}

}  // namespace lowrank_sdp
