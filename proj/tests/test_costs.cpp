#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "lowrank_sdp/costs.hpp"
#include "test_util.hpp"

using namespace lowrank_sdp;
using testutil::gaussian;

namespace {

double fd_directional(const CostModel& cost, const Matrix& y, const Matrix& z, double h) {
  return (cost.value(y + h * z) - cost.value(y - h * z)) / (2.0 * h);
}

Matrix fd_gradient_direction(const CostModel& cost, const Matrix& y, const Matrix& z, double h) {
  return (cost.euclidean_gradient(y + h * z) - cost.euclidean_gradient(y - h * z)) / (2.0 * h);
}

// Smallest |eigenvalue| over the p x p blocks Y^T (a_i a_i^T - rho I) Y, and
// the scalars ||Y^T a_i||^2 - rho.
double kink_distance(const Matrix& data, double rho, const Matrix& y) {
  double dist = std::numeric_limits<double>::infinity();
  const Matrix gram = y.transpose() * y;
  for (Index i = 0; i < data.cols(); ++i) {
    const Vector w = y.transpose() * data.col(i);
    const Matrix block = w * w.transpose() - rho * gram;
    Eigen::SelfAdjointEigenSolver<Matrix> es(block, Eigen::EigenvaluesOnly);
    dist = std::min(dist, es.eigenvalues().cwiseAbs().minCoeff());
    dist = std::min(dist, std::abs(w.squaredNorm() - rho));
  }
  return dist;
}

Matrix kink_free_point(const Matrix& data, double rho, Index p, std::uint64_t seed) {
  for (std::uint64_t s = seed;; s += 7919) {
    Matrix y = gaussian(data.rows(), p, s);
    y /= y.norm();
    if (kink_distance(data, rho, y) > 1e-3) return y;
  }
}

}  // namespace

TEST(LinearCost, IdentityValue) {
  const LinearCost cost(Matrix::Identity(5, 5).sparseView());
  Matrix y = gaussian(5, 2, 1);
  y /= y.norm();
  EXPECT_NEAR(cost.value(y), 1.0, 1e-15);
}

TEST(LinearCost, GradientFiniteDifference) {
  const LinearCost cost(testutil::random_symmetric(6, 2).sparseView());
  const Matrix y = gaussian(6, 3, 3), z = gaussian(6, 3, 4);
  const double fd = fd_directional(cost, y, z, 1e-6);
  const double an = detail::frob(cost.euclidean_gradient(y), z);
  EXPECT_NEAR(fd, an, 1e-6 * std::abs(an));
}

TEST(LinearCost, HessianIsTwoAZ) {
  const Matrix a = testutil::random_symmetric(6, 2);
  const LinearCost cost(a.sparseView());
  const Matrix z = gaussian(6, 3, 4);
  for (std::uint64_t s : {5, 6}) {
    EXPECT_LE((cost.hessian_vector(gaussian(6, 3, s), z) - 2.0 * a * z).norm(), 1e-12 * z.norm());
  }
}

TEST(LinearCost, ValueChangeMatchesDifference) {
  const LinearCost cost(testutil::random_symmetric(6, 2).sparseView());
  const Matrix y = gaussian(6, 2, 1), y2 = y + 0.3 * gaussian(6, 2, 2);
  EXPECT_NEAR(cost.value_change(y, y2), cost.value(y2) - cost.value(y), 1e-12);
}

TEST(LinearCost, DimensionChecked) {
  const LinearCost cost(Matrix::Identity(4, 4).sparseView());
  EXPECT_THROW(cost.value(Matrix::Ones(3, 1)), DimensionMismatch);
}

TEST(DspcaCost, PenaltyOffIsNegativeVariance) {
  const Matrix data = gaussian(8, 5, 3);
  const Matrix sigma = data.transpose() * data;
  const auto cost = DspcaCost::from_covariance(sigma, 0.0, 1e-3);
  Vector v = gaussian(5, 1, 4).col(0);
  v.normalize();
  Matrix y = Matrix::Zero(5, 3);
  y.col(0) = v;
  EXPECT_NEAR(cost.value(y), -v.dot(sigma * v), 1e-12 * sigma.norm());
}

TEST(DspcaCost, GradientNearSignForLargeEntries) {
  const Matrix data = gaussian(6, 4, 9);
  const Matrix sigma = data.transpose() * data;
  const double rho = 0.7, kappa = 1e-4;
  const auto cost = DspcaCost::from_covariance(sigma, rho, kappa);
  Matrix y(4, 2);
  y << 1.0, 0.5, -0.8, 0.6, 0.9, -0.4, -1.1, 0.2;
  const Matrix x = y * y.transpose();
  ASSERT_GT(x.cwiseAbs().minCoeff(), 100 * kappa);
  const Matrix sign = x.unaryExpr([](double v) { return v > 0 ? 1.0 : -1.0; });
  const Matrix expected = 2.0 * (-sigma + rho * sign) * y;
  EXPECT_LE((cost.euclidean_gradient(y) - expected).cwiseAbs().maxCoeff(), 10 * kappa);
}

TEST(DspcaCost, FactoredMatchesExplicit) {
  const Matrix data = gaussian(3, 7, 1);
  const auto a = DspcaCost::from_data(data, 0.4, 1e-2);
  const auto b = DspcaCost::from_covariance(data.transpose() * data, 0.4, 1e-2);
  const Matrix y = gaussian(7, 2, 2), z = gaussian(7, 2, 3);
  EXPECT_NEAR(a.value(y), b.value(y), 1e-12 * std::abs(b.value(y)));
  EXPECT_LE(testutil::rel_err(a.euclidean_gradient(y), b.euclidean_gradient(y)), 1e-12);
  EXPECT_LE(testutil::rel_err(a.hessian_vector(y, z), b.hessian_vector(y, z)), 1e-12);
}

TEST(DspcaCost, HessianSymmetricAndMatchesDifferences) {
  const Matrix data = gaussian(10, 6, 5);
  for (double kappa : {1e-1, 1e-2}) {
    const auto cost = DspcaCost::from_data(data, 0.5, kappa);
    const Matrix y = gaussian(6, 2, 6) * 0.4, z1 = gaussian(6, 2, 7), z2 = gaussian(6, 2, 8);
    const double a = detail::frob(cost.hessian_vector(y, z1), z2);
    const double b = detail::frob(z1, cost.hessian_vector(y, z2));
    EXPECT_NEAR(a, b, 1e-8 * std::max(std::abs(a), 1.0));
    EXPECT_LE(testutil::rel_err(cost.hessian_vector(y, z1), fd_gradient_direction(cost, y, z1, 1e-5)),
              1e-4);
  }
}

TEST(DspcaCost, GradientFiniteDifference) {
  const Matrix data = gaussian(10, 6, 5);
  const auto cost = DspcaCost::from_data(data, 0.5, 1e-2);
  const Matrix y = gaussian(6, 3, 1) * 0.4, z = gaussian(6, 3, 2);
  const double an = detail::frob(cost.euclidean_gradient(y), z);
  EXPECT_NEAR(fd_directional(cost, y, z, 1e-6), an, 1e-5 * std::abs(an));
}

TEST(DspcaCost, SmoothingSandwich) {
  const Matrix data = gaussian(10, 6, 5);
  const double rho = 0.5;
  for (double kappa : {1e-1, 1e-3}) {
    const auto cost = DspcaCost::from_data(data, rho, kappa);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Matrix y = gaussian(6, 2, 40 + s) * 0.3;
      // Minimization sense: the smoothed penalty is the larger one.
      const double smooth = cost.value(y);
      const double rough = cost.nonsmooth_value(y);
      EXPECT_LE(rough, smooth + 1e-12);
      EXPECT_LE(smooth, rough + rho * 36.0 * kappa + 1e-12);
    }
  }
}

TEST(DspcaCost, WithKappaKeepsData) {
  const Matrix data = gaussian(5, 4, 1);
  const auto a = DspcaCost::from_data(data, 0.3, 0.1);
  const auto b = a.with_kappa(1e-3);
  EXPECT_EQ(b.kappa(), 1e-3);
  EXPECT_EQ(b.rho(), 0.3);
  const Matrix y = gaussian(4, 1, 2);
  EXPECT_EQ(b.value(y), DspcaCost::from_data(data, 0.3, 1e-3).value(y));
}

TEST(DspcaCost, ValueChangeMatchesDifference) {
  const auto cost = DspcaCost::from_data(gaussian(5, 4, 1), 0.3, 0.01);
  const Matrix y = gaussian(4, 2, 1) * 0.4, y2 = y + 1e-3 * gaussian(4, 2, 2);
  EXPECT_NEAR(cost.value_change(y, y2), cost.value(y2) - cost.value(y), 1e-12);
}

TEST(SpectralSpcaCost, RankOneMatchesScalarForm) {
  const Matrix data = gaussian(4, 6, 3);
  const double rho = 0.5;
  const SpectralSpcaCost cost(data, rho);
  Vector y = gaussian(4, 1, 4).col(0);
  y.normalize();
  double expected = 0.0;
  Vector grad = Vector::Zero(4);
  for (Index i = 0; i < data.cols(); ++i) {
    const double t = data.col(i).dot(y);
    if (t * t > rho) {
      expected -= t * t - rho;
      grad -= 2.0 * t * data.col(i);
    }
  }
  EXPECT_NEAR(cost.value(y), expected, 1e-12 * std::abs(expected));
  // The model keeps the -rho ||y||^2 terms, which only move the gradient along y.
  const Matrix tangent = Matrix::Identity(4, 4) - y * y.transpose();
  EXPECT_LE((tangent * (cost.euclidean_gradient(y).col(0) - grad)).norm(), 1e-12 * grad.norm());
}

TEST(SpectralSpcaCost, GradientFiniteDifferenceAwayFromKinks) {
  const Matrix data = gaussian(5, 8, 11);
  const double rho = 0.3 * rho_bar(data);
  const SpectralSpcaCost cost(data, rho);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Matrix y = kink_free_point(data, rho, 2, 60 + s);
    const Matrix z = gaussian(5, 2, 90 + s);
    const double an = detail::frob(cost.euclidean_gradient(y), z);
    const double fd = fd_directional(cost, y, z, 1e-6);
    EXPECT_NEAR(fd, an, 1e-5 * std::max(std::abs(an), 1e-3));
  }
}

TEST(SpectralSpcaCost, ZeroWhenPenaltyDominates) {
  const Matrix data = gaussian(3, 4, 2);
  const SpectralSpcaCost cost(data, rho_bar(data));
  for (std::uint64_t s = 0; s < 5; ++s) {
    Matrix y = gaussian(3, 2, s);
    y /= y.norm();
    EXPECT_EQ(cost.value(y), 0.0);
  }
}

TEST(HomotopyCost, RankOneAgreement) {
  const Matrix data = gaussian(6, 9, 21);
  const double rho = 0.2 * rho_bar(data);
  for (std::uint64_t s = 0; s < 5; ++s) {
    Matrix y = gaussian(6, 1, s);
    y /= y.norm();
    const double ccv = spectral_positive_sum(data, rho, y);
    const double cvx = convex_positive_sum(data, rho, y);
    EXPECT_NEAR(cvx, ccv, 1e-10 * std::max(std::abs(ccv), 1.0));
    const double at0 = HomotopyCost(data, rho, 0.0).value(y);
    const double at1 = HomotopyCost(data, rho, 1.0).value(y);
    EXPECT_NEAR(at0, at1, 1e-10 * std::max(std::abs(at0), 1.0));
  }
}

TEST(HomotopyCost, GradientFiniteDifference) {
  const Matrix data = gaussian(5, 8, 13);
  const double rho = 0.3 * rho_bar(data);
  for (double mu : {0.0, 0.35, 1.0}) {
    const HomotopyCost cost(data, rho, mu);
    const Matrix y = kink_free_point(data, rho, 2, 70);
    const Matrix z = gaussian(5, 2, 71);
    const double an = detail::frob(cost.euclidean_gradient(y), z);
    EXPECT_NEAR(fd_directional(cost, y, z, 1e-6), an, 1e-5 * std::max(std::abs(an), 1e-3)) << mu;
  }
}

TEST(HomotopyCost, EndpointsMatchComponents) {
  const Matrix data = gaussian(5, 8, 13);
  const double rho = 0.3 * rho_bar(data);
  const Matrix y = kink_free_point(data, rho, 3, 5);
  EXPECT_NEAR(HomotopyCost(data, rho, 0.0).value(y), -spectral_positive_sum(data, rho, y), 1e-12);
  EXPECT_NEAR(HomotopyCost(data, rho, 1.0).value(y), -convex_positive_sum(data, rho, y), 1e-12);
  EXPECT_NEAR(SpectralSpcaCost(data, rho).value(y), -spectral_positive_sum(data, rho, y), 1e-12);
}

TEST(CostInvariance, ValueUnderOrthogonalMixing) {
  const Matrix data = gaussian(6, 6, 1);
  const double rho = 0.3 * rho_bar(data);
  std::vector<std::unique_ptr<CostModel>> costs;
  costs.push_back(std::make_unique<LinearCost>(testutil::random_symmetric(6, 3).sparseView()));
  costs.push_back(std::make_unique<DspcaCost>(DspcaCost::from_data(data, 0.2, 1e-2)));
  costs.push_back(std::make_unique<SpectralSpcaCost>(data, rho));
  costs.push_back(std::make_unique<HomotopyCost>(data, rho, 0.5));
  const Matrix y = gaussian(6, 3, 2) * 0.4;
  const Matrix q = testutil::random_orthogonal(3, 3);
  for (const auto& c : costs) {
    const double a = c->value(y), b = c->value(y * q);
    EXPECT_NEAR(a, b, 1e-12 * std::max(std::abs(a), 1.0));
    // Gradient transforms covariantly.
    EXPECT_LE(testutil::rel_err(c->euclidean_gradient(y * q), c->euclidean_gradient(y) * q),
              1e-10);
  }
}

TEST(CostModel, ApplyXGradientConsistent) {
  const Matrix data = gaussian(6, 6, 1);
  const auto cost = DspcaCost::from_data(data, 0.2, 1e-2);
  const Matrix y = gaussian(6, 2, 2) * 0.4;
  // Euclidean gradient equals 2 grad_X f(YY^T) Y.
  EXPECT_LE(testutil::rel_err(2.0 * cost.apply_x_gradient(y, y), cost.euclidean_gradient(y)), 1e-12);
}
