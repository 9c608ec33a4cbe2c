#include <gtest/gtest.h>

#include <cmath>

#include "lowrank_sdp/manifold.hpp"
#include "test_util.hpp"

using namespace lowrank_sdp;
using testutil::gaussian;
using testutil::make_geometry;

namespace {

// Horizontal projection recomputed by a dense linear solve: unknowns are the
// strictly-upper entries of a skew Ω and the normal coefficients α; the
// equations are symmetry of Y^T Z_H and Tr(Y^T A_i Z_H) = 0.
Matrix projection_oracle(const ConstraintSet& cs, const Matrix& y, const Matrix& z) {
  const Index p = y.cols();
  const Index m = cs.count();
  std::vector<Matrix> a_y;
  for (Index i = 0; i < m; ++i) a_y.push_back(Matrix(cs.matrix(i)) * y);
  const Index n_skew = p * (p - 1) / 2;
  const Index unknowns = n_skew + m;

  auto conditions = [&](const Matrix& w) {
    Vector e(unknowns);
    const Matrix s = y.transpose() * w;
    Index k = 0;
    for (Index r = 0; r < p; ++r)
      for (Index c = r + 1; c < p; ++c) e(k++) = s(r, c) - s(c, r);
    for (Index i = 0; i < m; ++i) e(k++) = (a_y[i].array() * w.array()).sum();
    return e;
  };
  auto offset = [&](const Vector& u) {
    Matrix omega = Matrix::Zero(p, p);
    Index k = 0;
    for (Index r = 0; r < p; ++r)
      for (Index c = r + 1; c < p; ++c) {
        omega(r, c) = u(k);
        omega(c, r) = -u(k);
        ++k;
      }
    Matrix w = y * omega;
    for (Index i = 0; i < m; ++i) w += u(k++) * a_y[i];
    return w;
  };

  Matrix sys(unknowns, unknowns);
  for (Index k = 0; k < unknowns; ++k) sys.col(k) = conditions(offset(Vector::Unit(unknowns, k)));
  const Vector u = sys.fullPivLu().solve(conditions(z));
  return z - offset(u);
}

Matrix random_skew(Index p, std::uint64_t seed) {
  const Matrix a = gaussian(p, p, seed);
  return a - a.transpose();
}

struct Case {
  ConstraintSet cs;
  Matrix y;
};

Case random_case(int kind, Index n, Index p, std::uint64_t seed) {
  ConstraintSet cs = make_geometry(kind, n, seed);
  Matrix y = random_feasible(cs, p, seed + 1000).matrix();
  return {std::move(cs), std::move(y)};
}

}  // namespace

TEST(ValidateConstraints, StructuredSetsPass) {
  EXPECT_NO_THROW(validate_constraints(ConstraintSet::elliptope(3)));
  EXPECT_NO_THROW(validate_constraints(ConstraintSet::spectahedron(5)));
}

TEST(ValidateConstraints, DisjointDiagonalsPass) {
  Matrix a1 = Matrix::Zero(3, 3), a2 = Matrix::Zero(3, 3);
  a1(0, 0) = 1.0;
  a2(1, 1) = a2(2, 2) = 1.0;
  auto cs = ConstraintSet::generic(3, {a1.sparseView(), a2.sparseView()}, Vector::Ones(2));
  EXPECT_NO_THROW(validate_constraints(cs));
  EXPECT_EQ(cs.count(), 2);
}

TEST(ValidateConstraints, OverlappingMatricesRejected) {
  Matrix a1 = Matrix::Zero(3, 3), a2 = Matrix::Zero(3, 3);
  a1(0, 0) = a1(1, 1) = 1.0;
  a2(1, 1) = a2(2, 2) = 1.0;
  try {
    ConstraintSet::generic(3, {a1.sparseView(), a2.sparseView()}, Vector::Ones(2));
    FAIL() << "expected AssumptionViolation";
  } catch (const AssumptionViolation& e) {
    EXPECT_EQ(e.first(), 0u);
    EXPECT_EQ(e.second(), 1u);
    EXPECT_GT(e.product_norm(), 0.5);
  }
}

TEST(ValidateConstraints, AsymmetricMatrixRejected) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 1) = 1.0;
  EXPECT_THROW(ConstraintSet::generic(2, {a.sparseView()}, Vector::Ones(1)), DimensionMismatch);
}

TEST(ValidateConstraints, WrongShapeRejected) {
  Matrix a = Matrix::Identity(3, 3);
  EXPECT_THROW(ConstraintSet::generic(2, {a.sparseView()}, Vector::Ones(1)), DimensionMismatch);
  EXPECT_THROW(ConstraintSet::generic(3, {a.sparseView()}, Vector::Ones(2)), DimensionMismatch);
}

TEST(Residual, Examples) {
  EXPECT_LE(residual(ConstraintSet::elliptope(2), Matrix::Identity(2, 2)).norm(), 0.0);

  const Vector r = residual(ConstraintSet::spectahedron(2), Matrix::Ones(2, 1));
  ASSERT_EQ(r.size(), 1);
  EXPECT_NEAR(r(0), 1.0, 1e-15);

  Matrix y = random_feasible(ConstraintSet::elliptope(3), 2, 5).matrix();
  y.row(1) *= 2.0;
  const Vector r3 = residual(ConstraintSet::elliptope(3), y);
  EXPECT_NEAR(r3(0), 0.0, 1e-12);
  EXPECT_NEAR(r3(1), 3.0, 1e-12);
  EXPECT_NEAR(r3(2), 0.0, 1e-12);
}

TEST(Residual, DimensionChecked) {
  EXPECT_THROW(residual(ConstraintSet::elliptope(3), Matrix::Identity(2, 2)), DimensionMismatch);
}

TEST(RandomFeasible, ElliptopeRowsUnit) {
  const Matrix y = random_feasible(ConstraintSet::elliptope(4), 2, 11).matrix();
  ASSERT_EQ(y.rows(), 4);
  ASSERT_EQ(y.cols(), 2);
  for (Index i = 0; i < 4; ++i) EXPECT_NEAR(y.row(i).norm(), 1.0, 1e-12);
}

TEST(RandomFeasible, SpectahedronUnitFrobenius) {
  const Matrix y = random_feasible(ConstraintSet::spectahedron(6), 3, 11).matrix();
  EXPECT_NEAR(y.norm(), 1.0, 1e-12);
}

TEST(RandomFeasible, GenericFeasible) {
  const auto cs = testutil::random_generic(9, 3, 4);
  const Matrix y = random_feasible(cs, 4, 2).matrix();
  EXPECT_LE(residual(cs, y).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(RandomFeasible, Deterministic) {
  const auto cs = ConstraintSet::elliptope(7);
  const Matrix a = random_feasible(cs, 3, 42).matrix();
  const Matrix b = random_feasible(cs, 3, 42).matrix();
  const Matrix c = random_feasible(cs, 3, 43).matrix();
  EXPECT_TRUE((a.array() == b.array()).all());
  EXPECT_FALSE((a.array() == c.array()).all());
}

TEST(RandomFeasible, RankOutOfRange) {
  EXPECT_THROW(random_feasible(ConstraintSet::elliptope(3), 0, 1), DimensionMismatch);
  EXPECT_THROW(random_feasible(ConstraintSet::elliptope(3), 4, 1), DimensionMismatch);
}

TEST(ProjectHorizontal, HorizontalFixed) {
  for (int kind = 0; kind < 3; ++kind) {
    auto c = random_case(kind, 8, 3, 7);
    const Matrix zh = detail::project(c.cs, c.y, gaussian(8, 3, 8));
    EXPECT_LE((detail::project(c.cs, c.y, zh) - zh).norm(), 1e-12 * zh.norm()) << kind;
  }
}

TEST(ProjectHorizontal, VerticalAnnihilated) {
  for (int kind = 0; kind < 3; ++kind) {
    auto c = random_case(kind, 8, 3, 9);
    const Matrix z = c.y * random_skew(3, 10);
    EXPECT_LE(detail::project(c.cs, c.y, z).norm(), 1e-12 * z.norm()) << kind;
  }
}

TEST(ProjectHorizontal, SmallElliptopeAgainstOracle) {
  const auto cs = ConstraintSet::elliptope(3);
  Matrix y(3, 2);
  y << 1, 0, 0, 1, 3, 4;
  y.row(2) /= 5.0;
  Matrix z(3, 2);
  z << 1, 2, -1, 3, 2, -2;
  const Matrix oracle = projection_oracle(cs, y, z);
  const Matrix got = project_horizontal(cs, FactorPoint(y), z).z;
  EXPECT_LE((got - oracle).norm(), 1e-12 * z.norm());
  // Horizontality of the result
  const Matrix s = y.transpose() * got;
  EXPECT_NEAR(s(0, 1), s(1, 0), 1e-12);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(y.row(i).dot(got.row(i)), 0.0, 1e-12);
}

TEST(ProjectHorizontal, MatchesOracleAllGeometries) {
  for (int kind = 0; kind < 3; ++kind) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto c = random_case(kind, 10, 3, 20 + seed);
      const Matrix z = gaussian(10, 3, 50 + seed);
      EXPECT_LE((detail::project(c.cs, c.y, z) - projection_oracle(c.cs, c.y, z)).norm(),
                1e-10 * z.norm())
          << kind << " " << seed;
    }
  }
}

TEST(ProjectHorizontal, TagsBasePoint) {
  const auto cs = ConstraintSet::elliptope(4);
  const FactorPoint y = random_feasible(cs, 2, 1);
  EXPECT_EQ(project_horizontal(cs, y, gaussian(4, 2, 2)).base_tag, y.tag());
}

TEST(ProjectHorizontal, RankDeficientRaisesSingularGram) {
  const auto cs = ConstraintSet::elliptope(4);
  Matrix y = Matrix::Zero(4, 2);
  y.col(0).setOnes();
  EXPECT_THROW(project_horizontal(cs, FactorPoint(y), gaussian(4, 2, 1)), SingularGram);
}

TEST(ProjectHorizontal, ShapeChecked) {
  const auto cs = ConstraintSet::elliptope(4);
  const FactorPoint y = random_feasible(cs, 2, 1);
  EXPECT_THROW(project_horizontal(cs, y, gaussian(4, 3, 2)), DimensionMismatch);
}

TEST(SkewSylvester, SolvesEquation) {
  const Matrix a = gaussian(5, 5, 3);
  const Matrix gram = a * a.transpose() + Matrix::Identity(5, 5);
  const Matrix rhs = random_skew(5, 4);
  const Matrix omega = detail::solve_skew_sylvester(gram, rhs);
  EXPECT_LE((omega * gram + gram * omega - rhs).norm(), 1e-12 * rhs.norm());
  EXPECT_LE((omega + omega.transpose()).norm(), 1e-13);
}

TEST(Retract, ZeroStepIsIdentity) {
  for (int kind = 0; kind < 3; ++kind) {
    auto c = random_case(kind, 6, 2, 3);
    const FactorPoint y(c.y);
    const FactorPoint r = retract(c.cs, y, TangentVector{Matrix::Zero(6, 2), y.tag()});
    EXPECT_LE((r.matrix() - c.y).norm(), 1e-15) << kind;
  }
}

TEST(Retract, SpectahedronStaysNormalized) {
  const auto cs = ConstraintSet::spectahedron(7);
  const FactorPoint y = random_feasible(cs, 3, 8);
  const TangentVector z = project_horizontal(cs, y, gaussian(7, 3, 9));
  EXPECT_NEAR(retract(cs, y, z).matrix().norm(), 1.0, 1e-14);
}

TEST(Retract, ElliptopeTwoByTwo) {
  const auto cs = ConstraintSet::elliptope(2);
  const FactorPoint y(Matrix::Identity(2, 2));
  Matrix z(2, 2);
  z << 0, 0.5, 0.5, 0;
  const Matrix r = retract(cs, y, TangentVector{z, y.tag()}).matrix();
  Matrix expected(2, 2);
  expected << 1, 0.5, 0.5, 1;
  expected /= std::sqrt(1.25);
  EXPECT_LE((r - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(r(0, 0), 0.894, 1e-3);
  EXPECT_NEAR(r(0, 1), 0.447, 1e-3);
}

TEST(Retract, RejectsForeignTangent) {
  const auto cs = ConstraintSet::elliptope(3);
  const FactorPoint y = random_feasible(cs, 2, 1);
  const FactorPoint other = random_feasible(cs, 2, 2);
  const TangentVector z = project_horizontal(cs, other, gaussian(3, 2, 3));
  EXPECT_THROW(retract(cs, y, z), BasePointMismatch);
}

TEST(Retract, VanishingRowFails) {
  const auto cs = ConstraintSet::elliptope(2);
  EXPECT_THROW(detail::retract(cs, Matrix::Identity(2, 2), -Matrix::Identity(2, 2)),
               RetractionFailure);
}

TEST(Retract, GenericWithoutRealRootFails) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  Matrix b = Matrix::Zero(2, 2);
  b(1, 1) = 1.0;
  const auto cs = ConstraintSet::generic(2, {a.sparseView(), b.sparseView()}, Vector::Ones(2));
  Matrix y = Matrix::Identity(2, 2);
  Matrix z = Matrix::Zero(2, 2);
  z(0, 0) = -1.0;  // first row of Y + Z vanishes, no scaling of it can restore Tr = 1
  EXPECT_THROW(detail::retract(cs, y, z), RetractionFailure);
}

TEST(Inner, Examples) {
  const auto cs = ConstraintSet::elliptope(4);
  const FactorPoint y = random_feasible(cs, 2, 1);
  const TangentVector z1 = project_horizontal(cs, y, gaussian(4, 2, 2));
  const TangentVector z2 = project_horizontal(cs, y, gaussian(4, 2, 3));
  EXPECT_GT(inner(z1, z1), 0.0);
  EXPECT_EQ(inner(z1, z2), inner(z2, z1));

  Matrix e = Matrix::Zero(4, 2);
  e(0, 0) = 1.0;
  EXPECT_EQ(inner(TangentVector{e, 7}, TangentVector{e, 7}), 1.0);
  EXPECT_THROW(inner(TangentVector{e, 7}, TangentVector{e, 8}), BasePointMismatch);
}

// Randomized property checks over the three geometries.
class GeometryProperty : public ::testing::TestWithParam<int> {};

TEST_P(GeometryProperty, ProjectionAndRetraction) {
  const int kind = GetParam();
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const Index n = 3 + static_cast<Index>((seed * 7) % 40);
    const Index p = 1 + static_cast<Index>(seed % std::min<Index>(8, n));
    auto c = random_case(kind, n, p, 100 + seed);
    const Matrix z = gaussian(n, p, 200 + seed);
    const Matrix z2 = gaussian(n, p, 300 + seed);
    const HorizontalSplit s = detail::split(c.cs, c.y, z);

    const Matrix pz = detail::project(c.cs, c.y, s.horizontal);
    EXPECT_LE((pz - s.horizontal).norm(), 1e-12 * z.norm()) << "idempotence";

    const double total = s.horizontal.squaredNorm() + s.vertical.squaredNorm() +
                         s.normal.squaredNorm();
    EXPECT_NEAR(total, z.squaredNorm(), 1e-10 * z.squaredNorm()) << "decomposition";
    EXPECT_LE((s.horizontal + s.vertical + s.normal - z).norm(), 1e-12 * z.norm());

    const double lhs = detail::frob(detail::project(c.cs, c.y, z), z2);
    const double rhs = detail::frob(z, detail::project(c.cs, c.y, z2));
    EXPECT_NEAR(lhs, rhs, 1e-12 * z.norm() * z2.norm()) << "self-adjoint";

    const Matrix q = testutil::random_orthogonal(p, 400 + seed);
    const Matrix pq = detail::project(c.cs, c.y * q, z * q);
    EXPECT_LE((pq - detail::project(c.cs, c.y, z) * q).norm(), 1e-10 * z.norm()) << "class";

    // Feasibility for steps up to unit norm; a p = 1 elliptope point has no
    // horizontal directions at all
    if (s.horizontal.norm() <= 1e-12 * z.norm()) continue;
    const Matrix zh = s.horizontal / s.horizontal.norm();
    for (double t : {1e-3, 0.1, 0.5, 1.0}) {
      const Matrix r = detail::retract(c.cs, c.y, t * zh);
      EXPECT_LE(residual(c.cs, r).lpNorm<Eigen::Infinity>(), 1e-12) << "feasibility " << t;
    }

    // Second-order residual: err(t) / t^2 roughly constant
    std::vector<double> err;
    for (double t : {1e-3, 1e-4, 1e-5}) {
      err.push_back((detail::retract(c.cs, c.y, t * zh) - (c.y + t * zh)).norm());
    }
    for (int k = 0; k + 1 < 3; ++k) {
      if (err[k] < 1e-13) continue;  // retraction exact to roundoff along this direction
      const double ratio = err[k] / err[k + 1];
      EXPECT_GT(ratio, 100.0 / 3.0) << "O(t^2) decay " << kind << " " << seed;
      EXPECT_LT(ratio, 100.0 * 3.0) << "O(t^2) decay " << kind << " " << seed;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllKinds, GeometryProperty, ::testing::Values(0, 1, 2));
