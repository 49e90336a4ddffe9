#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "cmcm/error.hpp"
#include "cmcm/linalg.hpp"
#include "oracles.hpp"

namespace cmcm {
namespace {

using linalg::orthonormalize;

Matrix svd_projector(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const Eigen::Index r = (svd.singularValues().array() > 1e-10 * svd.singularValues()[0]).count();
  const Matrix u = svd.matrixU().leftCols(r);
  return u * u.transpose();
}

TEST(Orthonormalize, IdentityColumnsPassThrough) {
  const Matrix id = Matrix::Identity(4, 3);
  EXPECT_TRUE(orthonormalize(id).isApprox(id, 1e-15));
}

TEST(Orthonormalize, DropsDependentColumn) {
  Matrix m(2, 2);
  m << 1, 2, 0, 0;
  const Matrix q = orthonormalize(m);
  ASSERT_EQ(q.cols(), 1);
  EXPECT_NEAR(q(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(q(1, 0), 0.0, 1e-15);
}

TEST(Orthonormalize, ZeroInputGivesNoColumns) {
  const Matrix q = orthonormalize(Matrix::Zero(3, 2));
  EXPECT_EQ(q.rows(), 3);
  EXPECT_EQ(q.cols(), 0);
}

TEST(Orthonormalize, MatchesSvdProjectorOnRandomInput) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = oracle::random_matrix(rng, 5, 3);
    const Matrix q = orthonormalize(m);
    ASSERT_EQ(q.cols(), 3);
    EXPECT_LE((q.transpose() * q - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((q * q.transpose() - svd_projector(m)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Orthonormalize, Idempotent) {
  Rng rng(12);
  const Matrix m = oracle::random_matrix(rng, 7, 4);
  const Matrix q1 = orthonormalize(m);
  const Matrix q2 = orthonormalize(q1);
  EXPECT_LE((linalg::projector(q1) - linalg::projector(q2)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Orthonormalize, RejectsNonFinite) {
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(orthonormalize(m), InvalidArgument);
}

TEST(Svd, Diagonal) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 3;
  m(1, 1) = 2;
  const auto s = linalg::svd(m).s;
  EXPECT_NEAR(s[0], 3.0, 1e-14);
  EXPECT_NEAR(s[1], 2.0, 1e-14);
}

TEST(Svd, RankOneOuterProduct) {
  Vector u(3), v(4);
  u << 2, 0, 0;
  v << 0, 3, 0, 0;
  const auto s = linalg::svd(u * v.transpose()).s;
  EXPECT_NEAR(s[0], 6.0, 1e-13);
  for (Eigen::Index i = 1; i < s.size(); ++i) EXPECT_NEAR(s[i], 0.0, 1e-13);
}

TEST(Svd, ReconstructsRandomMatrix) {
  Rng rng(13);
  const Matrix m = oracle::random_matrix(rng, 6, 4);
  const auto dec = linalg::svd(m);
  const Matrix back = dec.u * dec.s.asDiagonal() * dec.v.transpose();
  EXPECT_LE((back - m).norm(), 1e-10 * m.norm());
  for (Eigen::Index i = 1; i < dec.s.size(); ++i) EXPECT_GE(dec.s[i - 1], dec.s[i]);
  EXPECT_LE((dec.u.transpose() * dec.u - Matrix::Identity(4, 4)).norm(), 1e-12);
}

TEST(Svd, InvariantUnderOrthonormalMultiplication) {
  Rng rng(14);
  const Matrix m = oracle::random_matrix(rng, 5, 4);
  const Matrix left = oracle::orthonormal_basis(rng, 5, 5);
  const Matrix right = oracle::orthonormal_basis(rng, 4, 4);
  const Vector s0 = linalg::svd(m).s;
  const Vector s1 = linalg::svd(left * m * right).s;
  EXPECT_LE((s0 - s1).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GeneralizedEig, DiagonalCase) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 2;
  a(1, 1) = 1;
  const auto pairs = linalg::sym_generalized_eig(a, Matrix::Identity(2, 2));
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_NEAR(pairs[0].value, 2.0, 1e-14);
  EXPECT_NEAR(pairs[1].value, 1.0, 1e-14);
  EXPECT_NEAR(std::abs(pairs[0].vector[0]), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(pairs[1].vector[1]), 1.0, 1e-14);
}

TEST(GeneralizedEig, EqualOperatorsGiveUnitEigenvalues) {
  Rng rng(15);
  const Matrix r = oracle::random_matrix(rng, 5, 5);
  const Matrix spd = r * r.transpose() + Matrix::Identity(5, 5);
  for (const auto& p : linalg::sym_generalized_eig(spd, spd)) EXPECT_NEAR(p.value, 1.0, 1e-10);
}

TEST(GeneralizedEig, ResidualBoundOnRandomPairs) {
  Rng rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix ra = oracle::random_matrix(rng, 10, 6);
    const Matrix rb = oracle::random_matrix(rng, 10, 10);
    const Matrix a = ra * ra.transpose();
    const Matrix b = rb * rb.transpose() + 0.1 * Matrix::Identity(10, 10);
    const auto pairs = linalg::sym_generalized_eig(a, b);
    const double scale = a.norm() + b.norm();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& p = pairs[i];
      EXPECT_NEAR(p.vector.norm(), 1.0, 1e-12);
      EXPECT_LE((a * p.vector - p.value * b * p.vector).norm(), 1e-8 * scale);
      if (i > 0) {
        EXPECT_GE(pairs[i - 1].value, p.value);
      }
    }
  }
}

TEST(GeneralizedEig, IdentityMetricMatchesPlainEigensolve) {
  Rng rng(17);
  const Matrix r = oracle::random_matrix(rng, 6, 6);
  const Matrix a = r + r.transpose();
  const auto pairs = linalg::sym_generalized_eig(a, Matrix::Identity(6, 6));
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(pairs[static_cast<std::size_t>(i)].value, es.eigenvalues()[5 - i], 1e-9);
}

TEST(GeneralizedEig, IndefiniteMetricNamesPivot) {
  Matrix b = Matrix::Identity(3, 3);
  b(2, 2) = -1.0;
  try {
    linalg::sym_generalized_eig(Matrix::Identity(3, 3), b);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("pivot 2"), std::string::npos) << e.what();
  }
}

TEST(GeneralizedEig, ShapeMismatch) {
  EXPECT_THROW(linalg::sym_generalized_eig(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), DimensionMismatch);
}

}  // namespace
}  // namespace cmcm
