#include <gtest/gtest.h>

#include <cmath>

#include "cmcm/error.hpp"
#include "cmcm/linalg.hpp"
#include "cmcm/log.hpp"
#include "cmcm/subspace.hpp"
#include "oracles.hpp"

namespace cmcm {
namespace {

Matrix proj(const Matrix& q) { return q * q.transpose(); }

Matrix cols(std::initializer_list<std::initializer_list<double>> columns) {
  const auto d = static_cast<Eigen::Index>(columns.begin()->size());
  Matrix m(d, static_cast<Eigen::Index>(columns.size()));
  Eigen::Index j = 0;
  for (const auto& c : columns) {
    Eigen::Index i = 0;
    for (double x : c) m(i++, j) = x;
    ++j;
  }
  return m;
}

TEST(SubspaceFromFeatures, CopiesOfUnitVector) {
  Vector u(3);
  u << 0.6, 0.8, 0;
  const Matrix f = u * Vector::Ones(5).transpose();
  const Subspace s = subspace_from_features(f, 1);
  EXPECT_NEAR(std::abs(s.basis.col(0).dot(u)), 1.0, 1e-12);
}

TEST(SubspaceFromFeatures, CoordinatePlane) {
  const Matrix f = cols({{1, 0, 0}, {0, 2, 0}, {3, 1, 0}});
  const Subspace s = subspace_from_features(f, 2);
  EXPECT_LE((proj(s.basis) - proj(Matrix::Identity(3, 2))).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SubspaceFromFeatures, RankExceededReportsRank) {
  const Matrix f = cols({{1, 0, 0}, {0, 2, 0}, {3, 1, 0}});
  try {
    subspace_from_features(f, 3);
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("rank 2"), std::string::npos) << e.what();
  }
}

TEST(CanonicalAngles, Cases) {
  const Subspace a{Matrix::Identity(3, 2)};
  EXPECT_NEAR(canonical_angles(a, a)[1], 1.0, 1e-10);
  const Subspace b{cols({{1, 0, 0}, {0, 1 / std::sqrt(2.0), 1 / std::sqrt(2.0)}})};
  const auto c = canonical_angles(a, b);
  EXPECT_NEAR(c[0], 1.0, 1e-12);
  EXPECT_NEAR(c[1], 1 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(subspace_similarity(a, b), 0.75, 1e-12);
  EXPECT_NEAR(subspace_similarity(Subspace{cols({{1, 0, 0}})}, Subspace{cols({{0, 0, 1}})}), 0.0, 1e-15);
}

TEST(CanonicalAngles, MatchProjectorProduct) {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix q1 = oracle::orthonormal_basis(rng, 15, 3);
    const Matrix q2 = oracle::orthonormal_basis(rng, 15, 5);
    const auto cos = canonical_angles(Subspace{q1}, Subspace{q2});
    const auto expected = oracle::projector_cos2(q1, q2);
    ASSERT_EQ(cos.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(cos[i] * cos[i], expected[i], 1e-8);
  }
}

TEST(CanonicalAngles, SymmetricAndBasisInvariant) {
  Rng rng(42);
  const Matrix q1 = oracle::orthonormal_basis(rng, 10, 3);
  const Matrix q2 = oracle::orthonormal_basis(rng, 10, 4);
  const auto ab = canonical_angles(Subspace{q1}, Subspace{q2});
  const auto ba = canonical_angles(Subspace{q2}, Subspace{q1});
  for (std::size_t i = 0; i < ab.size(); ++i) EXPECT_NEAR(ab[i], ba[i], 1e-10);
  const Matrix rot = oracle::orthonormal_basis(rng, 3, 3);
  EXPECT_NEAR(subspace_similarity(Subspace{q1 * rot}, Subspace{q2}), subspace_similarity(Subspace{q1}, Subspace{q2}),
              1e-10);
}

TEST(Gds, TwoByTwoExample) {
  const Subspace s1{cols({{1, 0}})};
  const Subspace s2{cols({{1 / std::sqrt(2.0), 1 / std::sqrt(2.0)}})};
  const Gds g = gds({s1, s2}, 1);
  // Trailing eigenpair of [[1.5, 0.5], [0.5, 0.5]].
  Eigen::SelfAdjointEigenSolver<Matrix> es((Matrix(2, 2) << 1.5, 0.5, 0.5, 0.5).finished());
  EXPECT_NEAR(std::abs(g.basis.col(0).dot(es.eigenvectors().col(0))), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(g.basis(0, 0)), 0.3827, 1e-4);
  EXPECT_NEAR(std::abs(g.basis(1, 0)), 0.9239, 1e-4);
  EXPECT_NEAR(g.eigenvalues[0], 1 - 1 / std::sqrt(2.0), 1e-12);
}

TEST(Gds, IdenticalSubspacesGiveComplement) {
  Rng rng(43);
  const Matrix q = oracle::orthonormal_basis(rng, 6, 2);
  const Gds g = gds({Subspace{q}, Subspace{q}, Subspace{q}}, 4);
  EXPECT_LE((proj(g.basis) * proj(q)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Gds, FullDimensionIsIdentity) {
  Rng rng(44);
  const Gds g = gds({Subspace{oracle::orthonormal_basis(rng, 5, 2)}, Subspace{oracle::orthonormal_basis(rng, 5, 3)}}, 5);
  EXPECT_LE((proj(g.basis) - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(g.eigenvalues.sum(), 5.0, 1e-8);
}

TEST(Gds, Errors) {
  const Subspace s{Matrix::Identity(3, 1)};
  EXPECT_THROW(gds({s}, 1), InvalidArgument);
  EXPECT_THROW(gds({s, s}, 4), InvalidArgument);
}

TEST(Gds, TieAtCutWarns) {
  std::vector<std::string> warnings;
  auto previous = set_warning_handler([&](const std::string& m) { warnings.push_back(m); });
  gds({Subspace{Matrix::Identity(4, 1)}, Subspace{Matrix::Identity(4, 1)}}, 2);
  set_warning_handler(previous);
  EXPECT_FALSE(warnings.empty());
}

TEST(ProjectSubspace, Cases) {
  const Subspace s{Matrix::Identity(3, 2)};
  const Subspace same = project_subspace(s, Matrix::Identity(3, 3));
  EXPECT_LE((proj(same.basis) - proj(s.basis)).cwiseAbs().maxCoeff(), 1e-12);

  const Subspace s13{cols({{1, 0, 0}, {0, 0, 1}})};
  const Subspace p = project_subspace(s13, Matrix::Identity(3, 2));
  ASSERT_EQ(p.dim(), 1);
  EXPECT_NEAR(std::abs(p.basis(0, 0)), 1.0, 1e-15);

  EXPECT_THROW(project_subspace(Subspace{cols({{0, 0, 1}})}, Matrix::Identity(3, 2)), NumericError);
}

TEST(ProjectSubspace, MatchesDirectRecomputation) {
  Rng rng(45);
  const Matrix q = oracle::orthonormal_basis(rng, 9, 5);
  const Matrix b = oracle::orthonormal_basis(rng, 9, 3);
  const Subspace p = project_subspace(Subspace{b}, q);
  Eigen::HouseholderQR<Matrix> qr(q.transpose() * b);
  const Matrix expected = qr.householderQ() * Matrix::Identity(5, 3);
  EXPECT_LE((proj(p.basis) - proj(expected)).cwiseAbs().maxCoeff(), 1e-10);
}

}  // namespace
}  // namespace cmcm
