#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace cmcm {

/// Dense column-major real matrix. Feature sets, bases and scatter matrices
/// all use this type; columns are vectors in the ambient space.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

inline constexpr double kDefaultRankTol = 1e-10;

/// Throws InvalidArgument when m is empty or holds a NaN/Inf entry.
void require_valid(const Matrix& m, std::string_view what);
void require_finite(const Matrix& m, std::string_view what);

/// Orthonormal basis of the column span of m.
///
/// Modified Gram-Schmidt with one re-orthogonalization pass. A column is
/// dropped when its residual norm is <= rank_tol * (largest column norm), so
/// the number of returned columns is the numerical rank. An all-zero input
/// yields a d x 0 matrix.
Matrix orthonormalize(const Matrix& m, double rank_tol = kDefaultRankTol);

struct Svd {
  Matrix u;
  Vector s;  // descending, non-negative
  Matrix v;
};

/// Thin SVD, m = u * diag(s) * v^T.
Svd svd(const Matrix& m);

struct EigPair {
  double value;
  Vector vector;  // unit Euclidean norm
};

/// Lower Cholesky factor of a symmetric positive definite matrix. Throws
/// NumericError naming the first non-positive pivot.
Matrix cholesky(const Matrix& b);

/// Solves a * phi = gamma * b * phi for symmetric a and SPD b by Cholesky
/// reduction to a standard symmetric problem. Pairs come back sorted by
/// value, descending, with unit-norm vectors.
std::vector<EigPair> sym_generalized_eig(const Matrix& a, const Matrix& b);

/// Eigenpairs of a symmetric matrix, ascending.
struct SymEig {
  Vector values;
  Matrix vectors;
};
SymEig sym_eig(const Matrix& a);

/// Orthogonal projector q * q^T.
Matrix projector(const Matrix& q);

}  // namespace linalg
}  // namespace cmcm
