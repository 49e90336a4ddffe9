#include "cmcm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cmcm/error.hpp"

namespace cmcm::linalg {

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) throw InvalidArgument(std::string(what) + ": matrix has non-finite entries");
}

void require_valid(const Matrix& m, std::string_view what) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw InvalidArgument(std::string(what) + ": matrix must have at least one row and column");
  }
  require_finite(m, what);
}

Matrix orthonormalize(const Matrix& m, double rank_tol) {
  if (!(rank_tol > 0.0)) throw InvalidArgument("orthonormalize: rank_tol must be positive");
  require_finite(m, "orthonormalize");

  const Eigen::Index d = m.rows();
  double max_norm = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) max_norm = std::max(max_norm, m.col(j).norm());
  Matrix q(d, m.cols());
  if (max_norm == 0.0) return Matrix(d, 0);
  const double cutoff = rank_tol * max_norm;

  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Vector v = m.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < k; ++i) v -= q.col(i).dot(v) * q.col(i);
    }
    const double norm = v.norm();
    if (norm <= cutoff) continue;
    q.col(k++) = v / norm;
  }
  return q.leftCols(k);
}

Svd svd(const Matrix& m) {
  require_valid(m, "svd");
  Eigen::JacobiSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

Matrix cholesky(const Matrix& b) {
  if (b.rows() != b.cols()) throw DimensionMismatch("cholesky: matrix must be square");
  const Eigen::Index n = b.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = b(j, j) - l.row(j).head(j).squaredNorm();
    if (!(diag > 0.0)) {
      std::ostringstream msg;
      msg << "cholesky: matrix is not positive definite (pivot " << j << " = " << diag << ")";
      throw NumericError(msg.str());
    }
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (b(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return l;
}

std::vector<EigPair> sym_generalized_eig(const Matrix& a, const Matrix& b) {
  require_valid(a, "sym_generalized_eig(A)");
  require_valid(b, "sym_generalized_eig(B)");
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw DimensionMismatch("sym_generalized_eig: A and B must be square and of equal size");
  }
  const Matrix l = cholesky(b);
  const auto lower = l.triangularView<Eigen::Lower>();

  // C = L^{-1} A L^{-T}
  Matrix c = lower.solve(a);
  c = lower.solve(c.transpose()).transpose();
  c = 0.5 * (c + c.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
  if (eig.info() != Eigen::Success) throw NumericError("sym_generalized_eig: eigensolver failed");

  const Eigen::Index n = a.rows();
  Matrix phi = lower.transpose().solve(eig.eigenvectors());
  std::vector<EigPair> pairs;
  pairs.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    Vector v = phi.col(i);
    v /= v.norm();
    pairs.push_back({eig.eigenvalues()(i), std::move(v)});
  }
  // the backend returns ascending values; reversing keeps its order among ties
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const EigPair& x, const EigPair& y) { return x.value > y.value; });
  return pairs;
}

SymEig sym_eig(const Matrix& a) {
  require_valid(a, "sym_eig");
  if (a.rows() != a.cols()) throw DimensionMismatch("sym_eig: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (a + a.transpose()));
  if (eig.info() != Eigen::Success) throw NumericError("sym_eig: eigensolver failed");
  return {eig.eigenvalues(), eig.eigenvectors()};
}

Matrix projector(const Matrix& q) { return q * q.transpose(); }

}  // namespace cmcm::linalg
