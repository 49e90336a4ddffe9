#include "cmcm/nnopt.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "cmcm/error.hpp"
#include "cmcm/parallel.hpp"
#include "cmcm/random.hpp"

namespace cmcm::nnopt {

namespace {

using Index = Eigen::Index;

// Lawson-Hanson over an abstract least-squares problem. `Problem` supplies
//   dual(w)      -> B^T (x - B w)
//   solve(idx)   -> unconstrained LS weights on the columns in idx
//   usable(i)    -> false for zero columns
template <class Problem>
Vector active_set(const Problem& problem, Index r, double tol_abs) {
  Vector w = Vector::Zero(r);
  std::vector<char> passive(static_cast<std::size_t>(r), 0);
  std::vector<char> blocked(static_cast<std::size_t>(r), 0);
  std::vector<Index> idx;
  idx.reserve(static_cast<std::size_t>(r));

  const int max_outer = 10 * static_cast<int>(r) + 20;
  for (int outer = 0; outer < max_outer; ++outer) {
    const Vector dual = problem.dual(w);
    Index enter = -1;
    double best = tol_abs;
    for (Index i = 0; i < r; ++i) {
      const auto s = static_cast<std::size_t>(i);
      if (passive[s] || blocked[s] || !problem.usable(i)) continue;
      if (dual(i) > best) {
        best = dual(i);
        enter = i;
      }
    }
    if (enter < 0) break;
    passive[static_cast<std::size_t>(enter)] = 1;

    bool moved = false;
    for (Index inner = 0; inner <= r; ++inner) {
      idx.clear();
      for (Index i = 0; i < r; ++i)
        if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
      const Vector z = problem.solve(idx);

      bool feasible = true;
      for (std::size_t k = 0; k < idx.size(); ++k) feasible = feasible && z(static_cast<Index>(k)) > 0.0;
      if (feasible) {
        for (std::size_t k = 0; k < idx.size(); ++k) w(idx[k]) = z(static_cast<Index>(k));
        moved = true;
        break;
      }

      // step toward z until the first passive weight reaches zero
      double alpha = 1.0;
      Index hit = -1;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double zk = z(static_cast<Index>(k));
        if (zk <= 0.0) {
          const double wk = w(idx[k]);
          const double a = wk / (wk - zk);
          if (a < alpha) {
            alpha = a;
            hit = idx[k];
          }
        }
      }
      if (alpha <= 0.0 && hit == enter && !moved) {
        // the entering column cannot improve the fit numerically
        passive[static_cast<std::size_t>(enter)] = 0;
        blocked[static_cast<std::size_t>(enter)] = 1;
        w(enter) = 0.0;
        break;
      }
      for (std::size_t k = 0; k < idx.size(); ++k) {
        w(idx[k]) += alpha * (z(static_cast<Index>(k)) - w(idx[k]));
      }
      if (hit >= 0) w(hit) = 0.0;
      moved = moved || alpha > 0.0;
      for (Index i : idx) {
        if (w(i) <= 0.0) {
          w(i) = 0.0;
          passive[static_cast<std::size_t>(i)] = 0;
        }
      }
    }
    if (moved) std::fill(blocked.begin(), blocked.end(), 0);
  }
  return w;
}

struct DirectProblem {
  const Matrix& b;
  const Vector& x;
  std::vector<char> nonzero;

  Vector dual(const Vector& w) const { return b.transpose() * (x - b * w); }
  bool usable(Index i) const { return nonzero[static_cast<std::size_t>(i)] != 0; }
  Vector solve(const std::vector<Index>& idx) const {
    Matrix sub(b.rows(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Index>(k)) = b.col(idx[k]);
    return sub.colPivHouseholderQr().solve(x);
  }
};

struct GramProblem {
  const Matrix& g;
  const Vector& c;

  Vector dual(const Vector& w) const { return c - g * w; }
  bool usable(Index i) const { return g(i, i) > 0.0; }
  Vector solve(const std::vector<Index>& idx) const {
    const auto n = static_cast<Index>(idx.size());
    Matrix sub(n, n);
    Vector rhs(n);
    for (Index a = 0; a < n; ++a) {
      rhs(a) = c(idx[static_cast<std::size_t>(a)]);
      for (Index k = 0; k < n; ++k) sub(a, k) = g(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(k)]);
    }
    return sub.ldlt().solve(rhs);
  }
};

}  // namespace

NnlsSolution nnls_solve(const Matrix& b, const Vector& x, double tol) {
  linalg::require_valid(b, "nnls_solve(B)");
  if (x.size() != b.rows()) {
    std::ostringstream msg;
    msg << "nnls_solve: B has " << b.rows() << " rows but x has " << x.size() << " entries";
    throw DimensionMismatch(msg.str());
  }
  if (!x.allFinite()) throw InvalidArgument("nnls_solve: x has non-finite entries");

  const Index r = b.cols();
  const double scale = (b.transpose() * x).cwiseAbs().maxCoeff();
  if (scale == 0.0) return {Vector::Zero(r), x.norm()};

  DirectProblem problem{b, x, std::vector<char>(static_cast<std::size_t>(r))};
  for (Index i = 0; i < r; ++i) problem.nonzero[static_cast<std::size_t>(i)] = b.col(i).squaredNorm() > 0.0;
  Vector w = active_set(problem, r, tol * scale);
  const double residual = (x - b * w).norm();
  return {std::move(w), residual};
}

Vector nnls_gram(const Matrix& gram, const Vector& c, double tol) {
  if (gram.rows() != gram.cols() || gram.rows() != c.size()) {
    throw DimensionMismatch("nnls_gram: Gram matrix and right-hand side sizes disagree");
  }
  const Index r = c.size();
  if (r == 0) return Vector(0);
  const double scale = c.cwiseAbs().maxCoeff();
  if (scale == 0.0) return Vector::Zero(r);
  return active_set(GramProblem{gram, c}, r, tol * scale);
}

namespace {

// Solves every column of rhs against one Gram matrix. Columns are
// independent, so the result does not depend on the thread count.
Matrix solve_columns(const Matrix& gram, const Matrix& rhs) {
  Matrix out(rhs.rows(), rhs.cols());
  parallel_for(static_cast<std::size_t>(rhs.cols()), [&](std::size_t j) {
    const auto col = static_cast<Index>(j);
    out.col(col) = nnls_gram(gram, rhs.col(col));
  });
  return out;
}

std::mutex g_observer_mutex;
NmfObserver g_observer;

}  // namespace

NmfObserver set_nmf_observer(NmfObserver observer) {
  std::lock_guard lock(g_observer_mutex);
  return std::exchange(g_observer, std::move(observer));
}

NmfResult nmf(const Matrix& f, int rank, const NmfOptions& opts) {
  linalg::require_valid(f, "nmf");
  for (Index j = 0; j < f.cols(); ++j) {
    for (Index i = 0; i < f.rows(); ++i) {
      if (f(i, j) < 0.0) {
        std::ostringstream msg;
        msg << "nmf: negative entry " << f(i, j) << " at row " << i << ", column " << j;
        throw DataError(DataErrorKind::kNegativeValue, msg.str());
      }
    }
  }
  const Index d = f.rows();
  const Index n = f.cols();
  if (rank < 1 || rank > std::min(d, n)) {
    std::ostringstream msg;
    msg << "nmf: rank " << rank << " outside [1, " << std::min(d, n) << "]";
    throw InvalidArgument(msg.str());
  }
  if (opts.max_iter < 1 || !(opts.rel_tol >= 0.0)) throw InvalidArgument("nmf: bad options");

  NmfResult result;
  if (rank == n || rank == d) {
    // Full rank: F = F I and F = I F are both exact and non-negative.
    if (rank == n) {
      result.basis = f;
      result.coeffs = Matrix::Identity(n, n);
    } else {
      result.basis = Matrix::Identity(d, d);
      result.coeffs = f;
    }
    result.objective_history.push_back((f - result.basis * result.coeffs).norm());
    std::lock_guard lock(g_observer_mutex);
    if (g_observer) g_observer(result);
    return result;
  }

  Rng rng(opts.seed);
  Matrix b(d, rank);
  for (Index j = 0; j < rank; ++j)
    for (Index i = 0; i < d; ++i) b(i, j) = rng.uniform_open_zero();
  Matrix w = solve_columns(b.transpose() * b, b.transpose() * f);
  double previous = (f - b * w).norm();

  std::vector<char> redrawn(static_cast<std::size_t>(rank), 0);
  for (int iter = 0; iter < opts.max_iter && previous > 0.0; ++iter) {
    Matrix b_next = solve_columns(w * w.transpose(), w * f.transpose()).transpose();
    for (Index k = 0; k < rank; ++k) {
      const auto s = static_cast<std::size_t>(k);
      if (b_next.col(k).squaredNorm() > 0.0 || redrawn[s]) continue;
      redrawn[s] = 1;
      for (Index i = 0; i < d; ++i) b_next(i, k) = rng.uniform_open_zero();
    }
    Matrix w_next = solve_columns(b_next.transpose() * b_next, b_next.transpose() * f);
    const double objective = (f - b_next * w_next).norm();
    if (objective > previous) break;  // rounding only; keep the better iterate

    b = std::move(b_next);
    w = std::move(w_next);
    result.objective_history.push_back(objective);
    const bool done = previous - objective <= opts.rel_tol * previous;
    previous = objective;
    if (done) break;
  }
  result.basis = std::move(b);
  result.coeffs = std::move(w);
  {
    std::lock_guard lock(g_observer_mutex);
    if (g_observer) g_observer(result);
  }
  return result;
}

}  // namespace cmcm::nnopt
