#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cmcm/linalg.hpp"

namespace cmcm::nnopt {

inline constexpr double kNnlsTol = 1e-10;

struct NnlsSolution {
  Vector weights;        // all >= 0
  double residual_norm;  // ||x - B w||_2
};

/// min ||x - B w||_2 subject to w >= 0, Lawson-Hanson active set.
///
/// `tol` is relative to ||B^T x||_inf: a column enters the passive set only
/// when its dual exceeds tol * ||B^T x||_inf. Columns that are exactly zero
/// never enter and keep weight 0.
NnlsSolution nnls_solve(const Matrix& b, const Vector& x, double tol = kNnlsTol);

/// Normal-equation form of the same problem: min 0.5 w^T G w - c^T w, w >= 0
/// with G = B^T B and c = B^T x. Cheaper when one B is reused for many
/// right-hand sides; G must be symmetric positive semidefinite.
Vector nnls_gram(const Matrix& gram, const Vector& c, double tol = kNnlsTol);

struct NmfOptions {
  int max_iter = 200;
  double rel_tol = 1e-5;
  std::uint64_t seed = 0;
};

struct NmfResult {
  Matrix basis;   // d x r, non-negative
  Matrix coeffs;  // r x N, non-negative
  std::vector<double> objective_history;  // ||F - B W||_F after each outer iteration
};

/// F ~ B W by alternating non-negativity constrained least squares.
///
/// Starts from a seeded uniform (0, 1] basis. Each outer iteration solves
/// the B block, then the W block, each exactly by NNLS, and records the
/// residual. Stops when the relative decrease falls below rel_tol or after
/// max_iter iterations. A basis column that collapses to zero is redrawn
/// once from the seeded stream and stays at zero if it collapses again.
///
/// rank == N returns B = F, W = I; otherwise rank == d returns B = I, W = F.
/// Alternating updates from a random start can stall short of these exact
/// factorizations.
NmfResult nmf(const Matrix& f, int rank, const NmfOptions& opts = {});

/// Diagnostic hook called with every finished factorization, including the
/// ones made inside cone fitting. May be called from worker threads; calls
/// are serialized. Returns the previous observer.
using NmfObserver = std::function<void(const NmfResult&)>;
NmfObserver set_nmf_observer(NmfObserver observer);

}  // namespace cmcm::nnopt
