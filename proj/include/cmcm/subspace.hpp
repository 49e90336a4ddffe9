#pragma once

#include <vector>

#include "cmcm/linalg.hpp"

namespace cmcm {

/// Linear subspace held as an orthonormal basis (columns).
struct Subspace {
  Matrix basis;

  Eigen::Index dim_ambient() const { return basis.rows(); }
  Eigen::Index dim() const { return basis.cols(); }
  friend bool operator==(const Subspace& a, const Subspace& b) {
    return a.basis.rows() == b.basis.rows() && a.basis.cols() == b.basis.cols() && a.basis == b.basis;
  }
};

/// Generalized difference subspace.
struct Gds {
  Matrix basis;          // d x g, orthonormal
  Vector eigenvalues;    // all d eigenvalues of the summed projector, ascending
};

/// Top-k left singular vectors of the (uncentered) feature matrix.
Subspace subspace_from_features(const Matrix& features, int k);

/// Numerical rank used by subspace_from_features.
int numerical_rank(const Matrix& m);

/// Cosines of the canonical angles, descending, length min(k1, k2).
std::vector<double> canonical_angles(const Subspace& s1, const Subspace& s2);

/// Mean of cos^2 over all min(k1, k2) canonical angles.
double subspace_similarity(const Subspace& s1, const Subspace& s2);

/// Trailing g eigenvectors of sum_c P_c. Warns when the boundary eigenvalue is tied.
Gds gds(const std::vector<Subspace>& subspaces, int g);

/// Expresses the subspace in the coordinates of the orthonormal basis q and
/// re-orthonormalizes. Throws NumericError when nothing survives.
Subspace project_subspace(const Subspace& s, const Matrix& q);

}  // namespace cmcm
