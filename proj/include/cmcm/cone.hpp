#pragma once

#include <cstdint>
#include <vector>

#include "cmcm/linalg.hpp"
#include "cmcm/nnopt.hpp"

namespace cmcm {

/// Set of non-negative combinations of finitely many unit basis vectors.
///
/// A cone with zero basis columns is the explicit "empty" marker produced
/// when a projection annihilates every generator; angles against it are 90
/// degrees.
class ConvexCone {
 public:
  ConvexCone() = default;

  /// Normalizes every column to unit length; columns with norm <=
  /// drop_tol * (largest column norm) are discarded.
  static ConvexCone from_basis(const Matrix& basis, double drop_tol = 1e-10);
  /// Keeps the columns bit for bit; each must already have unit norm
  /// (within 1e-12). Used when reloading stored cones.
  static ConvexCone from_unit_columns(Matrix basis);
  static ConvexCone empty_cone(Eigen::Index dim_ambient);

  const Matrix& basis() const { return basis_; }
  Eigen::Index dim_ambient() const { return basis_.rows(); }
  Eigen::Index n_basis() const { return basis_.cols(); }
  bool empty() const { return basis_.cols() == 0; }

  friend bool operator==(const ConvexCone& a, const ConvexCone& b) {
    return a.basis_.rows() == b.basis_.rows() && a.basis_.cols() == b.basis_.cols() &&
           a.basis_ == b.basis_;
  }

 private:
  explicit ConvexCone(Matrix basis) : basis_(std::move(basis)) {}
  Matrix basis_;
};

struct AngleSpectrum {
  std::vector<double> cosines;  // in [0, 1], non-increasing
  std::vector<Vector> p_vectors;
  std::vector<Vector> q_vectors;
  std::vector<bool> converged;

  std::size_t size() const { return cosines.size(); }
};

struct AlsOptions {
  double tol = 1e-6;      // on ||y_hat - y||_2
  int max_iter = 1000;
  int restarts = 5;
  std::uint64_t seed = 0;
  /// Directions closer than this to the already-found span are treated as
  /// lying in it when deflating. Must exceed the ALS fixed-point accuracy.
  double deflation_tol = 1e-4;
  /// Consecutive polar-cone draws tolerated before an angle is declared 90 deg.
  int max_redraws = 10;
};

/// Cone of the NMF basis of a non-negative feature matrix (columns are
/// feature vectors). Zero basis columns are dropped, so n_basis() <= rank.
ConvexCone cone_from_features(const Matrix& features, int rank, const nnopt::NmfOptions& opts = {});

struct ConeProjection {
  Vector projected;  // x_hat = B w
  Vector weights;
};

/// Nearest point of the cone to x, via NNLS.
ConeProjection project_to_cone(const ConvexCone& cone, const Vector& x);

/// Cosine of the angle between x and its cone projection; 0 when the
/// projection vanishes (x in the polar cone).
double vector_cone_angle(const ConvexCone& cone, const Vector& x);

enum class SubspaceMode {
  kCoordinates,  // b -> Q^T b, expressed in the subspace's own coordinates
  kComplement,   // b -> (I - Q Q^T) b, staying in the ambient space
};

/// Maps each generator through the subspace, drops generators of norm <=
/// drop_tol and renormalizes the rest. May return an empty cone.
ConvexCone project_cone_to_subspace(const ConvexCone& cone, const Matrix& q, SubspaceMode mode,
                                    double drop_tol = 1e-10);

/// First `count` angles between two cones by alternating least squares
/// with deflation onto the complement of all previously found p and q.
AngleSpectrum cone_angles(const ConvexCone& c1, const ConvexCone& c2, int count,
                          const AlsOptions& opts = {});

/// Mean of cos^2 over the first `count` angles of the spectrum.
double cone_similarity(const AngleSpectrum& spectrum, int count);
double cone_similarity(const std::vector<double>& cosines, int count);

namespace detail {

/// Projects the generators onto the complement of the orthonormal `span`
/// and removes directions whose singular value falls below tol relative to
/// the largest one. Opposing generators (b and -b) leave residuals that
/// nearly cancel; without the cleanup their rounding noise would become
/// spurious cone directions.
ConvexCone deflate_cone(const ConvexCone& cone, const Matrix& span, double tol);

/// Repeated projections onto one cone with the Gram matrix cached.
class ConeProjector {
 public:
  explicit ConeProjector(const ConvexCone& cone);
  Vector project(const Vector& y) const;
  const Matrix& basis() const { return *basis_; }

 private:
  const Matrix* basis_;
  Matrix gram_;
};

}  // namespace detail

}  // namespace cmcm
