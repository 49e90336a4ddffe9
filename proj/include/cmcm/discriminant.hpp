#pragma once

#include <vector>

#include "cmcm/cone.hpp"
#include "cmcm/linalg.hpp"

namespace cmcm {

/// Per-level, per-class directions that are jointly most correlated.
struct AlignedDirections {
  std::vector<std::vector<Vector>> vectors;  // vectors[j][c], unit norm, ambient coordinates
  std::vector<Vector> anchors;               // consensus vector y_j of each level
  std::vector<bool> converged;
  bool truncated = false;  // stopped early because a deflated cone became empty

  std::size_t levels() const { return vectors.size(); }
};

/// Searches `levels` sets of aligned directions, one per cone per level.
/// Level j works on the cones deflated onto the complement of the earlier
/// anchors, so every returned vector stays in the ambient frame.
AlignedDirections align_cones(const std::vector<ConvexCone>& cones, int levels, const AlsOptions& opts = {});

struct GapIndex {
  int level;
  int first_class;
  int second_class;
};

struct GapSet {
  std::vector<Vector> gaps;  // p_j^{c1} - p_j^{c2}
  std::vector<GapIndex> index;
};

/// Differences of aligned directions for every level and class pair c1 < c2.
GapSet gap_vectors(const AlignedDirections& aligned);

struct Scatters {
  Matrix between;  // sum over gaps of d d^T
  Matrix within;   // sum over classes of centered outer products of basis vectors
};

Scatters scatters(const std::vector<ConvexCone>& cones, const GapSet& gaps);

struct DiscriminantSpace {
  Matrix basis;        // d x N_d, unit-norm columns
  Vector eigenvalues;  // descending
  double regularization_eps = 0.0;
};

/// Top pairs of S_b phi = gamma (S_w + eps I) phi with
/// eps = eps_rel * trace(S_w) / d, or eps_rel when S_w has zero trace.
DiscriminantSpace discriminant_space(const Matrix& between, const Matrix& within, int dims, double eps_rel);

/// Coordinates D^T b of every generator, renormalized; may return an empty cone.
ConvexCone project_cone_to_discriminant(const ConvexCone& cone, const DiscriminantSpace& space);

}  // namespace cmcm
