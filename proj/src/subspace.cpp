#include "cmcm/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cmcm/error.hpp"
#include "cmcm/log.hpp"

namespace cmcm {

using Index = Eigen::Index;

namespace {

int rank_from_singular_values(const Vector& s) {
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cutoff = linalg::kDefaultRankTol * s(0);
  int rank = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) ++rank;
  return rank;
}

}  // namespace

int numerical_rank(const Matrix& m) { return rank_from_singular_values(linalg::svd(m).s); }

Subspace subspace_from_features(const Matrix& features, int k) {
  linalg::require_valid(features, "subspace_from_features");
  const linalg::Svd dec = linalg::svd(features);
  const int rank = rank_from_singular_values(dec.s);
  if (k < 1 || k > rank) {
    std::ostringstream msg;
    msg << "subspace_from_features: dimension " << k << " exceeds the numerical rank " << rank;
    throw InvalidArgument(msg.str());
  }
  return {dec.u.leftCols(k)};
}

std::vector<double> canonical_angles(const Subspace& s1, const Subspace& s2) {
  if (s1.dim_ambient() != s2.dim_ambient()) throw DimensionMismatch("canonical_angles: ambient dimensions differ");
  const Subspace& small = s1.dim() <= s2.dim() ? s1 : s2;
  const Subspace& large = s1.dim() <= s2.dim() ? s2 : s1;
  const Vector sv = linalg::svd(small.basis.transpose() * large.basis).s;
  std::vector<double> out(static_cast<std::size_t>(small.dim()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(sv(static_cast<Index>(i)), 0.0, 1.0);
  return out;
}

double subspace_similarity(const Subspace& s1, const Subspace& s2) {
  const std::vector<double> c = canonical_angles(s1, s2);
  double sum = 0.0;
  for (double v : c) sum += v * v;
  return sum / static_cast<double>(c.size());
}

Gds gds(const std::vector<Subspace>& subspaces, int g) {
  if (subspaces.size() < 2) throw InvalidArgument("gds: need at least two subspaces");
  const Index d = subspaces.front().dim_ambient();
  for (const Subspace& s : subspaces)
    if (s.dim_ambient() != d) throw DimensionMismatch("gds: subspaces live in different ambient spaces");
  if (g < 1 || g > d) {
    std::ostringstream msg;
    msg << "gds: dimension " << g << " outside [1, " << d << "]";
    throw InvalidArgument(msg.str());
  }

  Matrix sum = Matrix::Zero(d, d);
  for (const Subspace& s : subspaces) sum.noalias() += s.basis * s.basis.transpose();
  const linalg::SymEig eig = linalg::sym_eig(sum);

  if (g < d) {
    const double scale = std::max(1.0, eig.values.cwiseAbs().maxCoeff());
    if (std::abs(eig.values(g) - eig.values(g - 1)) <= 1e-10 * scale) {
      std::ostringstream msg;
      msg << "gds: eigenvalue tie at the cut (index " << g << "), keeping the solver's order";
      warn(msg.str());
    }
  }
  return {eig.vectors.leftCols(g), eig.values};
}

Subspace project_subspace(const Subspace& s, const Matrix& q) {
  if (q.rows() != s.dim_ambient()) throw DimensionMismatch("project_subspace: dimension mismatch");
  Matrix basis = linalg::orthonormalize(q.transpose() * s.basis);
  if (basis.cols() == 0) throw NumericError("project_subspace: projection has rank 0");
  return {std::move(basis)};
}

}  // namespace cmcm
