#include "cmcm/cone.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cmcm/error.hpp"
#include "cmcm/random.hpp"

namespace cmcm {

using Index = Eigen::Index;

ConvexCone ConvexCone::from_basis(const Matrix& basis, double drop_tol) {
  linalg::require_finite(basis, "ConvexCone");
  if (basis.rows() < 1) throw InvalidArgument("ConvexCone: ambient dimension must be >= 1");
  double max_norm = 0.0;
  for (Index j = 0; j < basis.cols(); ++j) max_norm = std::max(max_norm, basis.col(j).norm());

  Matrix kept(basis.rows(), basis.cols());
  Index k = 0;
  for (Index j = 0; j < basis.cols(); ++j) {
    const double norm = basis.col(j).norm();
    if (norm == 0.0 || norm <= drop_tol * max_norm) continue;
    kept.col(k++) = basis.col(j) / norm;
  }
  return ConvexCone(kept.leftCols(k));
}

ConvexCone ConvexCone::from_unit_columns(Matrix basis) {
  linalg::require_finite(basis, "ConvexCone");
  if (basis.rows() < 1) throw InvalidArgument("ConvexCone: ambient dimension must be >= 1");
  for (Index j = 0; j < basis.cols(); ++j) {
    if (std::abs(basis.col(j).norm() - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg << "ConvexCone: column " << j << " is not a unit vector";
      throw InvalidArgument(msg.str());
    }
  }
  return ConvexCone(std::move(basis));
}

ConvexCone ConvexCone::empty_cone(Index dim_ambient) { return ConvexCone(Matrix(dim_ambient, 0)); }

ConvexCone cone_from_features(const Matrix& features, int rank, const nnopt::NmfOptions& opts) {
  linalg::require_valid(features, "cone_from_features");
  if ((features.array() < 0.0).any()) {
    Index row = 0;
    Index col = 0;
    features.minCoeff(&row, &col);
    std::ostringstream msg;
    msg << "cone_from_features: negative feature value " << features(row, col) << " at row " << row
        << ", column " << col;
    throw DataError(DataErrorKind::kNegativeValue, msg.str());
  }
  if (features.isZero(0.0)) throw DataError(DataErrorKind::kParse, "cone_from_features: feature matrix is all zero");
  nnopt::NmfResult fit = nnopt::nmf(features, rank, opts);
  return ConvexCone::from_basis(fit.basis, 0.0);
}

ConeProjection project_to_cone(const ConvexCone& cone, const Vector& x) {
  if (x.size() != cone.dim_ambient()) throw DimensionMismatch("project_to_cone: dimension mismatch");
  if (cone.empty()) return {Vector::Zero(x.size()), Vector(0)};
  nnopt::NnlsSolution sol = nnopt::nnls_solve(cone.basis(), x);
  Vector projected = cone.basis() * sol.weights;
  return {std::move(projected), std::move(sol.weights)};
}

double vector_cone_angle(const ConvexCone& cone, const Vector& x) {
  const double xnorm = x.norm();
  if (xnorm == 0.0) throw InvalidArgument("vector_cone_angle: x must be non-zero");
  const Vector xhat = project_to_cone(cone, x).projected;
  const double pnorm = xhat.norm();
  if (pnorm <= 1e-12 * xnorm) return 0.0;
  return std::clamp(x.dot(xhat) / (xnorm * pnorm), 0.0, 1.0);
}

ConvexCone project_cone_to_subspace(const ConvexCone& cone, const Matrix& q, SubspaceMode mode,
                                    double drop_tol) {
  if (q.rows() != cone.dim_ambient()) throw DimensionMismatch("project_cone_to_subspace: dimension mismatch");
  Matrix mapped;
  if (mode == SubspaceMode::kCoordinates) {
    mapped = q.transpose() * cone.basis();
  } else {
    mapped = cone.basis() - q * (q.transpose() * cone.basis());
  }
  const Index out_dim = mapped.rows();
  if (out_dim == 0) throw InvalidArgument("project_cone_to_subspace: subspace has no columns");

  Matrix kept(out_dim, mapped.cols());
  Index k = 0;
  for (Index j = 0; j < mapped.cols(); ++j) {
    const double norm = mapped.col(j).norm();
    if (norm <= drop_tol) continue;
    kept.col(k++) = mapped.col(j) / norm;
  }
  if (k == 0) return ConvexCone::empty_cone(out_dim);
  return ConvexCone::from_basis(kept.leftCols(k), 0.0);
}

namespace detail {

ConvexCone deflate_cone(const ConvexCone& cone, const Matrix& span, double tol) {
  if (cone.empty()) return cone;
  Matrix residual = cone.basis() - span * (span.transpose() * cone.basis());
  const linalg::Svd dec = linalg::svd(residual);
  if (dec.s(0) <= tol) return ConvexCone::empty_cone(cone.dim_ambient());
  Index keep = 0;
  while (keep < dec.s.size() && dec.s(keep) > tol * dec.s(0)) ++keep;
  residual = dec.u.leftCols(keep) * dec.s.head(keep).asDiagonal() * dec.v.leftCols(keep).transpose();
  return ConvexCone::from_basis(residual, tol);
}

ConeProjector::ConeProjector(const ConvexCone& cone)
    : basis_(&cone.basis()), gram_(cone.basis().transpose() * cone.basis()) {}

Vector ConeProjector::project(const Vector& y) const {
  if (basis_->cols() == 0) return Vector::Zero(y.size());
  return *basis_ * nnopt::nnls_gram(gram_, basis_->transpose() * y);
}

}  // namespace detail

namespace {

struct PairSearch {
  Vector p;
  Vector q;
  double cosine = 0.0;
  bool converged = false;
  bool found = false;
};

bool negligible(const Vector& v, double scale) { return v.norm() <= 1e-12 * scale; }

// One seeded run of the nearest-pair fixed point: project y onto both
// cones, normalize, average, repeat until y stops moving.
PairSearch search_pair(const detail::ConeProjector& first, const detail::ConeProjector& second, Index dim,
                       Rng& rng, const AlsOptions& opts) {
  PairSearch out;
  // Random start, pulled through the second cone first so the initial pair
  // is never obtuse; obtuse pairs can be fixed points of the iteration.
  auto draw = [&] {
    Vector z = rng.normal_vector(dim);
    Vector zq = second.project(z);
    return negligible(zq, z.norm()) ? z : Vector(zq / zq.norm());
  };
  Vector y = draw();
  int redraws = 0;
  for (int iter = 0; iter < opts.max_iter;) {
    const double scale = y.norm();
    Vector pp = first.project(y);
    Vector qq = second.project(y);
    if (negligible(pp, scale) || negligible(qq, scale)) {
      if (++redraws >= opts.max_redraws) return out;
      y = draw();
      continue;
    }
    redraws = 0;
    out.p = pp / pp.norm();
    out.q = qq / qq.norm();
    out.found = true;
    Vector next = 0.5 * (out.p + out.q);
    const double step = (next - y).norm();
    y = std::move(next);
    ++iter;
    if (step < opts.tol) {
      out.converged = true;
      break;
    }
  }
  if (out.found) out.cosine = out.p.dot(out.q);
  return out;
}

void validate_als(const AlsOptions& opts) {
  if (!(opts.tol > 0.0) || opts.max_iter < 1 || opts.restarts < 1 || opts.max_redraws < 1 ||
      !(opts.deflation_tol > 0.0)) {
    throw InvalidArgument("cone_angles: invalid ALS options");
  }
}

}  // namespace

AngleSpectrum cone_angles(const ConvexCone& c1, const ConvexCone& c2, int count, const AlsOptions& opts) {
  validate_als(opts);
  if (c1.dim_ambient() != c2.dim_ambient()) throw DimensionMismatch("cone_angles: ambient dimensions differ");
  const Index limit = std::min(c1.n_basis(), c2.n_basis());
  if (count < 1 || count > limit) {
    std::ostringstream msg;
    msg << "cone_angles: angle count " << count << " outside [1, " << limit << "]";
    throw InvalidArgument(msg.str());
  }

  const Index dim = c1.dim_ambient();
  struct Entry {
    double cosine;
    Vector p, q;
    bool converged;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(count));
  Matrix found(dim, 0);

  bool exhausted = false;
  for (int i = 0; i < count; ++i) {
    if (!exhausted) {
      ConvexCone a = c1;
      ConvexCone b = c2;
      if (i > 0) {
        const Matrix span = linalg::orthonormalize(found, opts.deflation_tol);
        a = detail::deflate_cone(c1, span, opts.deflation_tol);
        b = detail::deflate_cone(c2, span, opts.deflation_tol);
      }
      if (a.empty() || b.empty()) {
        exhausted = true;
      } else {
        const detail::ConeProjector pa(a);
        const detail::ConeProjector pb(b);
        PairSearch best;
        for (int r = 0; r < opts.restarts; ++r) {
          Rng rng(mix_seed({opts.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(r)}));
          PairSearch run = search_pair(pa, pb, dim, rng, opts);
          if (run.found && (!best.found || run.cosine > best.cosine)) best = std::move(run);
        }
        if (!best.found) {
          exhausted = true;
        } else {
          found.conservativeResize(Eigen::NoChange, found.cols() + 2);
          found.col(found.cols() - 2) = best.p;
          found.col(found.cols() - 1) = best.q;
          entries.push_back({std::clamp(best.cosine, 0.0, 1.0), std::move(best.p), std::move(best.q),
                             best.converged});
          continue;
        }
      }
    }
    entries.push_back({0.0, Vector::Zero(dim), Vector::Zero(dim), true});
  }

  // Deflated cones can be closer than the originals, so order explicitly.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& x, const Entry& y) { return x.cosine > y.cosine; });

  AngleSpectrum spectrum;
  for (Entry& e : entries) {
    spectrum.cosines.push_back(e.cosine);
    spectrum.p_vectors.push_back(std::move(e.p));
    spectrum.q_vectors.push_back(std::move(e.q));
    spectrum.converged.push_back(e.converged);
  }
  return spectrum;
}

double cone_similarity(const std::vector<double>& cosines, int count) {
  if (count < 1) throw InvalidArgument("similarity: angle count must be >= 1");
  if (static_cast<std::size_t>(count) > cosines.size()) {
    throw InvalidArgument("similarity: angle count exceeds the spectrum length");
  }
  double sum = 0.0;
  for (int i = 0; i < count; ++i) sum += cosines[static_cast<std::size_t>(i)] * cosines[static_cast<std::size_t>(i)];
  return sum / count;
}

double cone_similarity(const AngleSpectrum& spectrum, int count) {
  return cone_similarity(spectrum.cosines, count);
}

}  // namespace cmcm
