#include "cmcm/discriminant.hpp"

#include <algorithm>
#include <sstream>

#include "cmcm/error.hpp"
#include "cmcm/random.hpp"

namespace cmcm {

using Index = Eigen::Index;

namespace {

struct LevelSearch {
  std::vector<Vector> p;
  Vector anchor;
  double score = 0.0;
  bool converged = false;
  bool found = false;
};

LevelSearch search_level(const std::vector<detail::ConeProjector>& projectors, Index dim, Rng& rng,
                         const AlsOptions& opts) {
  LevelSearch out;
  const std::size_t n = projectors.size();
  // Random start inside the sum of the cones: a normalized positive
  // combination of each cone's generators, added up.
  auto draw = [&] {
    Vector y = Vector::Zero(dim);
    for (const detail::ConeProjector& proj : projectors) {
      const Matrix& b = proj.basis();
      Vector w(b.cols());
      for (Index k = 0; k < w.size(); ++k) w[k] = rng.uniform_open_zero();
      const Vector v = b * w;
      const double norm = v.norm();
      if (norm > 0.0) y += v / norm;
    }
    return y.norm() > 0.0 ? Vector(y.normalized()) : rng.normal_vector(dim);
  };
  Vector y = draw();
  std::vector<Vector> p(n);
  int redraws = 0;
  for (int iter = 0; iter < opts.max_iter;) {
    const double scale = y.norm();
    bool degenerate = false;
    for (std::size_t c = 0; c < n && !degenerate; ++c) {
      p[c] = projectors[c].project(y);
      const double norm = p[c].norm();
      if (norm <= 1e-12 * scale) {
        degenerate = true;
      } else {
        p[c] /= norm;
      }
    }
    if (degenerate) {
      if (++redraws >= opts.max_redraws) return out;
      y = draw();
      continue;
    }
    redraws = 0;
    Vector next = Vector::Zero(dim);
    for (const Vector& v : p) next += v;
    next /= static_cast<double>(n);
    out.p = p;
    out.found = true;
    const double step = (next - y).norm();
    y = std::move(next);
    ++iter;
    if (step < opts.tol) {
      out.converged = true;
      break;
    }
  }
  if (out.found) {
    out.anchor = y;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != b) out.score += out.p[a].dot(out.p[b]);
  }
  return out;
}

}  // namespace

AlignedDirections align_cones(const std::vector<ConvexCone>& cones, int levels, const AlsOptions& opts) {
  if (cones.size() < 2) throw InvalidArgument("align_cones: need at least two cones");
  const Index dim = cones.front().dim_ambient();
  Index min_basis = cones.front().n_basis();
  for (const ConvexCone& c : cones) {
    if (c.dim_ambient() != dim) throw DimensionMismatch("align_cones: cones live in different ambient spaces");
    min_basis = std::min(min_basis, c.n_basis());
  }
  if (levels < 1 || levels > min_basis) {
    std::ostringstream msg;
    msg << "align_cones: level count " << levels << " outside [1, " << min_basis << "]";
    throw InvalidArgument(msg.str());
  }
  if (!(opts.tol > 0.0) || opts.max_iter < 1 || opts.restarts < 1 || opts.max_redraws < 1) {
    throw InvalidArgument("align_cones: invalid options");
  }

  AlignedDirections out;
  Matrix anchors(dim, 0);
  for (int j = 0; j < levels; ++j) {
    std::vector<ConvexCone> level_cones = cones;
    if (j > 0) {
      const Matrix span = linalg::orthonormalize(anchors, opts.deflation_tol);
      for (std::size_t c = 0; c < cones.size(); ++c) {
        level_cones[c] = detail::deflate_cone(cones[c], span, opts.deflation_tol);
      }
    }
    if (std::any_of(level_cones.begin(), level_cones.end(), [](const ConvexCone& c) { return c.empty(); })) {
      out.truncated = true;
      break;
    }

    std::vector<detail::ConeProjector> projectors;
    projectors.reserve(level_cones.size());
    for (const ConvexCone& c : level_cones) projectors.emplace_back(c);

    LevelSearch best;
    for (int r = 0; r < opts.restarts; ++r) {
      Rng rng(mix_seed({opts.seed, 0xa11, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(r)}));
      LevelSearch run = search_level(projectors, dim, rng, opts);
      if (run.found && (!best.found || run.score > best.score)) best = std::move(run);
    }
    if (!best.found) {
      out.truncated = true;
      break;
    }
    anchors.conservativeResize(Eigen::NoChange, anchors.cols() + 1);
    anchors.col(anchors.cols() - 1) = best.anchor;
    out.vectors.push_back(std::move(best.p));
    out.anchors.push_back(std::move(best.anchor));
    out.converged.push_back(best.converged);
  }
  return out;
}

GapSet gap_vectors(const AlignedDirections& aligned) {
  GapSet out;
  for (std::size_t j = 0; j < aligned.levels(); ++j) {
    const auto& level = aligned.vectors[j];
    for (std::size_t a = 0; a < level.size(); ++a) {
      for (std::size_t b = a + 1; b < level.size(); ++b) {
        out.gaps.push_back(level[a] - level[b]);
        out.index.push_back({static_cast<int>(j), static_cast<int>(a), static_cast<int>(b)});
      }
    }
  }
  return out;
}

Scatters scatters(const std::vector<ConvexCone>& cones, const GapSet& gaps) {
  if (cones.empty()) throw InvalidArgument("scatters: no cones");
  const Index dim = cones.front().dim_ambient();
  Scatters s{Matrix::Zero(dim, dim), Matrix::Zero(dim, dim)};
  for (const Vector& g : gaps.gaps) {
    if (g.size() != dim) throw DimensionMismatch("scatters: gap vector dimension mismatch");
    s.between.noalias() += g * g.transpose();
  }
  for (const ConvexCone& c : cones) {
    if (c.dim_ambient() != dim) throw DimensionMismatch("scatters: cone dimension mismatch");
    if (c.empty()) continue;
    const Vector mean = c.basis().rowwise().mean();
    const Matrix centered = c.basis().colwise() - mean;
    s.within.noalias() += centered * centered.transpose();
  }
  s.between = 0.5 * (s.between + s.between.transpose());
  s.within = 0.5 * (s.within + s.within.transpose());
  return s;
}

DiscriminantSpace discriminant_space(const Matrix& between, const Matrix& within, int dims, double eps_rel) {
  if (between.rows() != between.cols() || within.rows() != within.cols() || between.rows() != within.rows()) {
    throw DimensionMismatch("discriminant_space: scatter matrices must be square and of equal size");
  }
  const Index d = between.rows();
  if (dims < 1 || dims > d) {
    std::ostringstream msg;
    msg << "discriminant_space: dimension " << dims << " outside [1, " << d << "]";
    throw InvalidArgument(msg.str());
  }
  if (!(eps_rel > 0.0)) throw InvalidArgument("discriminant_space: eps_rel must be positive");

  const double trace = within.trace();
  const double eps = trace > 0.0 ? eps_rel * trace / static_cast<double>(d) : eps_rel;
  const Matrix regularized = within + eps * Matrix::Identity(d, d);
  const std::vector<linalg::EigPair> pairs = linalg::sym_generalized_eig(between, regularized);

  DiscriminantSpace out;
  out.basis.resize(d, dims);
  out.eigenvalues.resize(dims);
  out.regularization_eps = eps;
  for (int i = 0; i < dims; ++i) {
    const auto& pair = pairs[static_cast<std::size_t>(i)];
    out.basis.col(i) = pair.vector;
    // S_b is PSD, so negative values are rounding
    out.eigenvalues(i) = std::max(0.0, pair.value);
  }
  return out;
}

ConvexCone project_cone_to_discriminant(const ConvexCone& cone, const DiscriminantSpace& space) {
  return project_cone_to_subspace(cone, space.basis, SubspaceMode::kCoordinates);
}

}  // namespace cmcm
