#include "cmcm/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "cmcm/csv.hpp"
#include "cmcm/error.hpp"
#include "cmcm/log.hpp"
#include "cmcm/parallel.hpp"
#include "cmcm/random.hpp"

namespace cmcm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Index = Eigen::Index;

std::string to_string(Method method) {
  switch (method) {
    case Method::kMsm: return "MSM";
    case Method::kCmsm: return "CMSM";
    case Method::kMcm: return "MCM";
    case Method::kCmcm: return "CMCM";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  std::string upper = name;
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "MSM") return Method::kMsm;
  if (upper == "CMSM") return Method::kCmsm;
  if (upper == "MCM") return Method::kMcm;
  if (upper == "CMCM") return Method::kCmcm;
  throw InvalidArgument("unknown method '" + name + "' (expected MSM, CMSM, MCM or CMCM)");
}

void validate(const ModelConfig& config) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("model config: ") + what);
  };
  require(config.ref_dim >= 1, "ref_dim must be >= 1");
  require(config.in_dim >= 1, "in_dim must be >= 1");
  require(config.n_angles >= 1, "n_angles must be >= 1");
  require(config.disc_dim >= 1, "disc_dim must be >= 1");
  require(config.n_gaps >= 1, "n_gaps must be >= 1");
  require(config.eps_rel > 0.0 && std::isfinite(config.eps_rel), "eps_rel must be positive");
}

Matrix canonical_columns(const Matrix& features) {
  std::vector<Index> order(static_cast<std::size_t>(features.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  const Index rows = features.rows();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    const double* pa = features.col(a).data();
    const double* pb = features.col(b).data();
    return std::lexicographical_compare(pa, pa + rows, pb, pb + rows);
  });
  Matrix out(rows, features.cols());
  for (std::size_t k = 0; k < order.size(); ++k) out.col(static_cast<Index>(k)) = features.col(order[k]);
  return out;
}

constexpr double kHashLevels = 1073741824.0;  // 2^30

std::uint64_t content_hash(const Matrix& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  feed(dims, sizeof(dims));
  const double peak = m.size() > 0 ? m.cwiseAbs().maxCoeff() : 0.0;
  const double scale = peak > 0.0 && std::isfinite(peak) ? kHashLevels / peak : 1.0;
  for (Index i = 0; i < m.size(); ++i) {
    const std::int64_t q = std::llround(m.data()[i] * scale);
    feed(&q, sizeof(q));
  }
  return h;
}

namespace {

AlsOptions als_for(std::uint64_t seed) {
  AlsOptions opts;
  opts.seed = seed;
  return opts;
}

ConvexCone fit_cone(const Matrix& canonical, int rank, std::uint64_t seed) {
  nnopt::NmfOptions opts;
  opts.seed = seed;
  const double peak = canonical.maxCoeff();
  if (!(peak > 0.0)) return cone_from_features(canonical, rank, opts);
  return cone_from_features(canonical / peak, rank, opts);
}

}  // namespace

TrainedModel train(const ModelConfig& config, const std::vector<TrainingSet>& sets) {
  validate(config);
  if (sets.empty()) throw InvalidArgument("train: no training sets");
  const Index d = sets.front().first.features.rows();

  TrainedModel model;
  model.config = config;
  model.feature_dim = d;
  std::unordered_map<std::string, std::size_t> index_of;
  std::vector<std::vector<const Matrix*>> members;
  for (const auto& [set, label] : sets) {
    if (set.features.rows() != d) {
      throw DataError(DataErrorKind::kDimensionMismatch, "train: set '" + set.set_id + "' has a different dimension");
    }
    if (set.features.cols() < 1) throw DataError(DataErrorKind::kParse, "train: set '" + set.set_id + "' is empty");
    auto [it, inserted] = index_of.emplace(label, model.class_labels.size());
    if (inserted) {
      model.class_labels.push_back(label);
      members.emplace_back();
    }
    members[it->second].push_back(&set.features);
  }

  const std::size_t n_classes = model.class_labels.size();
  std::vector<Matrix> pooled(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    Index cols = 0;
    for (const Matrix* m : members[c]) cols += m->cols();
    Matrix all(d, cols);
    Index at = 0;
    for (const Matrix* m : members[c]) {
      all.middleCols(at, m->cols()) = *m;
      at += m->cols();
    }
    pooled[c] = canonical_columns(all);
    linalg::require_finite(pooled[c], "train");
  }

  model.class_seeds.resize(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) model.class_seeds[c] = mix_seed({config.seed, content_hash(pooled[c])});

  if (is_cone_method(config.method)) {
    for (std::size_t c = 0; c < n_classes; ++c) {
      const Index limit = std::min(d, pooled[c].cols());
      if (config.ref_dim > limit) {
        std::ostringstream msg;
        msg << "train: ref_dim " << config.ref_dim << " exceeds min(d, N) = " << limit << " for class '"
            << model.class_labels[c] << "'";
        throw InvalidArgument(msg.str());
      }
    }
    std::vector<ConvexCone> cones(n_classes);
    parallel_for(n_classes, [&](std::size_t c) { cones[c] = fit_cone(pooled[c], config.ref_dim, model.class_seeds[c]); });

    if (config.method == Method::kCmcm) {
      if (config.disc_dim > d) {
        throw InvalidArgument("train: disc_dim " + std::to_string(config.disc_dim) + " exceeds feature dimension " +
                              std::to_string(d));
      }
      GapSet gaps;
      if (n_classes >= 2) {
        Index min_basis = cones.front().n_basis();
        for (const ConvexCone& c : cones) min_basis = std::min(min_basis, c.n_basis());
        int levels = config.n_gaps;
        if (levels > min_basis) {
          warn("train: n_gaps " + std::to_string(levels) + " reduced to the smallest class basis count " +
               std::to_string(min_basis));
          levels = static_cast<int>(min_basis);
        }
        const AlignedDirections aligned = align_cones(cones, levels, als_for(mix_seed({config.seed, 0x9a95})));
        if (aligned.truncated) warn("train: cone alignment stopped early at " + std::to_string(aligned.levels()) + " levels");
        gaps = gap_vectors(aligned);
      }
      const Scatters sc = scatters(cones, gaps);
      model.discriminant = discriminant_space(sc.between, sc.within, config.disc_dim, config.eps_rel);
      for (ConvexCone& cone : cones) {
        cone = project_cone_to_discriminant(cone, *model.discriminant);
        if (cone.empty()) warn("train: a class cone vanished in the discriminant space");
      }
      model.gaps = std::move(gaps);
    }
    model.cones = std::move(cones);
  } else {
    std::vector<Subspace> subspaces(n_classes);
    parallel_for(n_classes, [&](std::size_t c) { subspaces[c] = subspace_from_features(pooled[c], config.ref_dim); });
    if (config.method == Method::kCmsm) {
      if (config.disc_dim > d) {
        throw InvalidArgument("train: disc_dim " + std::to_string(config.disc_dim) + " exceeds feature dimension " +
                              std::to_string(d));
      }
      if (n_classes >= 2) {
        model.gds = gds(subspaces, config.disc_dim);
      } else {
        warn("train: CMSM with a single class; using the whole space as the difference subspace");
        model.gds = Gds{Matrix::Identity(d, d), Vector::Ones(d)};
      }
      for (Subspace& s : subspaces) s = project_subspace(s, model.gds->basis);
    }
    model.subspaces = std::move(subspaces);
  }
  return model;
}

TrainedModel train(const ModelConfig& config, const Dataset& ds) {
  std::vector<TrainingSet> sets;
  for (const LabeledSet& s : ds.sets)
    if (s.split == Split::kTrain) sets.emplace_back(s.set, s.label);
  return train(config, sets);
}

QueryScores score_query(const TrainedModel& model, const FeatureSet& query) {
  const ModelConfig& config = model.config;
  if (query.features.rows() != model.feature_dim) {
    std::ostringstream msg;
    msg << "query '" << query.set_id << "' has dimension " << query.features.rows() << ", model expects "
        << model.feature_dim;
    throw DataError(DataErrorKind::kDimensionMismatch, msg.str());
  }
  if (query.features.cols() < 1) throw DataError(DataErrorKind::kParse, "query '" + query.set_id + "' is empty");
  const Matrix canonical = canonical_columns(query.features);
  linalg::require_finite(canonical, "query");
  const std::uint64_t hash = content_hash(canonical);
  const std::uint64_t nmf_seed = mix_seed({config.seed, hash});

  const std::size_t n_classes = model.n_classes();
  QueryScores out;
  out.cosines.resize(n_classes);

  if (is_cone_method(config.method)) {
    const int rank = static_cast<int>(std::min<Index>({config.in_dim, canonical.rows(), canonical.cols()}));
    ConvexCone cone = fit_cone(canonical, rank, nmf_seed);
    if (model.discriminant) cone = project_cone_to_discriminant(cone, *model.discriminant);
    if (cone.empty()) {
      warn("query '" + query.set_id + "' vanished in the discriminant space; all similarities are 0");
      out.degenerate = true;
      return out;
    }
    parallel_for(n_classes, [&](std::size_t c) {
      const ConvexCone& ref = model.cones[c];
      if (ref.empty()) return;
      const int count = static_cast<int>(std::min(cone.n_basis(), ref.n_basis()));
      out.cosines[c] = cone_angles(cone, ref, count, als_for(mix_seed({config.seed, hash, c})) ).cosines;
    });
  } else {
    const int rank = numerical_rank(canonical);
    if (rank == 0) throw DataError(DataErrorKind::kParse, "query '" + query.set_id + "' has rank 0");
    Subspace s = subspace_from_features(canonical, std::min(config.in_dim, rank));
    if (model.gds) s = project_subspace(s, model.gds->basis);
    for (std::size_t c = 0; c < n_classes; ++c) out.cosines[c] = canonical_angles(s, model.subspaces[c]);
  }
  return out;
}

Prediction predict_from_scores(const TrainedModel& model, const QueryScores& scores, int n_angles) {
  if (n_angles < 1) throw InvalidArgument("predict: n_angles must be >= 1");
  Prediction p;
  p.scores.resize(scores.cosines.size());
  for (std::size_t c = 0; c < scores.cosines.size(); ++c) {
    const auto& cos = scores.cosines[c];
    if (cos.empty()) continue;
    p.scores[c] = cone_similarity(cos, std::min(n_angles, static_cast<int>(cos.size())));
  }
  for (std::size_t c = 1; c < p.scores.size(); ++c)
    if (p.scores[c] > p.scores[p.label_index]) p.label_index = c;
  p.label = model.class_labels.at(p.label_index);
  return p;
}

Prediction predict(const TrainedModel& model, const FeatureSet& query) {
  return predict_from_scores(model, score_query(model, query), model.config.n_angles);
}

namespace {

bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

bool same_vector(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }

}  // namespace

bool operator==(const TrainedModel& a, const TrainedModel& b) {
  if (!(a.config == b.config) || a.feature_dim != b.feature_dim || a.class_labels != b.class_labels ||
      a.cones != b.cones || a.subspaces != b.subspaces || a.class_seeds != b.class_seeds) {
    return false;
  }
  if (a.discriminant.has_value() != b.discriminant.has_value()) return false;
  if (a.discriminant &&
      (!same_matrix(a.discriminant->basis, b.discriminant->basis) ||
       !same_vector(a.discriminant->eigenvalues, b.discriminant->eigenvalues) ||
       a.discriminant->regularization_eps != b.discriminant->regularization_eps)) {
    return false;
  }
  if (a.gds.has_value() != b.gds.has_value()) return false;
  if (a.gds && (!same_matrix(a.gds->basis, b.gds->basis) || !same_vector(a.gds->eigenvalues, b.gds->eigenvalues))) {
    return false;
  }
  if (a.gaps.has_value() != b.gaps.has_value()) return false;
  if (a.gaps) {
    if (a.gaps->gaps.size() != b.gaps->gaps.size()) return false;
    for (std::size_t i = 0; i < a.gaps->gaps.size(); ++i) {
      const GapIndex& x = a.gaps->index[i];
      const GapIndex& y = b.gaps->index[i];
      if (!same_vector(a.gaps->gaps[i], b.gaps->gaps[i]) || x.level != y.level || x.first_class != y.first_class ||
          x.second_class != y.second_class) {
        return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// persistence

namespace {

constexpr const char* kSchemaTag = "cmcm-model";

json matrix_ref(const std::string& file, const Matrix& m) {
  return {{"file", file}, {"rows", m.rows()}, {"cols", m.cols()}};
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

Matrix read_matrix(const fs::path& dir, const json& ref) {
  const std::string file = ref.at("file").get<std::string>();
  const Index rows = ref.at("rows").get<Index>();
  const Index cols = ref.at("cols").get<Index>();
  Matrix m = csv::read_columns(dir / file, rows);
  if (m.cols() != cols) {
    std::ostringstream msg;
    msg << (dir / file).string() << ": expected " << cols << " vectors, found " << m.cols();
    throw DataError(DataErrorKind::kParse, msg.str());
  }
  return m;
}

json config_to_json(const ModelConfig& c) {
  return {{"method", to_string(c.method)}, {"ref_dim", c.ref_dim},   {"in_dim", c.in_dim},
          {"n_angles", c.n_angles},        {"disc_dim", c.disc_dim}, {"n_gaps", c.n_gaps},
          {"eps_rel", c.eps_rel},          {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.method = parse_method(j.at("method").get<std::string>());
  c.ref_dim = j.at("ref_dim").get<int>();
  c.in_dim = j.at("in_dim").get<int>();
  c.n_angles = j.at("n_angles").get<int>();
  c.disc_dim = j.at("disc_dim").get<int>();
  c.n_gaps = j.at("n_gaps").get<int>();
  c.eps_rel = j.at("eps_rel").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::string class_file(std::size_t c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "class_%03zu.csv", c);
  return buf;
}

}  // namespace

void save_model(const TrainedModel& model, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(DataErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());

  json doc;
  doc["schema"] = kSchemaTag;
  doc["version"] = kModelSchemaVersion;
  doc["config"] = config_to_json(model.config);
  doc["feature_dim"] = model.feature_dim;

  json classes = json::array();
  for (std::size_t c = 0; c < model.n_classes(); ++c) {
    const Matrix& basis = is_cone_method(model.config.method) ? model.cones[c].basis() : model.subspaces[c].basis;
    const std::string file = class_file(c);
    csv::write_columns(dir / file, basis);
    json entry = matrix_ref(file, basis);
    entry["label"] = model.class_labels[c];
    entry["kind"] = is_cone_method(model.config.method) ? "cone" : "subspace";
    entry["seed"] = model.class_seeds.at(c);
    classes.push_back(std::move(entry));
  }
  doc["classes"] = std::move(classes);

  if (model.discriminant) {
    csv::write_columns(dir / "embedding.csv", model.discriminant->basis);
    json e = matrix_ref("embedding.csv", model.discriminant->basis);
    e["kind"] = "discriminant";
    e["eigenvalues"] = to_std(model.discriminant->eigenvalues);
    e["regularization_eps"] = model.discriminant->regularization_eps;
    doc["embedding"] = std::move(e);
  } else if (model.gds) {
    csv::write_columns(dir / "embedding.csv", model.gds->basis);
    json e = matrix_ref("embedding.csv", model.gds->basis);
    e["kind"] = "gds";
    e["eigenvalues"] = to_std(model.gds->eigenvalues);
    doc["embedding"] = std::move(e);
  } else {
    doc["embedding"] = nullptr;
  }

  if (model.gaps) {
    Matrix g(model.feature_dim, static_cast<Index>(model.gaps->gaps.size()));
    json index = json::array();
    for (std::size_t i = 0; i < model.gaps->gaps.size(); ++i) {
      g.col(static_cast<Index>(i)) = model.gaps->gaps[i];
      const GapIndex& gi = model.gaps->index[i];
      index.push_back({gi.level, gi.first_class, gi.second_class});
    }
    csv::write_columns(dir / "gaps.csv", g);
    json e = matrix_ref("gaps.csv", g);
    e["index"] = std::move(index);
    doc["gaps"] = std::move(e);
  } else {
    doc["gaps"] = nullptr;
  }

  std::ofstream out(dir / "model.json", std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrorKind::kIo, "cannot write " + (dir / "model.json").string());
  out << doc.dump(2) << '\n';
}

TrainedModel load_model(const fs::path& dir) {
  const fs::path path = dir / "model.json";
  std::ifstream in(path);
  if (!in) throw DataError(DataErrorKind::kMissingFile, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(DataErrorKind::kParse, path.string() + ": " + e.what());
  }

  TrainedModel model;
  try {
    if (!doc.is_object() || doc.value("schema", std::string{}) != kSchemaTag) {
      throw DataError(DataErrorKind::kSchema, path.string() + ": not a cmcm model (schema tag missing or unknown)");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelSchemaVersion) {
      throw DataError(DataErrorKind::kSchema, path.string() + ": unsupported model version " + std::to_string(version));
    }
    model.config = config_from_json(doc.at("config"));
    model.feature_dim = doc.at("feature_dim").get<Index>();
    const bool cone = is_cone_method(model.config.method);
    for (const json& entry : doc.at("classes")) {
      model.class_labels.push_back(entry.at("label").get<std::string>());
      model.class_seeds.push_back(entry.at("seed").get<std::uint64_t>());
      Matrix basis = read_matrix(dir, entry);
      if (cone) {
        model.cones.push_back(basis.cols() == 0 ? ConvexCone::empty_cone(basis.rows())
                                                : ConvexCone::from_unit_columns(std::move(basis)));
      } else {
        model.subspaces.push_back({std::move(basis)});
      }
    }
    const json& emb = doc.at("embedding");
    if (!emb.is_null()) {
      const std::string kind = emb.at("kind").get<std::string>();
      Matrix basis = read_matrix(dir, emb);
      Vector values = from_std(emb.at("eigenvalues").get<std::vector<double>>());
      if (kind == "discriminant") {
        model.discriminant = DiscriminantSpace{std::move(basis), std::move(values),
                                               emb.at("regularization_eps").get<double>()};
      } else if (kind == "gds") {
        model.gds = Gds{std::move(basis), std::move(values)};
      } else {
        throw DataError(DataErrorKind::kSchema, path.string() + ": unknown embedding kind '" + kind + "'");
      }
    }
    const json& gaps = doc.at("gaps");
    if (!gaps.is_null()) {
      const Matrix g = read_matrix(dir, gaps);
      GapSet set;
      for (Index i = 0; i < g.cols(); ++i) set.gaps.push_back(g.col(i));
      for (const json& idx : gaps.at("index")) set.index.push_back({idx.at(0).get<int>(), idx.at(1).get<int>(), idx.at(2).get<int>()});
      if (set.index.size() != set.gaps.size()) throw DataError(DataErrorKind::kSchema, path.string() + ": gap index size mismatch");
      model.gaps = std::move(set);
    }
  } catch (const json::exception& e) {
    throw DataError(DataErrorKind::kSchema, path.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(DataErrorKind::kSchema, path.string() + ": " + e.what());
  }
  return model;
}

}  // namespace cmcm
