#include "cmcm/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "cmcm/csv.hpp"
#include "cmcm/error.hpp"
#include "cmcm/image.hpp"
#include "cmcm/log.hpp"
#include "cmcm/parallel.hpp"
#include "cmcm/random.hpp"

namespace cmcm::cli {

int exit_code_for(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const DimensionMismatch&) {
    return kExitData;
  } catch (const InvalidArgument&) {
    return kExitUsage;
  } catch (const DataError&) {
    return kExitData;
  } catch (const NumericError&) {
    return kExitNumeric;
  } catch (const std::filesystem::filesystem_error&) {
    return kExitData;
  } catch (...) {
    return kExitNumeric;
  }
}

Json cmd_gen(const SynthSpec& spec, const fs::path& out_dir) {
  const Dataset ds = generate_synthetic(spec);
  save_dataset(ds, out_dir);
  std::size_t n_train = 0;
  for (const LabeledSet& s : ds.sets) n_train += s.split == Split::kTrain;
  return {{"manifest", (out_dir / "manifest.json").generic_string()},
          {"feature_dim", ds.feature_dim},
          {"n_sets", ds.sets.size()},
          {"n_train", n_train},
          {"n_test", ds.sets.size() - n_train}};
}

Json cmd_train(const fs::path& manifest, const ModelConfig& config, const fs::path& model_dir) {
  validate(config);
  const Dataset ds = load_dataset(manifest);
  const TrainedModel model = train(config, ds);
  save_model(model, model_dir);

  Json classes = Json::array();
  for (std::size_t c = 0; c < model.n_classes(); ++c) {
    const Eigen::Index n = is_cone_method(config.method) ? model.cones[c].n_basis() : model.subspaces[c].dim();
    classes.push_back({{"label", model.class_labels[c]}, {"n_basis", n}});
  }
  Json out = {{"model", model_dir.generic_string()}, {"method", to_string(config.method)}, {"classes", classes}};
  if (model.discriminant) {
    const Vector& g = model.discriminant->eigenvalues;
    std::vector<double> top(g.data(), g.data() + std::min<Eigen::Index>(10, g.size()));
    out["gamma_top"] = top;
    out["n_gap_vectors"] = model.gaps ? model.gaps->gaps.size() : 0;
  }
  return out;
}

namespace {

FeatureSet read_set(const fs::path& path, Eigen::Index dim) {
  return {csv::read_columns(path, dim), path.stem().string()};
}

std::vector<FeatureSet> test_sets(const Dataset& ds) {
  std::vector<FeatureSet> out;
  for (const LabeledSet& s : ds.sets)
    if (s.split == Split::kTest) out.push_back(s.set);
  return out;
}

void require_dim(const Dataset& ds, const TrainedModel& model) {
  if (ds.feature_dim != model.feature_dim) {
    throw DataError(DataErrorKind::kDimensionMismatch,
                    "dataset feature_dim " + std::to_string(ds.feature_dim) + " differs from the model's " +
                        std::to_string(model.feature_dim));
  }
}

Json scores_json(const TrainedModel& model, const Prediction& p) {
  Json scores = Json::object();
  for (std::size_t c = 0; c < model.n_classes(); ++c) scores[model.class_labels[c]] = p.scores[c];
  return scores;
}

}  // namespace

Json cmd_predict(const PredictOptions& options) {
  const TrainedModel model = load_model(options.model_dir);
  const int n_angles = options.n_angles.value_or(model.config.n_angles);
  if (n_angles < 1) throw InvalidArgument("n_angles must be >= 1");
  std::vector<FeatureSet> queries;
  if (options.manifest) {
    const Dataset ds = load_dataset(*options.manifest);
    require_dim(ds, model);
    queries = test_sets(ds);
  }
  for (const fs::path& p : options.set_files) queries.push_back(read_set(p, model.feature_dim));
  if (queries.empty()) throw InvalidArgument("predict: no query sets given");

  std::vector<Prediction> predictions(queries.size());
  parallel_for(queries.size(), [&](std::size_t i) {
    predictions[i] = predict_from_scores(model, score_query(model, queries[i]), n_angles);
  });
  Json out = Json::array();
  for (std::size_t i = 0; i < queries.size(); ++i) {
    out.push_back({{"set", queries[i].set_id},
                   {"label", predictions[i].label},
                   {"scores", scores_json(model, predictions[i])}});
  }
  return {{"method", to_string(model.config.method)}, {"n_angles", n_angles}, {"predictions", out}};
}

Json to_json(const EvalReport& r) {
  Json per_class = Json::object();
  for (const auto& [label, acc] : r.per_class_accuracy) per_class[label] = acc;
  Json roc = Json::array();
  for (const RocPoint& p : r.roc_points) roc.push_back({p.fpr, p.tpr});
  Json preds = Json::array();
  for (const EvalRecord& e : r.predictions) {
    preds.push_back({{"set", e.set_id}, {"truth", e.truth}, {"predicted", e.predicted}, {"scores", e.scores}});
  }
  Json out = {{"method", r.method},
              {"n_angles", r.n_angles},
              {"accuracy", r.accuracy},
              {"per_class_accuracy", per_class},
              {"labels", r.labels},
              {"confusion", r.confusion},
              {"auc", r.auc},
              {"eer", r.eer},
              {"roc_points", roc}};
  if (r.angle_sweep) {
    Json sweep = Json::array();
    for (const auto& [m, acc] : *r.angle_sweep) sweep.push_back({{"m", m}, {"accuracy", acc}});
    out["angle_sweep"] = sweep;
  }
  out["predictions"] = preds;
  return out;
}

EvalReport cmd_eval(const fs::path& manifest, const fs::path& model_dir, std::optional<int> n_angles, bool sweep) {
  const TrainedModel model = load_model(model_dir);
  const int m = n_angles.value_or(model.config.n_angles);
  if (m < 1) throw InvalidArgument("n_angles must be >= 1");
  const Dataset ds = load_dataset(manifest);
  require_dim(ds, model);

  std::unordered_map<std::string, std::size_t> class_of;
  for (std::size_t c = 0; c < model.n_classes(); ++c) class_of.emplace(model.class_labels[c], c);
  std::vector<const LabeledSet*> probes;
  for (const LabeledSet& s : ds.sets) {
    if (s.split != Split::kTest) continue;
    if (!class_of.contains(s.label)) {
      throw DataError(DataErrorKind::kLabelNotInTrain,
                      "test set '" + s.set.set_id + "' has label '" + s.label + "' unknown to the model");
    }
    probes.push_back(&s);
  }
  if (probes.empty()) throw DataError(DataErrorKind::kSchema, "eval: the manifest has no test sets");

  std::vector<QueryScores> scored(probes.size());
  parallel_for(probes.size(), [&](std::size_t i) { scored[i] = score_query(model, probes[i]->set); });

  const std::size_t n_classes = model.n_classes();
  auto accuracy_at = [&](int angles, std::vector<Prediction>* keep) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      Prediction p = predict_from_scores(model, scored[i], angles);
      correct += p.label_index == class_of.at(probes[i]->label);
      if (keep) keep->push_back(std::move(p));
    }
    return static_cast<double>(correct) / static_cast<double>(probes.size());
  };

  EvalReport report;
  report.method = to_string(model.config.method);
  report.n_angles = m;
  report.labels = model.class_labels;
  std::vector<Prediction> predictions;
  report.accuracy = accuracy_at(m, &predictions);

  report.confusion.assign(n_classes, std::vector<int>(n_classes, 0));
  std::vector<double> genuine;
  std::vector<double> impostor;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const std::size_t truth = class_of.at(probes[i]->label);
    const Prediction& p = predictions[i];
    ++report.confusion[truth][p.label_index];
    for (std::size_t c = 0; c < n_classes; ++c) (c == truth ? genuine : impostor).push_back(p.scores[c]);
    report.predictions.push_back({probes[i]->set.set_id, probes[i]->label, p.label, p.scores});
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    int total = 0;
    for (int n : report.confusion[c]) total += n;
    if (total > 0) {
      report.per_class_accuracy.emplace_back(model.class_labels[c],
                                             static_cast<double>(report.confusion[c][c]) / total);
    }
  }
  if (!impostor.empty()) {
    const Roc r = roc(genuine, impostor);
    report.roc_points = r.points;
    report.auc = r.auc;
    report.eer = r.eer;
  } else {
    warn("eval: single-class model, ROC is undefined and reported as empty");
  }
  if (sweep) {
    report.angle_sweep.emplace();
    for (int k = 1; k <= m; ++k) report.angle_sweep->emplace_back(k, accuracy_at(k, nullptr));
  }
  return report;
}

namespace {

struct PairModels {
  Method method = Method::kMcm;
  std::vector<std::string> labels;
  std::vector<ConvexCone> cones;
  std::vector<Subspace> subspaces;
  std::uint64_t seed = 0;
  std::optional<GapSet> gaps;
  Eigen::Index dim = 0;
};

PairModels pair_models(const PairSource& source, bool need_cones) {
  PairModels out;
  if (source.model_dir) {
    if (!source.set_files.empty()) throw InvalidArgument("give either a model or two set files, not both");
    TrainedModel model = load_model(*source.model_dir);
    out.method = model.config.method;
    out.labels = model.class_labels;
    out.cones = std::move(model.cones);
    out.subspaces = std::move(model.subspaces);
    out.seed = model.config.seed;
    out.gaps = std::move(model.gaps);
    out.dim = model.feature_dim;
    return out;
  }
  if (source.set_files.size() != 2) throw InvalidArgument("expected a model or exactly two set files");
  const ModelConfig& config = source.config;
  validate(config);
  out.method = need_cones ? Method::kMcm : config.method;
  out.seed = config.seed;
  std::vector<Matrix> sets;
  for (const fs::path& p : source.set_files) {
    sets.push_back(canonical_columns(csv::read_columns(p)));
    out.labels.push_back(p.stem().string());
  }
  if (sets[0].rows() != sets[1].rows()) {
    throw DataError(DataErrorKind::kDimensionMismatch,
                    "set files have dimensions " + std::to_string(sets[0].rows()) + " and " +
                        std::to_string(sets[1].rows()));
  }
  out.dim = sets[0].rows();
  for (const Matrix& f : sets) {
    if (is_cone_method(out.method)) {
      nnopt::NmfOptions nmf;
      nmf.seed = mix_seed({config.seed, content_hash(canonical_columns(f))});
      const int rank = static_cast<int>(std::min<Eigen::Index>({config.in_dim, f.rows(), f.cols()}));
      out.cones.push_back(cone_from_features(f, rank, nmf));
    } else {
      const int rank = numerical_rank(f);
      if (rank == 0) throw DataError(DataErrorKind::kParse, "set has rank 0");
      out.subspaces.push_back(subspace_from_features(f, std::min(config.in_dim, rank)));
    }
  }
  return out;
}

}  // namespace

Json cmd_angles(const PairSource& source) {
  const PairModels models = pair_models(source, false);
  const std::size_t n = models.labels.size();
  struct Job {
    std::size_t a, b;
  };
  std::vector<Job> jobs;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) jobs.push_back({a, b});

  std::vector<AngleSpectrum> spectra(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t k) {
    const auto [a, b] = jobs[k];
    AngleSpectrum& s = spectra[k];
    if (is_cone_method(models.method)) {
      const ConvexCone& x = models.cones[a];
      const ConvexCone& y = models.cones[b];
      const Eigen::Index count = std::min(x.n_basis(), y.n_basis());
      if (count == 0) return;
      AlsOptions als;
      als.seed = mix_seed({models.seed, a, b});
      s = cone_angles(x, y, static_cast<int>(count), als);
    } else {
      s.cosines = canonical_angles(models.subspaces[a], models.subspaces[b]);
      s.converged.assign(s.cosines.size(), true);
    }
  });

  Json pairs = Json::array();
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    Json angles = Json::array();
    for (std::size_t i = 0; i < spectra[k].cosines.size(); ++i) {
      const double c = spectra[k].cosines[i];
      angles.push_back({{"cos", c},
                        {"degrees", std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi},
                        {"converged", static_cast<bool>(spectra[k].converged[i])}});
    }
    pairs.push_back({{"first", models.labels[jobs[k].a]}, {"second", models.labels[jobs[k].b]}, {"angles", angles}});
  }
  return {{"method", to_string(models.method)}, {"pairs", pairs}};
}

std::string angles_table(const Json& angles) {
  std::ostringstream out;
  char line[128];
  for (const Json& pair : angles.at("pairs")) {
    out << pair.at("first").get<std::string>() << " vs " << pair.at("second").get<std::string>() << '\n';
    out << "   i        cos    degrees  converged\n";
    int i = 1;
    for (const Json& a : pair.at("angles")) {
      std::snprintf(line, sizeof(line), "%4d %10.6f %10.4f  %s\n", i++, a.at("cos").get<double>(),
                    a.at("degrees").get<double>(), a.at("converged").get<bool>() ? "yes" : "no");
      out << line;
    }
  }
  return out.str();
}

Json cmd_gaps(const PairSource& source, int width, int height, const fs::path& out_dir) {
  PairModels models = pair_models(source, true);
  if (width < 1 || height < 1 || static_cast<Eigen::Index>(width) * height != models.dim) {
    throw InvalidArgument("image shape " + std::to_string(width) + "x" + std::to_string(height) +
                          " cannot hold feature dimension " + std::to_string(models.dim));
  }
  GapSet gaps;
  if (source.model_dir) {
    if (!models.gaps) throw InvalidArgument("the model has no gap vectors; train it with CMCM");
    gaps = *models.gaps;
  } else {
    Eigen::Index min_basis = std::min(models.cones[0].n_basis(), models.cones[1].n_basis());
    const int levels = static_cast<int>(std::min<Eigen::Index>(source.config.n_gaps, min_basis));
    if (levels < 1) throw InvalidArgument("a set cone is empty; no gap vectors exist");
    AlsOptions als;
    als.seed = mix_seed({models.seed, 0x9a95});
    gaps = gap_vectors(align_cones(models.cones, levels, als));
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError(DataErrorKind::kIo, "cannot create " + out_dir.string() + ": " + ec.message());

  auto emit = [&](const Vector& v, const std::string& stem) {
    const GapImage img = make_gap_image(v, width, height);
    write_gap_image(img, out_dir / (stem + ".pgm"), out_dir / (stem + "_mask.pgm"));
    std::size_t highlighted = 0;
    for (bool b : img.highlight_mask) highlighted += b;
    return Json{{"file", stem + ".pgm"},
                {"mask", stem + "_mask.pgm"},
                {"otsu_threshold", img.threshold},
                {"highlighted", highlighted}};
  };

  Json images = Json::array();
  std::map<std::pair<int, int>, std::pair<Vector, int>> mean_abs;
  for (std::size_t i = 0; i < gaps.gaps.size(); ++i) {
    const GapIndex& g = gaps.index[i];
    const std::string suffix = std::to_string(g.first_class) + "_" + std::to_string(g.second_class);
    Json entry = emit(gaps.gaps[i], "gap_" + suffix + "_level" + std::to_string(g.level + 1));
    entry["first"] = models.labels.at(static_cast<std::size_t>(g.first_class));
    entry["second"] = models.labels.at(static_cast<std::size_t>(g.second_class));
    entry["level"] = g.level + 1;
    images.push_back(std::move(entry));
    auto [it, inserted] = mean_abs.try_emplace({g.first_class, g.second_class}, Vector::Zero(models.dim), 0);
    it->second.first += gaps.gaps[i].cwiseAbs();
    ++it->second.second;
  }
  Json means = Json::array();
  for (const auto& [key, acc] : mean_abs) {
    Json entry = emit(acc.first / acc.second, "mean_" + std::to_string(key.first) + "_" + std::to_string(key.second));
    entry["first"] = models.labels.at(static_cast<std::size_t>(key.first));
    entry["second"] = models.labels.at(static_cast<std::size_t>(key.second));
    entry["n_gaps"] = acc.second;
    means.push_back(std::move(entry));
  }
  return {{"width", width}, {"height", height}, {"gap_images", images}, {"mean_images", means}};
}

}  // namespace cmcm::cli
