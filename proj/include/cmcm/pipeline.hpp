#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cmcm/cone.hpp"
#include "cmcm/data.hpp"
#include "cmcm/discriminant.hpp"
#include "cmcm/subspace.hpp"

namespace cmcm {

enum class Method { kMsm, kCmsm, kMcm, kCmcm };

std::string to_string(Method method);
/// Accepts "msm", "cmsm", "mcm", "cmcm" in any case.
Method parse_method(const std::string& name);
inline bool is_cone_method(Method m) { return m == Method::kMcm || m == Method::kCmcm; }

struct ModelConfig {
  Method method = Method::kMcm;
  int ref_dim = 5;     // class cone basis count / class subspace dimension
  int in_dim = 5;      // same for the input set
  int n_angles = 5;    // angles averaged by the similarity
  int disc_dim = 10;   // discriminant dimension (CMCM) or GDS dimension (CMSM)
  int n_gaps = 5;      // aligned levels used for the between-class scatter (CMCM)
  double eps_rel = 1e-6;
  std::uint64_t seed = 0;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void validate(const ModelConfig& config);

/// Immutable after construction. Exactly one of `cones` / `subspaces` is
/// populated (one entry per label); for CMCM and CMSM those live in the
/// embedding's coordinates.
struct TrainedModel {
  ModelConfig config;
  Eigen::Index feature_dim = 0;
  std::vector<std::string> class_labels;
  std::vector<ConvexCone> cones;
  std::vector<Subspace> subspaces;
  std::optional<DiscriminantSpace> discriminant;  // CMCM
  std::optional<Gds> gds;                         // CMSM
  std::optional<GapSet> gaps;                     // CMCM, ambient coordinates
  std::vector<std::uint64_t> class_seeds;         // NMF seed of each class model

  std::size_t n_classes() const { return class_labels.size(); }
};

bool operator==(const TrainedModel& a, const TrainedModel& b);

struct Prediction {
  std::size_t label_index = 0;
  std::string label;
  std::vector<double> scores;  // per class, in class_labels order
};

/// Descending cosine spectra of a query against every class model. The
/// spectra are independent of n_angles, so one scoring serves every
/// truncation of the similarity.
struct QueryScores {
  std::vector<std::vector<double>> cosines;
  bool degenerate = false;  // the query model vanished in the embedding
};

using TrainingSet = std::pair<FeatureSet, std::string>;

/// Pools all sets of each label column-wise, fits one model per label, and
/// for CMCM/CMSM builds the embedding and projects the class models into it.
TrainedModel train(const ModelConfig& config, const std::vector<TrainingSet>& sets);
/// Trains on the sets of `ds` marked as training.
TrainedModel train(const ModelConfig& config, const Dataset& ds);

QueryScores score_query(const TrainedModel& model, const FeatureSet& query);

/// Similarity = mean cos^2 over the first min(n_angles, available) cosines.
/// Argmax with ties going to the lowest class index.
Prediction predict_from_scores(const TrainedModel& model, const QueryScores& scores, int n_angles);

Prediction predict(const TrainedModel& model, const FeatureSet& query);

/// Column order of a feature matrix made canonical (lexicographic), so
/// models do not depend on the order images were listed.
Matrix canonical_columns(const Matrix& features);

/// FNV-1a over the dimensions and the entries rounded to 2^-30 of the
/// largest magnitude, so positive rescaling keeps the hash.
std::uint64_t content_hash(const Matrix& m);

inline constexpr int kModelSchemaVersion = 1;

/// Writes `dir/model.json` plus one CSV per matrix (one vector per line).
void save_model(const TrainedModel& model, const std::filesystem::path& dir);
TrainedModel load_model(const std::filesystem::path& dir);

}  // namespace cmcm
