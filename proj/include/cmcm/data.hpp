#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cmcm/linalg.hpp"

namespace cmcm {

/// One image set: columns of `features` are the feature vectors.
struct FeatureSet {
  Matrix features;
  std::string set_id;
};

enum class Split { kTrain, kTest };

std::string to_string(Split split);

struct LabeledSet {
  FeatureSet set;
  std::string label;
  Split split = Split::kTrain;
};

struct Dataset {
  Eigen::Index feature_dim = 0;
  std::vector<LabeledSet> sets;

  /// Distinct labels in order of first appearance.
  std::vector<std::string> labels() const;
};

/// Checks shared dimension, finiteness, non-empty sets and that every label
/// has a training set. Throws DataError.
void validate_dataset(const Dataset& ds);

/// Reads a JSON manifest
///   {"feature_dim": d, "sets": [{"id", "path", "label", "split"}]}
/// and every referenced CSV (one feature vector per row). Paths are
/// relative to the manifest's directory.
Dataset load_dataset(const std::filesystem::path& manifest);

/// Writes `dir/manifest.json` and `dir/sets/<id>.csv`.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

struct SynthSpec {
  int n_classes = 5;
  int sets_per_class = 8;
  int images_per_set = 30;
  int feature_dim = 64;
  int cone_rank = 5;
  double noise_sigma = 0.05;
  double class_separation = 0.9;
  std::uint64_t seed = 7;
  /// Leading fraction of each class's sets marked as training (at least one).
  double train_fraction = 0.5;
};

void validate(const SynthSpec& spec);

/// Per-class prototype directions (feature_dim x cone_rank, unit columns).
///
/// Every prototype mixes a component supported on the class's own block of
/// coordinates with one supported on all coordinates; class_separation is
/// the weight of the own-block part, so 1 gives disjoint supports.
std::vector<Matrix> synthetic_prototypes(const SynthSpec& spec);

/// Each image is a uniform(0,1) non-negative combination of its class
/// prototypes plus Gaussian noise, truncated at zero.
Dataset generate_synthetic(const SynthSpec& spec);

/// Reassigns train/test per class by a seeded shuffle; floor(fraction * n)
/// sets of each class go to training. Throws InvalidArgument when a class
/// would get no training set.
Dataset split_dataset(const Dataset& ds, double fraction, std::uint64_t seed);

}  // namespace cmcm
