#pragma once

#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmcm/data.hpp"
#include "cmcm/metrics.hpp"
#include "cmcm/pipeline.hpp"

namespace cmcm::cli {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitNumeric = 4 };

/// Exit code for the exception currently being handled or stored in `error`.
int exit_code_for(const std::exception_ptr& error);

Json cmd_gen(const SynthSpec& spec, const fs::path& out_dir);

/// Trains on the manifest's training split and saves the model. The
/// summary lists per-class basis counts and, for CMCM, the leading
/// discriminant eigenvalues.
Json cmd_train(const fs::path& manifest, const ModelConfig& config, const fs::path& model_dir);

struct PredictOptions {
  fs::path model_dir;
  std::optional<fs::path> manifest;  // classifies its test split
  std::vector<fs::path> set_files;   // or these CSV sets
  std::optional<int> n_angles;
};

Json cmd_predict(const PredictOptions& options);

struct EvalRecord {
  std::string set_id;
  std::string truth;
  std::string predicted;
  std::vector<double> scores;
};

struct EvalReport {
  std::string method;
  int n_angles = 0;
  double accuracy = 0.0;
  std::vector<std::pair<std::string, double>> per_class_accuracy;  // classes with test sets, model order
  std::vector<std::string> labels;
  std::vector<std::vector<int>> confusion;  // [truth][predicted], model order
  std::vector<RocPoint> roc_points;
  double auc = 0.0;
  double eer = 0.0;
  std::optional<std::vector<std::pair<int, double>>> angle_sweep;
  std::vector<EvalRecord> predictions;
};

Json to_json(const EvalReport& report);

/// Classifies every test set of the manifest. Genuine scores are the
/// similarities to the true class, impostor scores those to every other
/// class, pooled over all probes.
EvalReport cmd_eval(const fs::path& manifest, const fs::path& model_dir, std::optional<int> n_angles, bool sweep);

struct PairSource {
  std::optional<fs::path> model_dir;  // every class pair of a model
  std::vector<fs::path> set_files;    // or exactly two CSV sets
  ModelConfig config;                 // method, in_dim, n_gaps and seed for set files
};

/// Cosines, angles in degrees and convergence flags for one or all pairs.
Json cmd_angles(const PairSource& source);
std::string angles_table(const Json& angles);

/// Writes each gap vector and the mean |gap| image of each class pair as
/// PGM files plus their Otsu masks.
Json cmd_gaps(const PairSource& source, int width, int height, const fs::path& out_dir);

}  // namespace cmcm::cli
