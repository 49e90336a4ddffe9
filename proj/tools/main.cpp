// Command-line front end: gen, train, predict, eval, angles, gaps.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmcm/commands.hpp"
#include "cmcm/error.hpp"
#include "cmcm/parallel.hpp"

namespace {

using cmcm::cli::Json;

void add_config_flags(CLI::App* cmd, cmcm::ModelConfig& config, std::string& method) {
  cmd->add_option("--method", method, "MSM, CMSM, MCM or CMCM")->capture_default_str();
  cmd->add_option("--ref-dim", config.ref_dim, "class cone basis count / subspace dimension")->capture_default_str();
  cmd->add_option("--in-dim", config.in_dim, "input set basis count / subspace dimension")->capture_default_str();
  cmd->add_option("--n-angles", config.n_angles, "angles averaged by the similarity")->capture_default_str();
  cmd->add_option("--disc-dim", config.disc_dim, "discriminant (CMCM) or GDS (CMSM) dimension")->capture_default_str();
  cmd->add_option("--n-gaps", config.n_gaps, "aligned levels for gap vectors")->capture_default_str();
  cmd->add_option("--eps-rel", config.eps_rel, "relative regularization of the within scatter")->capture_default_str();
  cmd->add_option("--seed", config.seed, "seed for NMF and ALS restarts")->capture_default_str();
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw cmcm::DataError(cmcm::DataErrorKind::kIo, "cannot write " + out_path);
  out << text;
}

void emit_json(const Json& j, const std::string& out_path) { emit(j.dump(2) + "\n", out_path); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex-cone and subspace models for image-set classification"};
  app.require_subcommand(1);
  std::size_t threads = 1;
  app.add_option("--threads", threads, "worker threads (results do not depend on it)")->capture_default_str();

  std::string out_path;
  std::string method = "MCM";
  cmcm::ModelConfig config;

  cmcm::SynthSpec spec;
  std::string gen_dir;
  auto* gen = app.add_subcommand("gen", "write a synthetic dataset (manifest + CSV sets)");
  gen->add_option("--out-dir", gen_dir, "dataset directory")->required();
  gen->add_option("--n-classes", spec.n_classes)->capture_default_str();
  gen->add_option("--sets-per-class", spec.sets_per_class)->capture_default_str();
  gen->add_option("--images-per-set", spec.images_per_set)->capture_default_str();
  gen->add_option("--feature-dim", spec.feature_dim)->capture_default_str();
  gen->add_option("--cone-rank", spec.cone_rank)->capture_default_str();
  gen->add_option("--noise-sigma", spec.noise_sigma)->capture_default_str();
  gen->add_option("--class-separation", spec.class_separation)->capture_default_str();
  gen->add_option("--train-fraction", spec.train_fraction)->capture_default_str();
  gen->add_option("--seed", spec.seed)->capture_default_str();
  gen->add_option("--out", out_path, "write the JSON summary here");

  std::string manifest;
  std::string model_dir;
  auto* train = app.add_subcommand("train", "fit class models and save them");
  train->add_option("--manifest", manifest, "dataset manifest")->required();
  train->add_option("--model", model_dir, "output model directory")->required();
  add_config_flags(train, config, method);
  train->add_option("--out", out_path);

  std::optional<int> n_angles;
  std::vector<std::string> set_files;
  auto* predict = app.add_subcommand("predict", "classify sets with a saved model");
  predict->add_option("--model", model_dir)->required();
  predict->add_option("--manifest", manifest, "classify the manifest's test split");
  predict->add_option("sets", set_files, "CSV set files");
  predict->add_option("--n-angles", n_angles);
  predict->add_option("--out", out_path);

  bool sweep = false;
  auto* eval = app.add_subcommand("eval", "accuracy, confusion and ROC on a test split");
  eval->add_option("--manifest", manifest)->required();
  eval->add_option("--model", model_dir)->required();
  eval->add_option("--n-angles", n_angles, "override the model's n_angles");
  eval->add_flag("--sweep", sweep, "also report accuracy for m = 1..n_angles");
  eval->add_option("--out", out_path);

  std::string format = "json";
  auto* angles = app.add_subcommand("angles", "angles between two sets or all class pairs of a model");
  angles->add_option("--model", model_dir, "trained model directory");
  angles->add_option("sets", set_files, "two CSV set files");
  add_config_flags(angles, config, method);
  angles->add_option("--format", format)->check(CLI::IsMember({"json", "text"}))->capture_default_str();
  angles->add_option("--out", out_path);

  int width = 0;
  int height = 0;
  std::string image_dir;
  auto* gaps = app.add_subcommand("gaps", "export gap vectors as PGM images with Otsu masks");
  gaps->add_option("--model", model_dir, "trained CMCM model directory");
  gaps->add_option("sets", set_files, "two CSV set files");
  add_config_flags(gaps, config, method);
  gaps->add_option("--width", width, "image width in pixels")->required();
  gaps->add_option("--height", height, "image height in pixels")->required();
  gaps->add_option("--image-dir", image_dir, "output directory for images")->required();
  gaps->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : cmcm::cli::kExitUsage;
  }

  try {
    cmcm::set_max_threads(threads);
    config.method = cmcm::parse_method(method);
    auto to_paths = [&] {
      std::vector<std::filesystem::path> out(set_files.begin(), set_files.end());
      return out;
    };
    auto pair_source = [&] {
      cmcm::cli::PairSource source;
      if (!model_dir.empty()) source.model_dir = model_dir;
      source.set_files = to_paths();
      source.config = config;
      return source;
    };

    if (gen->parsed()) {
      emit_json(cmcm::cli::cmd_gen(spec, gen_dir), out_path);
    } else if (train->parsed()) {
      emit_json(cmcm::cli::cmd_train(manifest, config, model_dir), out_path);
    } else if (predict->parsed()) {
      cmcm::cli::PredictOptions options;
      options.model_dir = model_dir;
      if (!manifest.empty()) options.manifest = manifest;
      options.set_files = to_paths();
      options.n_angles = n_angles;
      emit_json(cmcm::cli::cmd_predict(options), out_path);
    } else if (eval->parsed()) {
      emit_json(cmcm::cli::to_json(cmcm::cli::cmd_eval(manifest, model_dir, n_angles, sweep)), out_path);
    } else if (angles->parsed()) {
      const Json table = cmcm::cli::cmd_angles(pair_source());
      if (format == "text") {
        emit(cmcm::cli::angles_table(table), out_path);
      } else {
        emit_json(table, out_path);
      }
    } else if (gaps->parsed()) {
      emit_json(cmcm::cli::cmd_gaps(pair_source(), width, height, image_dir), out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cmcm::cli::exit_code_for(std::current_exception());
  }
  return cmcm::cli::kExitOk;
}
