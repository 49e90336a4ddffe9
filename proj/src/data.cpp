#include "cmcm/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "cmcm/csv.hpp"
#include "cmcm/error.hpp"
#include "cmcm/parallel.hpp"
#include "cmcm/random.hpp"

namespace cmcm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Index = Eigen::Index;

std::string to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

std::vector<std::string> Dataset::labels() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const LabeledSet& s : sets)
    if (seen.insert(s.label).second) out.push_back(s.label);
  return out;
}

void validate_dataset(const Dataset& ds) {
  std::set<std::string> with_train;
  for (const LabeledSet& s : ds.sets) {
    if (s.set.features.rows() != ds.feature_dim) {
      std::ostringstream msg;
      msg << "set '" << s.set.set_id << "' has dimension " << s.set.features.rows() << ", dataset has "
          << ds.feature_dim;
      throw DataError(DataErrorKind::kDimensionMismatch, msg.str());
    }
    if (s.set.features.cols() < 1) throw DataError(DataErrorKind::kParse, "set '" + s.set.set_id + "' is empty");
    if (!s.set.features.allFinite()) {
      throw DataError(DataErrorKind::kParse, "set '" + s.set.set_id + "' has non-finite values");
    }
    if (s.split == Split::kTrain) with_train.insert(s.label);
  }
  for (const LabeledSet& s : ds.sets) {
    if (!with_train.count(s.label)) {
      throw DataError(DataErrorKind::kLabelNotInTrain, "label '" + s.label + "' has no training set");
    }
  }
}

namespace {

// A file whose rows all share a width other than d is a dimension
// mismatch; a file whose rows disagree with each other is ragged.
Matrix read_set(const fs::path& path, Eigen::Index d) {
  try {
    return csv::read_columns(path, d);
  } catch (const DataError& e) {
    if (e.kind() != DataErrorKind::kRaggedRow) throw;
    Matrix consistent;
    try {
      consistent = csv::read_columns(path);
    } catch (const DataError&) {
      throw e;
    }
    throw DataError(DataErrorKind::kDimensionMismatch, path.string() + ": vectors have " +
                                                           std::to_string(consistent.rows()) +
                                                           " values, dataset feature_dim is " + std::to_string(d));
  }
}

}  // namespace

Dataset load_dataset(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw DataError(DataErrorKind::kMissingFile, "cannot open manifest " + manifest.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(DataErrorKind::kParse, manifest.string() + ": " + e.what());
  }

  Dataset ds;
  std::vector<std::string> paths;
  try {
    ds.feature_dim = doc.at("feature_dim").get<Index>();
    for (const json& entry : doc.at("sets")) {
      LabeledSet s;
      s.set.set_id = entry.at("id").get<std::string>();
      s.label = entry.at("label").get<std::string>();
      const std::string split = entry.at("split").get<std::string>();
      if (split == "train") {
        s.split = Split::kTrain;
      } else if (split == "test") {
        s.split = Split::kTest;
      } else {
        throw DataError(DataErrorKind::kSchema, "set '" + s.set.set_id + "': split must be train or test");
      }
      paths.push_back(entry.at("path").get<std::string>());
      ds.sets.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw DataError(DataErrorKind::kSchema, manifest.string() + ": " + e.what());
  }
  if (ds.feature_dim < 1) throw DataError(DataErrorKind::kSchema, manifest.string() + ": feature_dim must be >= 1");

  const fs::path base = manifest.parent_path();
  parallel_for(ds.sets.size(), [&](std::size_t i) {
    ds.sets[i].set.features = read_set(base / paths[i], ds.feature_dim);
  });
  validate_dataset(ds);
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "sets", ec);
  if (ec) throw DataError(DataErrorKind::kIo, "cannot create " + (dir / "sets").string() + ": " + ec.message());

  json doc;
  doc["feature_dim"] = ds.feature_dim;
  json sets = json::array();
  for (const LabeledSet& s : ds.sets) {
    const std::string rel = "sets/" + s.set.set_id + ".csv";
    csv::write_columns(dir / rel, s.set.features);
    sets.push_back({{"id", s.set.set_id}, {"path", rel}, {"label", s.label}, {"split", to_string(s.split)}});
  }
  doc["sets"] = std::move(sets);
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrorKind::kIo, "cannot write " + (dir / "manifest.json").string());
  out << doc.dump(2) << '\n';
}

void validate(const SynthSpec& spec) {
  auto fail = [](const std::string& what) { throw InvalidArgument("synthetic spec: " + what); };
  if (spec.n_classes < 1) fail("n_classes must be >= 1");
  if (spec.sets_per_class < 1) fail("sets_per_class must be >= 1");
  if (spec.images_per_set < 1) fail("images_per_set must be >= 1");
  if (spec.feature_dim < 1) fail("feature_dim must be >= 1");
  if (spec.cone_rank < 1 || spec.cone_rank > spec.feature_dim) fail("cone_rank must be in [1, feature_dim]");
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) fail("noise_sigma must be >= 0");
  if (!(spec.class_separation >= 0.0 && spec.class_separation <= 1.0)) fail("class_separation must be in [0, 1]");
  if (!(spec.train_fraction >= 0.0 && spec.train_fraction <= 1.0)) fail("train_fraction must be in [0, 1]");
}

std::vector<Matrix> synthetic_prototypes(const SynthSpec& spec) {
  validate(spec);
  const Index d = spec.feature_dim;
  Rng rng(mix_seed({spec.seed, 1}));
  std::vector<Matrix> out;
  for (int c = 0; c < spec.n_classes; ++c) {
    const Index begin = static_cast<Index>(c) * d / spec.n_classes;
    const Index end = static_cast<Index>(c + 1) * d / spec.n_classes;
    Matrix protos(d, spec.cone_rank);
    for (int k = 0; k < spec.cone_rank; ++k) {
      Vector own = Vector::Zero(d);
      for (Index i = begin; i < end; ++i) own(i) = rng.uniform_open_zero();
      Vector shared(d);
      for (Index i = 0; i < d; ++i) shared(i) = rng.uniform_open_zero();
      shared.normalize();
      Vector v = (1.0 - spec.class_separation) * shared;
      if (end > begin) v += spec.class_separation * own.normalized();
      if (v.norm() == 0.0) v = shared;
      protos.col(k) = v.normalized();
    }
    out.push_back(std::move(protos));
  }
  return out;
}

Dataset generate_synthetic(const SynthSpec& spec) {
  const std::vector<Matrix> protos = synthetic_prototypes(spec);
  const int n_train =
      std::max(1, static_cast<int>(std::floor(spec.train_fraction * spec.sets_per_class)));

  Dataset ds;
  ds.feature_dim = spec.feature_dim;
  for (int c = 0; c < spec.n_classes; ++c) {
    for (int s = 0; s < spec.sets_per_class; ++s) {
      Rng rng(mix_seed({spec.seed, 2, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(s)}));
      Matrix f(spec.feature_dim, spec.images_per_set);
      for (int n = 0; n < spec.images_per_set; ++n) {
        Vector coeffs(spec.cone_rank);
        for (int k = 0; k < spec.cone_rank; ++k) coeffs(k) = rng.uniform();
        Vector x = protos[static_cast<std::size_t>(c)] * coeffs;
        if (spec.noise_sigma > 0.0) {
          for (Index i = 0; i < x.size(); ++i) x(i) = std::max(0.0, x(i) + spec.noise_sigma * rng.normal());
        }
        f.col(n) = x;
      }
      std::ostringstream id;
      id << "c" << c << "_s" << s;
      ds.sets.push_back({{std::move(f), id.str()}, "class" + std::to_string(c), s < n_train ? Split::kTrain : Split::kTest});
    }
  }
  return ds;
}

Dataset split_dataset(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidArgument("split_dataset: fraction must be in (0, 1)");
  Dataset out = ds;
  const std::vector<std::string> labels = ds.labels();
  for (std::size_t c = 0; c < labels.size(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < ds.sets.size(); ++i)
      if (ds.sets[i].label == labels[c]) members.push_back(i);
    const auto n_train = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(members.size())));
    if (n_train == 0) {
      throw InvalidArgument("split_dataset: class '" + labels[c] + "' would have no training set");
    }
    Rng rng(mix_seed({seed, 0x5917, static_cast<std::uint64_t>(c)}));
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
    for (std::size_t k = 0; k < members.size(); ++k)
      out.sets[members[k]].split = k < n_train ? Split::kTrain : Split::kTest;
  }
  return out;
}

}  // namespace cmcm
