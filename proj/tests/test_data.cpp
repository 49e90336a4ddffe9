#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "cmcm/cone.hpp"
#include "cmcm/csv.hpp"
#include "cmcm/data.hpp"
#include "cmcm/error.hpp"
#include "cmcm/random.hpp"
#include "test_paths.hpp"

namespace cmcm {
namespace {

namespace fs = std::filesystem;

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

DataErrorKind load_error(const fs::path& manifest) {
  try {
    load_dataset(manifest);
  } catch (const DataError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected DataError";
  return DataErrorKind::kIo;
}

TEST(Csv, RoundTripIsExact) {
  const fs::path dir = test::scratch_dir("csv_roundtrip");
  Rng rng(61);
  Matrix m(4, 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * 1e-3 + rng.uniform();
  m(0, 0) = 0.1;
  m(1, 0) = 1e-300;
  csv::write_columns(dir / "m.csv", m);
  EXPECT_EQ(csv::read_columns(dir / "m.csv"), m);
}

TEST(Csv, RaggedRowReportsLine) {
  const fs::path dir = test::scratch_dir("csv_ragged");
  write(dir / "s.csv", "1,2,3,4\n1,2,3,4,5\n");
  try {
    csv::read_columns(dir / "s.csv", 4);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.kind(), DataErrorKind::kRaggedRow);
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(Csv, BadFieldAndMissingFile) {
  const fs::path dir = test::scratch_dir("csv_bad");
  write(dir / "s.csv", "1,abc\n");
  try {
    csv::read_columns(dir / "s.csv");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.kind(), DataErrorKind::kParse);
  }
  try {
    csv::read_columns(dir / "none.csv");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.kind(), DataErrorKind::kMissingFile);
  }
}

TEST(Dataset, SaveLoadRoundTrip) {
  const fs::path dir = test::scratch_dir("ds_roundtrip");
  Dataset ds;
  ds.feature_dim = 3;
  ds.sets.push_back({{Matrix::Random(3, 4).cwiseAbs(), "a"}, "x", Split::kTrain});
  ds.sets.push_back({{Matrix::Random(3, 2).cwiseAbs(), "b"}, "x", Split::kTest});
  save_dataset(ds, dir);
  const Dataset back = load_dataset(dir / "manifest.json");
  ASSERT_EQ(back.sets.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.sets[i].set.features, ds.sets[i].set.features);
    EXPECT_EQ(back.sets[i].set.set_id, ds.sets[i].set.set_id);
    EXPECT_EQ(back.sets[i].label, ds.sets[i].label);
    EXPECT_EQ(back.sets[i].split, ds.sets[i].split);
  }
}

TEST(Dataset, DistinctErrors) {
  const fs::path dir = test::scratch_dir("ds_errors");
  EXPECT_EQ(load_error(dir / "absent.json"), DataErrorKind::kMissingFile);

  write(dir / "ragged" / "a.csv", "1,2,3,4\n1,2,3,4,5\n");
  write(dir / "ragged" / "m.json",
        R"({"feature_dim": 4, "sets": [{"id": "a", "path": "a.csv", "label": "x", "split": "train"}]})");
  EXPECT_EQ(load_error(dir / "ragged" / "m.json"), DataErrorKind::kRaggedRow);

  write(dir / "dim" / "a.csv", "1,2,3\n");
  write(dir / "dim" / "m.json",
        R"({"feature_dim": 4, "sets": [{"id": "a", "path": "a.csv", "label": "x", "split": "train"}]})");
  EXPECT_EQ(load_error(dir / "dim" / "m.json"), DataErrorKind::kDimensionMismatch);

  write(dir / "label" / "a.csv", "1,2\n");
  write(dir / "label" / "b.csv", "1,2\n");
  write(dir / "label" / "m.json",
        R"({"feature_dim": 2, "sets": [{"id": "a", "path": "a.csv", "label": "x", "split": "train"},
                                         {"id": "b", "path": "b.csv", "label": "y", "split": "test"}]})");
  EXPECT_EQ(load_error(dir / "label" / "m.json"), DataErrorKind::kLabelNotInTrain);

  write(dir / "schema" / "m.json", R"({"feature_dim": 2, "sets": [{"id": "a", "label": "x"}]})");
  EXPECT_EQ(load_error(dir / "schema" / "m.json"), DataErrorKind::kSchema);

  write(dir / "json" / "m.json", R"({"feature_dim": 2, "sets": [)");
  EXPECT_EQ(load_error(dir / "json" / "m.json"), DataErrorKind::kParse);
}

TEST(Dataset, RaggedRowMessageHasLineNumber) {
  const fs::path dir = test::scratch_dir("ds_line");
  write(dir / "a.csv", "1,2,3,4\n1,2,3,4\n1,2,3,4,5\n");
  write(dir / "m.json", R"({"feature_dim": 4, "sets": [{"id": "a", "path": "a.csv", "label": "x", "split": "train"}]})");
  try {
    load_dataset(dir / "m.json");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Synthetic, CountsAndSplits) {
  SynthSpec spec;
  spec.n_classes = 3;
  spec.sets_per_class = 4;
  spec.feature_dim = 12;
  spec.cone_rank = 2;
  const Dataset ds = generate_synthetic(spec);
  ASSERT_EQ(ds.sets.size(), 12u);
  int train = 0;
  for (const auto& s : ds.sets) {
    EXPECT_EQ(s.set.features.rows(), 12);
    EXPECT_EQ(s.set.features.cols(), spec.images_per_set);
    EXPECT_GE(s.set.features.minCoeff(), 0.0);
    train += s.split == Split::kTrain;
  }
  EXPECT_EQ(train, 6);
  EXPECT_EQ(ds.labels().size(), 3u);
}

TEST(Synthetic, Deterministic) {
  SynthSpec spec;
  spec.n_classes = 2;
  const Dataset a = generate_synthetic(spec);
  const Dataset b = generate_synthetic(spec);
  for (std::size_t i = 0; i < a.sets.size(); ++i) EXPECT_EQ(a.sets[i].set.features, b.sets[i].set.features);
  spec.seed = 8;
  EXPECT_NE(generate_synthetic(spec).sets[0].set.features, a.sets[0].set.features);
}

TEST(Synthetic, NoiselessFeaturesLieInTheirClassCone) {
  SynthSpec spec;
  spec.n_classes = 2;
  spec.sets_per_class = 2;
  spec.feature_dim = 20;
  spec.cone_rank = 3;
  spec.noise_sigma = 0.0;
  spec.class_separation = 1.0;
  const Dataset ds = generate_synthetic(spec);
  for (const auto& s : ds.sets) {
    const ConvexCone cone = cone_from_features(s.set.features, spec.cone_rank, {.max_iter = 20000, .rel_tol = 0.0});
    for (Eigen::Index j = 0; j < s.set.features.cols(); ++j) {
      const Vector x = s.set.features.col(j);
      EXPECT_LE((project_to_cone(cone, x).projected - x).norm(), 1e-8 * std::max(1.0, x.norm()));
    }
  }
}

TEST(Synthetic, SeparabilityPrecondition) {
  SynthSpec spec;
  spec.noise_sigma = 0.01;
  spec.class_separation = 1.0;
  const Dataset ds = generate_synthetic(spec);
  std::vector<ConvexCone> cones;
  std::vector<ConvexCone> refits;
  for (int c = 0; c < spec.n_classes; ++c) {
    const auto& first = ds.sets[static_cast<std::size_t>(c * spec.sets_per_class)].set.features;
    const auto& second = ds.sets[static_cast<std::size_t>(c * spec.sets_per_class + 1)].set.features;
    cones.push_back(cone_from_features(first, spec.cone_rank));
    refits.push_back(cone_from_features(second, spec.cone_rank));
  }
  const int m = spec.cone_rank;
  for (int a = 0; a < spec.n_classes; ++a) {
    const auto& ca = cones[static_cast<std::size_t>(a)];
    EXPECT_GE(cone_similarity(cone_angles(ca, refits[static_cast<std::size_t>(a)], m), m), 0.9);
    for (int b = a + 1; b < spec.n_classes; ++b) {
      EXPECT_LE(cone_similarity(cone_angles(ca, cones[static_cast<std::size_t>(b)], m), m), 0.2);
    }
  }
}

TEST(Synthetic, InvalidSpec) {
  SynthSpec spec;
  spec.cone_rank = spec.feature_dim + 1;
  EXPECT_THROW(generate_synthetic(spec), InvalidArgument);
  spec = {};
  spec.class_separation = 1.5;
  EXPECT_THROW(generate_synthetic(spec), InvalidArgument);
}

TEST(Split, FractionAndDeterminism) {
  SynthSpec spec;
  spec.n_classes = 2;
  spec.sets_per_class = 4;
  const Dataset ds = generate_synthetic(spec);
  const Dataset a = split_dataset(ds, 0.5, 3);
  const Dataset b = split_dataset(ds, 0.5, 3);
  int train = 0;
  for (std::size_t i = 0; i < a.sets.size(); ++i) {
    EXPECT_EQ(a.sets[i].split, b.sets[i].split);
    train += a.sets[i].split == Split::kTrain;
  }
  EXPECT_EQ(train, 4);
}

TEST(Split, SingleSetPerClassRejected) {
  SynthSpec spec;
  spec.n_classes = 2;
  spec.sets_per_class = 1;
  EXPECT_THROW(split_dataset(generate_synthetic(spec), 0.5, 1), InvalidArgument);
  EXPECT_THROW(split_dataset(generate_synthetic(spec), 1.0, 1), InvalidArgument);
}

}  // namespace
}  // namespace cmcm
