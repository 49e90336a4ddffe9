#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "cmcm/error.hpp"
#include "cmcm/log.hpp"
#include "cmcm/parallel.hpp"
#include "cmcm/pipeline.hpp"
#include "oracles.hpp"
#include "test_paths.hpp"

namespace cmcm {
namespace {

namespace fs = std::filesystem;

SynthSpec small_spec() {
  SynthSpec spec;
  spec.n_classes = 3;
  spec.sets_per_class = 4;
  spec.images_per_set = 20;
  spec.feature_dim = 24;
  spec.cone_rank = 3;
  return spec;
}

ModelConfig config_for(Method m) {
  ModelConfig c;
  c.method = m;
  c.ref_dim = 3;
  c.in_dim = 3;
  c.n_angles = 3;
  c.n_gaps = 3;
  c.disc_dim = m == Method::kCmsm ? 20 : 12;
  c.seed = 4;
  return c;
}

class AllMethods : public ::testing::TestWithParam<Method> {};

TEST_P(AllMethods, ClassifiesSeparableSyntheticData) {
  const Dataset ds = generate_synthetic(small_spec());
  const TrainedModel model = train(config_for(GetParam()), ds);
  EXPECT_EQ(model.n_classes(), 3u);
  int correct = 0;
  int total = 0;
  for (const auto& s : ds.sets) {
    const Prediction p = predict(model, s.set);
    ASSERT_EQ(p.scores.size(), 3u);
    for (double v : p.scores) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0 + 1e-12);
    }
    correct += p.label == s.label;
    ++total;
  }
  EXPECT_GE(correct, total - 1) << to_string(GetParam());
}

TEST_P(AllMethods, SaveLoadRoundTrip) {
  const TrainedModel model = train(config_for(GetParam()), generate_synthetic(small_spec()));
  const fs::path dir = test::scratch_dir("model_" + to_string(GetParam()));
  save_model(model, dir);
  const TrainedModel back = load_model(dir);
  EXPECT_TRUE(back == model);
}

TEST_P(AllMethods, SingleClassAlwaysPredictsIt) {
  SynthSpec spec = small_spec();
  spec.n_classes = 1;
  const Dataset ds = generate_synthetic(spec);
  const TrainedModel model = train(config_for(GetParam()), ds);
  for (const auto& s : ds.sets) EXPECT_EQ(predict(model, s.set).label, "class0");
}

TEST_P(AllMethods, ScalingAndPermutationInvariant) {
  const Dataset ds = generate_synthetic(small_spec());
  const TrainedModel model = train(config_for(GetParam()), ds);
  const FeatureSet& q = ds.sets.back().set;
  const Prediction base = predict(model, q);

  FeatureSet scaled{q.features * 3.5, q.set_id};
  const Prediction ps = predict(model, scaled);
  EXPECT_EQ(ps.label, base.label);
  for (std::size_t c = 0; c < base.scores.size(); ++c) EXPECT_NEAR(ps.scores[c], base.scores[c], 1e-8);

  Eigen::PermutationMatrix<Eigen::Dynamic> perm(q.features.cols());
  perm.setIdentity();
  std::reverse(perm.indices().data(), perm.indices().data() + perm.size());
  FeatureSet shuffled{q.features * perm, q.set_id};
  const Prediction pp = predict(model, shuffled);
  EXPECT_EQ(pp.scores, base.scores);
}

TEST_P(AllMethods, IndependentOfThreadCount) {
  const Dataset ds = generate_synthetic(small_spec());
  set_max_threads(1);
  const TrainedModel a = train(config_for(GetParam()), ds);
  const Prediction pa = predict(a, ds.sets[5].set);
  set_max_threads(4);
  const TrainedModel b = train(config_for(GetParam()), ds);
  const Prediction pb = predict(b, ds.sets[5].set);
  set_max_threads(1);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(pa.scores, pb.scores);
}

INSTANTIATE_TEST_SUITE_P(Methods, AllMethods,
                         ::testing::Values(Method::kMsm, Method::kCmsm, Method::kMcm, Method::kCmcm),
                         [](const auto& info) { return to_string(info.param); });

TEST(Train, CmcmBuildsEmbeddingAndGaps) {
  const TrainedModel model = train(config_for(Method::kCmcm), generate_synthetic(small_spec()));
  ASSERT_TRUE(model.discriminant.has_value());
  ASSERT_TRUE(model.gaps.has_value());
  EXPECT_EQ(model.gaps->gaps.size(), 3u * 3u);
  EXPECT_EQ(model.discriminant->basis.cols(), 12);
  for (const ConvexCone& c : model.cones) EXPECT_EQ(c.dim_ambient(), 12);
}

TEST(Train, TwoCoordinateClassesGiveGapAlignedEmbedding) {
  Matrix a = Matrix::Zero(4, 3);
  a.row(0).setConstant(1.0);
  Matrix b = Matrix::Zero(4, 3);
  b.row(1) << 1, 2, 3;
  ModelConfig c = config_for(Method::kCmcm);
  c.ref_dim = 1;
  c.in_dim = 1;
  c.n_gaps = 1;
  c.disc_dim = 1;
  const TrainedModel model = train(c, {{{a, "a"}, "A"}, {{b, "b"}, "B"}});
  Vector g = Vector::Zero(4);
  g << 1, -1, 0, 0;
  EXPECT_GE(std::abs(model.discriminant->basis.col(0).dot(g.normalized())), 0.999);
}

TEST(Train, NegativeFeaturesRejectedForCones) {
  Matrix f = Matrix::Ones(3, 4);
  f(0, 0) = -1;
  EXPECT_THROW(train(config_for(Method::kMcm), {{{f, "s"}, "x"}}), DataError);
  ModelConfig msm = config_for(Method::kMsm);
  msm.ref_dim = 2;
  EXPECT_NO_THROW(train(msm, {{{f, "s"}, "x"}}));
}

TEST(Train, ConfigValidation) {
  ModelConfig c;
  c.ref_dim = 0;
  EXPECT_THROW(train(c, {{{Matrix::Ones(3, 3), "s"}, "x"}}), InvalidArgument);
  EXPECT_THROW(train(ModelConfig{}, std::vector<TrainingSet>{}), InvalidArgument);
  ModelConfig big;
  big.method = Method::kCmcm;
  big.disc_dim = 100;
  big.ref_dim = 1;
  EXPECT_THROW(train(big, {{{Matrix::Ones(3, 3), "s"}, "x"}, {{Matrix::Identity(3, 3), "t"}, "y"}}), InvalidArgument);
}

TEST(Predict, IdenticalModelsTieToFirstClass) {
  const Matrix f = (Matrix(3, 3) << 1, 0, 1, 0, 1, 1, 1, 1, 0).finished();
  ModelConfig c = config_for(Method::kMcm);
  c.ref_dim = 2;
  c.in_dim = 2;
  const TrainedModel model = train(c, {{{f, "a"}, "first"}, {{f, "b"}, "second"}});
  const Prediction p = predict(model, {f, "q"});
  EXPECT_EQ(p.scores[0], p.scores[1]);
  EXPECT_EQ(p.label, "first");
}

TEST(Predict, DimensionMismatchAndRankZero) {
  ModelConfig c = config_for(Method::kMsm);
  c.ref_dim = 2;
  const TrainedModel model = train(c, {{{Matrix::Identity(3, 3), "a"}, "x"}});
  EXPECT_THROW(predict(model, {Matrix::Ones(4, 2), "q"}), DataError);
  EXPECT_THROW(predict(model, {Matrix::Zero(3, 2), "q"}), DataError);
}

TEST(Predict, VanishedQueryScoresZeroWithWarning) {
  // Classes live on e1 and e2; the query on e3 has no component in the
  // one-dimensional discriminant space.
  Matrix a = Matrix::Zero(3, 2);
  a.row(0).setOnes();
  Matrix b = Matrix::Zero(3, 2);
  b.row(1).setOnes();
  ModelConfig c = config_for(Method::kCmcm);
  c.ref_dim = c.in_dim = c.n_gaps = c.disc_dim = 1;
  const TrainedModel model = train(c, {{{a, "a"}, "A"}, {{b, "b"}, "B"}});
  Matrix q = Matrix::Zero(3, 2);
  q.row(2).setOnes();
  std::vector<std::string> warnings;
  auto previous = set_warning_handler([&](const std::string& m) { warnings.push_back(m); });
  const Prediction p = predict(model, {q, "q"});
  set_warning_handler(previous);
  EXPECT_EQ(p.scores, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(p.label, "A");
  EXPECT_FALSE(warnings.empty());
}

TEST(Predict, MsmAndMcmAgreeOnSymmetricData) {
  Rng rng(71);
  const Eigen::Index d = 10;
  std::vector<TrainingSet> sets;
  std::vector<Matrix> bases;
  for (int c = 0; c < 2; ++c) {
    const Matrix q = oracle::orthonormal_basis(rng, d, 2);
    bases.push_back(q);
    Matrix f(d, 4);
    f << q, -q;
    sets.push_back({{f, "s" + std::to_string(c)}, "c" + std::to_string(c)});
  }
  ModelConfig msm;
  msm.method = Method::kMsm;
  msm.ref_dim = msm.in_dim = msm.n_angles = 2;
  const TrainedModel sub = train(msm, sets);
  const Matrix qq = oracle::orthonormal_basis(rng, d, 2);
  Matrix query(d, 4);
  query << qq, -qq;
  const Prediction ps = predict(sub, {query, "q"});

  // The cone model of a +-u set is fitted directly so NMF (which needs
  // non-negative input) is bypassed.
  TrainedModel cone_model = sub;
  cone_model.config.method = Method::kMcm;
  cone_model.subspaces.clear();
  for (const Matrix& q : bases) {
    Matrix g(d, 4);
    g << q, -q;
    cone_model.cones.push_back(ConvexCone::from_basis(g));
  }
  Matrix gq(d, 4);
  gq << qq, -qq;
  const ConvexCone query_cone = ConvexCone::from_basis(gq);
  for (std::size_t c = 0; c < 2; ++c) {
    const double s = cone_similarity(cone_angles(query_cone, cone_model.cones[c], 2, {.seed = c}), 2);
    EXPECT_NEAR(s, ps.scores[c], 1e-3);
  }
}

TEST(Persistence, Errors) {
  const TrainedModel model = train(config_for(Method::kCmcm), generate_synthetic(small_spec()));
  const fs::path dir = test::scratch_dir("persist_errors");
  EXPECT_THROW(load_model(dir / "missing"), DataError);

  save_model(model, dir / "truncated");
  {
    std::ifstream in(dir / "truncated" / "class_000.csv");
    std::string first;
    std::getline(in, first);
    std::ofstream(dir / "truncated" / "class_000.csv") << first.substr(0, first.size() / 2) << "\n";
  }
  try {
    load_model(dir / "truncated");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_TRUE(e.kind() == DataErrorKind::kParse || e.kind() == DataErrorKind::kRaggedRow) << e.what();
  }

  save_model(model, dir / "badjson");
  std::ofstream(dir / "badjson" / "model.json") << "{\"schema\": \"cmcm-model\", ";
  try {
    load_model(dir / "badjson");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.kind(), DataErrorKind::kParse);
  }

  auto rewrite = [&](const std::string& sub, const std::string& from, const std::string& to) {
    save_model(model, dir / sub);
    std::ifstream in(dir / sub / "model.json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    text.replace(text.find(from), from.size(), to);
    std::ofstream(dir / sub / "model.json") << text;
  };
  rewrite("version", "\"version\": 1", "\"version\": 2");
  rewrite("schema", "\"cmcm-model\"", "\"other\"");
  for (const char* sub : {"version", "schema"}) {
    try {
      load_model(dir / sub);
      FAIL() << sub;
    } catch (const DataError& e) {
      EXPECT_EQ(e.kind(), DataErrorKind::kSchema) << e.what();
    }
  }
}

TEST(CanonicalColumns, OrderFree) {
  Matrix m(2, 3);
  m << 3, 1, 2, 0, 5, 1;
  Matrix p(2, 3);
  p << 2, 3, 1, 1, 0, 5;
  EXPECT_EQ(canonical_columns(m), canonical_columns(p));
  EXPECT_EQ(content_hash(canonical_columns(m)), content_hash(canonical_columns(p)));
  EXPECT_NE(content_hash(m), content_hash(p));
}

TEST(Method, ParseAndPrint) {
  for (Method m : {Method::kMsm, Method::kCmsm, Method::kMcm, Method::kCmcm}) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_EQ(parse_method("cmcm"), Method::kCmcm);
  EXPECT_THROW(parse_method("pca"), InvalidArgument);
}

}  // namespace
}  // namespace cmcm
