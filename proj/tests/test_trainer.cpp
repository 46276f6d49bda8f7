// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

#include "support.hpp"

namespace fastdoc {
namespace {

using testing::tiny_config;

struct Fixture {
  SyntheticCorpus sc;
  std::vector<Triplet> triplets;
  LabelMap labels;
  ModelConfig cfg;

  explicit Fixture(std::size_t docs_per_category = 6, std::size_t count = 24) {
    SyntheticCorpusSpec spec;
    spec.docs_per_category = docs_per_category;
    spec.sentences_per_doc = 3;
    sc = make_synthetic_corpus(spec, DomainMode::CustomerSupport);
    triplets = mine_triplets_metadata(sc.corpus, count, 1);
    labels = hierarchy_labels(sc.corpus, sc.taxonomy);
    cfg = tiny_config(sc.taxonomy.class_counts());
  }

  TrainConfig train(std::size_t batch = 8) const {
    TrainConfig tc;
    tc.batch_size = batch;
    tc.initial_lr = 1e-3;
    tc.epochs = 2;
    tc.drift_interval = 2;
    return tc;
  }
};

TEST(Schedule, StepCountAndHalfwayRate) {
  EXPECT_EQ(pretrain_steps(2000, 32, 1), 63);
  EXPECT_EQ(pretrain_steps(2000, 32, 3), 189);
  EXPECT_EQ(pretrain_steps(64, 32, 1), 2);
  EXPECT_NEAR(linear_lr(5e-5, 31, 63), 2.5e-5, 1e-20);
}

TEST(TrainConfig, RejectsInvalidValues) {
  TrainConfig tc;
  tc.batch_size = 0;
  EXPECT_THROW(tc.validate(), ConfigError);
  tc = {};
  tc.initial_lr = -1;
  EXPECT_THROW(tc.validate(), ConfigError);
  tc = {};
  tc.max_grad_norm = 0.0;
  EXPECT_THROW(tc.validate(), ConfigError);
  EXPECT_THROW(parse_loss_mode("mse"), ConfigError);
  EXPECT_EQ(parse_loss_mode("hier"), LossMode::Hier);
}

TEST(Pretrain, LogsOneRecordPerStepWithLinearDecay) {
  Fixture f;
  FastDocModel<float> m(f.cfg);
  const auto tc = f.train();
  const auto r = pretrain(m, f.sc.corpus, f.triplets, f.labels, tc);
  ASSERT_EQ(r.steps, 6);
  ASSERT_EQ(r.curve.size(), 6u);
  for (std::size_t i = 0; i < r.curve.size(); ++i) {
    EXPECT_EQ(r.curve[i].step, static_cast<std::int64_t>(i));
    EXPECT_DOUBLE_EQ(r.curve[i].lr, linear_lr(1e-3, static_cast<std::int64_t>(i), 6));
    EXPECT_NEAR(r.curve[i].loss, r.curve[i].triplet + r.curve[i].hier, 1e-5);
  }
  EXPECT_EQ(r.curve.back().lr, 0.0);
  EXPECT_EQ(r.optimizer.step, 6);
  EXPECT_EQ(r.drift.back().step, 6);
  EXPECT_EQ(r.drift.size(), 3u);
}

TEST(Pretrain, FrozenGroupsStayBitIdentical) {
  Fixture f;
  FastDocModel<float> m(f.cfg);
  const auto before = snapshot(m);
  const auto r = pretrain(m, f.sc.corpus, f.triplets, f.labels, f.train());
  const auto after = snapshot(m);
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (before[i].group.rfind("lower.", 0) == 0 || before[i].group.rfind("embeddings.", 0) == 0) {
      EXPECT_EQ(before[i].values, after[i].values) << before[i].name;
    }
  }
  EXPECT_EQ(r.drift.back().at("lower.featurizer").relative_change, 0.0);
  EXPECT_GT(r.drift.back().at("upper.attn.query").relative_change, 0.0);
  EXPECT_TRUE(r.drift.back().at("heads.level1").zero_base);
}

TEST(Pretrain, TripletOnlyLeavesHeadsAlone) {
  Fixture f;
  FastDocModel<float> m(f.cfg);
  auto tc = f.train();
  tc.loss = LossMode::Triplet;
  const auto before = snapshot(m);
  const auto r = pretrain(m, f.sc.corpus, f.triplets, {}, tc);
  const auto after = snapshot(m);
  for (std::size_t i = 0; i < before.size(); ++i)
    if (before[i].group.rfind("heads.", 0) == 0) {
      EXPECT_EQ(before[i].values, after[i].values);
    }
  for (const auto& rec : r.curve) EXPECT_EQ(rec.hier, 0.0);
  // Trainability flags are restored afterwards.
  for (const auto& g : m.param_groups())
    if (g.name.rfind("heads.", 0) == 0) {
      EXPECT_FALSE(g.frozen);
    }
}

TEST(Pretrain, ValidatesInputsBeforeTraining) {
  Fixture f;
  FastDocModel<float> m(f.cfg);
  const auto before = snapshot(m);
  auto bad = f.triplets;
  bad.back().negative_id = "missing";
  EXPECT_THROW(pretrain(m, f.sc.corpus, bad, f.labels, f.train()), ValidationError);
  EXPECT_THROW(pretrain(m, f.sc.corpus, f.triplets, {}, f.train()), ValidationError);
  EXPECT_THROW(pretrain(m, f.sc.corpus, {}, f.labels, f.train()), ValidationError);
  EXPECT_EQ(snapshot(m), before);
}

TEST(Pretrain, IsDeterministic) {
  Fixture f;
  FastDocModel<float> a(f.cfg), b(f.cfg);
  pretrain(a, f.sc.corpus, f.triplets, f.labels, f.train());
  pretrain(b, f.sc.corpus, f.triplets, f.labels, f.train());
  EXPECT_EQ(serialize_checkpoint(make_checkpoint(a)), serialize_checkpoint(make_checkpoint(b)));
}

TEST(Pretrain, ClippingKeepsTrainingFinite) {
  Fixture f;
  FastDocModel<float> m(f.cfg);
  auto tc = f.train();
  tc.max_grad_norm = 0.5;
  tc.initial_lr = 0.05;
  for (const auto& rec : pretrain(m, f.sc.corpus, f.triplets, f.labels, tc).curve) EXPECT_TRUE(std::isfinite(rec.loss));
}

TEST(Mlm, TrainsUpperEncoderOnly) {
  Fixture f;
  FastDocModel<float> m(f.cfg);
  const auto before = snapshot(m);
  const auto r = mlm_pretrain(m, f.sc.corpus, 4, f.train());
  EXPECT_EQ(r.steps, 4);
  EXPECT_EQ(r.curve.size(), 4u);
  const auto& d = r.drift.back();
  EXPECT_EQ(d.at("embeddings.token").relative_change, 0.0);
  EXPECT_EQ(d.at("lower.featurizer").relative_change, 0.0);
  EXPECT_GT(d.at("upper.ffn.output").relative_change, 0.0);
  EXPECT_THROW(d.at("mlm.head"), IndexError);
  const auto after = snapshot(m);
  for (std::size_t i = 0; i < before.size(); ++i)
    if (before[i].group.rfind("heads.", 0) == 0) {
      EXPECT_EQ(before[i].values, after[i].values);
    }
}

TEST(Drift, UniformScalingGivesTheScaleFactor) {
  FastDocModel<float> m(tiny_config());
  const auto before = snapshot(m);
  auto after = before;
  for (auto& t : after)
    for (auto& v : t.values) v = static_cast<float>(v * 1.01);
  const auto r = track_drift(before, after);
  for (const auto& g : r.groups) {
    if (g.zero_base) {
      EXPECT_EQ(g.relative_change, 0.0);
    } else {
      EXPECT_NEAR(g.relative_change, 0.01, 1e-5) << g.group;
    }
  }
  EXPECT_TRUE(r.at("heads.level1").zero_base);
  EXPECT_TRUE(r.at("lower.featurizer").frozen);
}

TEST(Drift, RejectsMismatchedSnapshots) {
  FastDocModel<float> m(tiny_config());
  auto before = snapshot(m);
  auto after = before;
  after.pop_back();
  EXPECT_THROW(track_drift(before, after), ValidationError);
  const auto a = make_checkpoint(m);
  FastDocModel<float> other(tiny_config({5}));
  EXPECT_THROW(track_drift(a, make_checkpoint(other)), ValidationError);
}

class CheckpointTest : public ::testing::Test {
 protected:
  CheckpointTest() : f(4, 12), model(f.cfg), dir("ckpt") {
    auto tc = f.train();
    tc.epochs = 1;
    result = pretrain(model, f.sc.corpus, f.triplets, f.labels, tc);
  }
  Fixture f;
  FastDocModel<float> model;
  PretrainResult<float> result;
  testing::TempDir dir;
};

TEST_F(CheckpointTest, RoundTripIsByteIdentical) {
  const std::string path = dir.file("m.ckpt");
  const auto digest = save_checkpoint(model, &result.optimizer, path, {{"note", "x"}});
  const auto loaded = load_checkpoint(path);
  EXPECT_EQ(loaded.digest, digest);
  EXPECT_EQ(loaded.config["note"], "x");
  ASSERT_TRUE(loaded.optimizer.has_value());
  EXPECT_EQ(loaded.optimizer->step, result.optimizer.step);
  EXPECT_EQ(loaded.optimizer->first_moment, result.optimizer.first_moment);
  EXPECT_EQ(serialize_checkpoint(loaded), read_file(path));
  const auto restored = model_from_checkpoint(loaded);
  EXPECT_EQ(snapshot(restored), snapshot(model));
  const auto& doc = f.sc.corpus[0].sentences;
  EXPECT_EQ(restored.encode_document(doc).values(), model.encode_document(doc).values());
}

TEST_F(CheckpointTest, DetectsTruncationAndCorruption) {
  const std::string bytes = serialize_checkpoint(make_checkpoint(model));
  for (std::size_t cut : {std::size_t{4}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(parse_checkpoint(std::string_view(bytes).substr(0, cut)), CorruptionError) << cut;
  }
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  EXPECT_THROW(parse_checkpoint(flipped), CorruptionError);
  std::string magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(parse_checkpoint(magic), CorruptionError);
  EXPECT_THROW(parse_checkpoint(bytes + "extra"), CorruptionError);
}

TEST_F(CheckpointTest, RejectsOtherFormatVersions) {
  std::string bytes = serialize_checkpoint(make_checkpoint(model));
  const std::uint32_t v = kCheckpointVersion + 1;
  std::memcpy(bytes.data() + kCheckpointMagic.size(), &v, sizeof v);
  EXPECT_THROW(parse_checkpoint(bytes), UnsupportedVersionError);
}

TEST_F(CheckpointTest, RejectsATamperedLowerEncoder) {
  auto c = make_checkpoint(model);
  for (auto& t : c.tensors)
    if (t.group == "lower.featurizer") {
      t.values[0] += 1.0f;
      break;
    }
  EXPECT_THROW(model_from_checkpoint(parse_checkpoint(serialize_checkpoint(c))), CorruptionError);
}

TEST_F(CheckpointTest, WriteFailuresLeaveNothingBehind) {
  EXPECT_THROW(save_checkpoint(model, nullptr, dir.file("no/such/dir/m.ckpt")), IoError);
  EXPECT_THROW(load_checkpoint(dir.file("absent.ckpt")), IoError);
  EXPECT_FALSE(std::filesystem::exists(dir.file("no")));
}

TEST(Logs, LossAndDriftLogsAreJsonLines) {
  Fixture f(4, 8);
  FastDocModel<float> m(f.cfg);
  const auto r = pretrain(m, f.sc.corpus, f.triplets, f.labels, f.train(4));
  std::stringstream loss, drift;
  write_loss_log(loss, r.curve);
  write_drift_log(drift, r.drift);
  std::string line;
  std::size_t n = 0;
  while (std::getline(loss, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("loss"));
    ++n;
  }
  EXPECT_EQ(n, r.curve.size());
  std::getline(drift, line);
  EXPECT_TRUE(nlohmann::json::parse(line).contains("groups"));
}

}  // namespace
}  // namespace fastdoc
