// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

namespace fastdoc {
namespace {

const std::string kData = FASTDOC_DATA_DIR;

Corpus parse(const std::string& jsonl, DomainMode mode) {
  std::istringstream in(jsonl);
  return parse_corpus(in, mode);
}

TEST(Corpus, ParsesSentencesOrText) {
  const auto c = parse(R"({"id":"a","text":"One thing. Another thing!","category":"x"}
{"id":"b","sentences":["Only one."],"category":"y"})",
                       DomainMode::CustomerSupport);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.find("a").sentences.size(), 2u);
  EXPECT_EQ(*c.find("b").category, "y");
}

TEST(Corpus, ReportsLineNumbersAndMissingFields) {
  try {
    parse("{\"id\":\"a\",\"text\":\"x.\",\"category\":\"c\"}\n{not json}\n", DomainMode::CustomerSupport);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse(R"({"id":"a","text":"x."})", DomainMode::CustomerSupport), ValidationError);
  EXPECT_THROW(parse(R"({"id":"a","text":"x."})", DomainMode::Legal), ValidationError);
  EXPECT_THROW(parse("{\"id\":\"a\",\"text\":\"x.\"}\n{\"id\":\"a\",\"text\":\"y.\"}", DomainMode::Derived),
               ValidationError);
  EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl", DomainMode::Derived), IoError);
}

TEST(Corpus, RoundTripsThroughJsonl) {
  const auto c = load_corpus(kData + "/sample_corpus.jsonl", DomainMode::CustomerSupport);
  std::ostringstream out;
  write_corpus(out, c);
  const auto again = parse(out.str(), DomainMode::CustomerSupport);
  ASSERT_EQ(again.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(again[i].id, c[i].id);
    EXPECT_EQ(again[i].sentences, c[i].sentences);
  }
}

TEST(Taxonomy, PadsShortPathsWithTheNullClass) {
  const auto t = Taxonomy::load(kData + "/scientific_taxonomy.txt");
  EXPECT_EQ(t.depth(), 2u);
  EXPECT_EQ(t.class_counts(), (std::vector<std::size_t>{3, 5}));
  const auto full = pad_hierarchy({"Computer Science", "Machine Learning"}, t);
  EXPECT_EQ(full.levels, (std::vector<std::size_t>{0, 0}));
  const auto short_path = pad_hierarchy({"Physics"}, t);
  EXPECT_EQ(short_path.levels, (std::vector<std::size_t>{2, t.null_index(1)}));
  EXPECT_THROW(pad_hierarchy({"Physics", "Machine Learning"}, t), ValidationError);
  EXPECT_THROW(pad_hierarchy({"Biology"}, t), ValidationError);
}

TEST(Taxonomy, WriteParseRoundTrip) {
  const auto t = Taxonomy::load(kData + "/product_taxonomy.txt");
  std::stringstream ss;
  t.write(ss);
  EXPECT_EQ(Taxonomy::parse(ss), t);
  EXPECT_EQ(t.depth(), 4u);
}

TEST(CategoryMapping, FreeTextFindsTheNearestLeaf) {
  const auto t = Taxonomy::load(kData + "/product_taxonomy.txt");
  const auto wv = WordVectors::load(kData + "/word_vectors.txt");
  EXPECT_EQ(map_category_to_hierarchy("stereo equalizer", t, wv),
            (HierarchyPath{"Electronics", "Audio", "Audio Players & Recorders", "Stereo Systems"}));
  EXPECT_EQ(map_category_to_hierarchy("laptops", t, wv), (HierarchyPath{"Electronics", "Computers", "Laptops"}));
  EXPECT_THROW(map_category_to_hierarchy("zzz qqq", t, wv), UnmappableCategory);
}

TEST(Rouge, HandComputedScore) {
  const std::vector<std::string> a{"the", "cat", "sat", "down"}, b{"the", "cat", "lay", "down", "here"};
  const auto s = rouge_l(a, b);
  EXPECT_DOUBLE_EQ(s.precision, 3.0 / 5);
  EXPECT_DOUBLE_EQ(s.recall, 3.0 / 4);
  EXPECT_NEAR(s.f1, 2 * 0.6 * 0.75 / 1.35, 1e-12);
  EXPECT_EQ(rouge_tokens("The  CAT sat"), (std::vector<std::string>{"the", "cat", "sat"}));
}

TEST(Rouge, EmptyInputWarnsAndScoresZero) {
  long before = WarningLog::instance().count();
  auto prev = WarningLog::instance().set_sink([](const std::string&) {});
  EXPECT_EQ(rouge_l(std::vector<std::string>{}, std::vector<std::string>{"a"}).f1, 0.0);
  WarningLog::instance().set_sink(prev);
  EXPECT_EQ(WarningLog::instance().count(), before + 1);
}

TEST(Rouge, DynamicProgrammeMatchesExhaustiveLcs) {
  Rng rng(5);
  for (int c = 0; c < 500; ++c) {
    std::vector<int> a(rng.index(9)), b(rng.index(9));
    for (auto& x : a) x = static_cast<int>(rng.index(3));
    for (auto& x : b) x = static_cast<int>(rng.index(3));
    EXPECT_EQ(lcs_length(a, b), testing::brute_force_lcs(a, b));
  }
}

TEST(MetadataMiner, CustomerSupportPairsByCategory) {
  const auto c = load_corpus(kData + "/sample_corpus.jsonl", DomainMode::CustomerSupport);
  const auto t = mine_triplets_metadata(c, 100, 3);
  EXPECT_EQ(testing::check_metadata_triplets(c, t, 100), "");
  EXPECT_EQ(t, mine_triplets_metadata(c, 100, 3));
  EXPECT_NE(t, mine_triplets_metadata(c, 100, 4));
}

TEST(MetadataMiner, ScientificAndLegalModesEmitSwappedCopies) {
  Rng rng(12);
  for (auto mode : {DomainMode::Scientific, DomainMode::Legal}) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto c = testing::random_corpus(rng, mode);
      try {
        const auto t = mine_triplets_metadata(c, 20, trial);
        EXPECT_EQ(testing::check_metadata_triplets(c, t, 20), "") << to_string(mode);
      } catch (const NoPositiveAvailable&) {
      } catch (const NoNegativeAvailable&) {
      }
    }
  }
}

TEST(MetadataMiner, ExplainsWhyNothingCanBeMined) {
  EXPECT_THROW(mine_triplets_metadata(parse("{\"id\":\"a\",\"text\":\"x.\",\"category\":\"c\"}\n"
                                            "{\"id\":\"b\",\"text\":\"y.\",\"category\":\"c\"}",
                                            DomainMode::CustomerSupport),
                                      5, 0),
               NoNegativeAvailable);
  EXPECT_THROW(mine_triplets_metadata(parse("{\"id\":\"a\",\"text\":\"x.\",\"category\":\"c\"}\n"
                                            "{\"id\":\"b\",\"text\":\"y.\",\"category\":\"d\"}",
                                            DomainMode::CustomerSupport),
                                      5, 0),
               NoPositiveAvailable);
  EXPECT_THROW(mine_triplets_metadata(Corpus(DomainMode::Derived), 5, 0), ConfigError);
}

TEST(RougeMiner, RespectsThresholds) {
  const auto c = load_corpus(kData + "/sample_corpus.jsonl", DomainMode::Derived);
  const RougeMiningConfig cfg{0.2, 0.15, 512};
  const auto t = mine_triplets_rouge(c, 50, 1, cfg);
  EXPECT_EQ(testing::check_rouge_triplets(c, t, 50, cfg), "");
  EXPECT_THROW(mine_triplets_rouge(c, 5, 1, {0.99, 0.0, 512}), MiningExhausted);
}

TEST(RougeMiner, ParallelScoringMatchesSerial) {
  const auto c = load_corpus(kData + "/sample_corpus.jsonl", DomainMode::Derived);
  EXPECT_EQ(pairwise_rouge_f1(c, 512, 1), pairwise_rouge_f1(c, 512, 4));
}

TEST(Triplets, JsonlRoundTrip) {
  const std::vector<Triplet> t{{"a", "b", "c"}, {"b", "a", "c"}};
  std::stringstream ss;
  write_triplets(ss, t);
  EXPECT_EQ(parse_triplets(ss), t);
  std::istringstream bad("{\"anchor\":\"a\"}\n");
  EXPECT_THROW(parse_triplets(bad), ParseError);
}

TEST(DerivedTaxonomy, EveryDocumentGetsAConsistentPath) {
  SyntheticCorpusSpec spec;
  spec.docs_per_category = 8;
  const auto sc = make_synthetic_corpus(spec, DomainMode::Derived);
  const auto d = derive_taxonomy(sc.corpus, 2, 3, 1);
  EXPECT_GE(d.taxonomy.depth(), 1u);
  EXPECT_LE(d.taxonomy.depth(), 2u);
  for (const auto& doc : sc.corpus.documents()) {
    const auto& p = d.paths.at(doc.id);
    EXPECT_FALSE(p.empty());
    EXPECT_NO_THROW(pad_hierarchy(p, d.taxonomy));
  }
  const auto again = derive_taxonomy(sc.corpus, 2, 3, 1);
  EXPECT_EQ(again.paths, d.paths);
  const auto deep = derive_taxonomy(sc.corpus, 15, 2, 1);
  EXPECT_LE(deep.taxonomy.depth(), 15u);
  EXPECT_THROW(derive_taxonomy(sc.corpus, 0, 2, 1), ConfigError);
}

TEST(DerivedTaxonomy, TopLevelRecoversLexicalCategories) {
  const auto sc = make_synthetic_corpus({}, DomainMode::Derived);
  const auto d = derive_taxonomy(sc.corpus, 1, 3, 2);
  std::map<std::string, std::set<std::size_t>> cats_per_cluster;
  for (std::size_t i = 0; i < sc.corpus.size(); ++i)
    cats_per_cluster[d.paths.at(sc.corpus[i].id).front()].insert(sc.category_of[i]);
  EXPECT_EQ(cats_per_cluster.size(), 3u);
  for (const auto& [label, cats] : cats_per_cluster) EXPECT_EQ(cats.size(), 1u) << label;
}

TEST(TfIdf, CosineOfIdenticalDocumentsIsOne) {
  const TfIdf t({{"a", "b"}, {"b", "c"}, {"a", "a"}});
  EXPECT_NEAR(sparse_cosine(t.transform({"a", "b"}), t.transform({"a", "b"})), 1.0, 1e-12);
  EXPECT_EQ(sparse_cosine(t.transform({"a"}), t.transform({"c"})), 0.0);
}

TEST(Synthetic, CorpusHasTheRequestedShape) {
  const auto sc = make_synthetic_corpus({}, DomainMode::CustomerSupport);
  EXPECT_EQ(sc.corpus.size(), 60u);
  EXPECT_EQ(sc.taxonomy.class_counts(), (std::vector<std::size_t>{3, 6}));
  for (const auto& d : sc.corpus.documents()) {
    EXPECT_EQ(d.sentences.size(), 5u);
    EXPECT_TRUE(d.category.has_value());
  }
}

}  // namespace
}  // namespace fastdoc
