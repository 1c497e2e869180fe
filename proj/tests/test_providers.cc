// Copyright 2026 The ragval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "ragval/common/hash.h"
#include "ragval/common/io.h"
#include "ragval/providers/classifier.h"
#include "ragval/providers/embedding.h"
#include "ragval/providers/generator.h"
#include "ragval/providers/nli.h"
#include "test_support.h"

namespace ragval::providers {
namespace {

using nlohmann::json;
using ragval::testing::cos_oracle;
using ragval::testing::FakeTransport;

TEST(MockEmbedder, DeterministicUnitVectors) {
  MockEmbedder a("m", 32, 1), b("m", 32, 1), c("m", 32, 2);
  const auto va = a.embed_one("Mortgage rates rise");
  EXPECT_EQ(va.values, b.embed_one("Mortgage rates rise").values);
  EXPECT_NE(va.values, c.embed_one("Mortgage rates rise").values);
  double norm = 0;
  for (double x : va.values) norm += x * x;
  EXPECT_NEAR(norm, 1.0, 1e-12);
  EXPECT_EQ(va.values.size(), 32u);
}

TEST(MockEmbedder, SharedVocabularyIsCloser) {
  MockEmbedder e("m", 64, 3);
  const auto q = e.embed_one("savings account interest rate").values;
  const auto near = e.embed_one("the interest rate on a savings account").values;
  const auto far = e.embed_one("galaxy telescope orbit comet").values;
  EXPECT_GT(cos_oracle(q, near), 0.9);
  EXPECT_LT(cos_oracle(q, far), cos_oracle(q, near) - 0.5);
}

json echo_vectors(const json& body, std::size_t dim) {
  json vectors = json::array();
  for (const auto& t : body.at("inputs")) {
    std::vector<double> v(dim, 0.0);
    v[t.get<std::string>().size() % dim] = 1.0;
    vectors.push_back(v);
  }
  return {{"vectors", vectors}};
}

TEST(CachedEmbedder, ForwardsOnlyMisses) {
  ProviderConfig cfg;
  cfg.endpoint = "http://localhost:1/embed";
  cfg.dimension = 8;
  cfg.batch_size = 1000;
  cfg.retry.count = 0;
  auto transport = std::make_shared<FakeTransport>([](const json& b) { return echo_vectors(b, 8); });
  auto cache = std::make_shared<EmbeddingCache>();
  CachedEmbedder embedder(std::make_shared<HttpEmbedder>(cfg, transport), cache);

  std::vector<std::string> first, all;
  for (int i = 0; i < 100; ++i) all.push_back("text " + std::to_string(i));
  first.assign(all.begin(), all.begin() + 40);
  embedder.embed(first);
  ASSERT_EQ(transport->calls, 1);
  EXPECT_EQ(cache->size(), 40u);

  const auto out = embedder.embed(all);
  ASSERT_EQ(transport->calls, 2);
  EXPECT_EQ(transport->requests.back().at("inputs").size(), 60u);
  EXPECT_EQ(out.size(), 100u);
  EXPECT_EQ(cache->size(), 100u);
  embedder.embed(all);
  EXPECT_EQ(transport->calls, 2);
}

TEST(CachedEmbedder, DuplicateMissesAreFetchedOnce) {
  auto inner = std::make_shared<MockEmbedder>("m", 8, 1);
  ProviderConfig cfg;
  cfg.endpoint = "http://localhost:1/embed";
  cfg.dimension = 8;
  auto transport = std::make_shared<FakeTransport>([](const json& b) { return echo_vectors(b, 8); });
  CachedEmbedder embedder(std::make_shared<HttpEmbedder>(cfg, transport),
                          std::make_shared<EmbeddingCache>());
  const auto out = embedder.embed({"a", "b", "a", "a"});
  EXPECT_EQ(transport->requests.at(0).at("inputs").size(), 2u);
  EXPECT_EQ(out[0].values, out[2].values);
}

TEST(EmbeddingCache, PersistsAndSkipsCorruptLines) {
  const auto path = std::filesystem::temp_directory_path() / "ragval_cache_test.jsonl";
  std::filesystem::remove(path);
  {
    EmbeddingCache cache(path);
    cache.insert("m", sha256_hex("x"), {1.0, 2.0});
    cache.insert("m", sha256_hex("y"), {3.0, 4.0});
  }
  {
    std::string text = io::read_file(path);
    io::write_file(path, text + "{not json\n");
  }
  EmbeddingCache reloaded(path);
  EXPECT_EQ(reloaded.size(), 2u);
  EXPECT_EQ(reloaded.skipped_lines(), 1u);
  EXPECT_EQ(*reloaded.lookup("m", sha256_hex("y")), (std::vector<double>{3.0, 4.0}));
  EXPECT_FALSE(reloaded.lookup("other", sha256_hex("y")).has_value());
  std::filesystem::remove(path);
}

TEST(HttpEmbedder, BatchesAndValidatesDimension) {
  ProviderConfig cfg;
  cfg.endpoint = "http://localhost:1/embed";
  cfg.dimension = 4;
  cfg.batch_size = 3;
  cfg.max_in_flight = 2;
  auto ok = std::make_shared<FakeTransport>([](const json& b) { return echo_vectors(b, 4); });
  HttpEmbedder e(cfg, ok);
  EXPECT_EQ(e.embed({"a", "b", "c", "d", "e", "f", "g"}).size(), 7u);
  EXPECT_EQ(ok->calls, 3);

  auto wrong = std::make_shared<FakeTransport>([](const json& b) { return echo_vectors(b, 5); });
  HttpEmbedder bad(cfg, wrong);
  EXPECT_THROW(bad.embed({"a"}), InvalidArgument);
}

TEST(HttpEmbedder, RetriesThenReportsIndices) {
  ProviderConfig cfg;
  cfg.endpoint = "http://localhost:1/embed";
  cfg.dimension = 4;
  cfg.batch_size = 2;
  cfg.max_in_flight = 1;
  cfg.retry.count = 2;
  cfg.retry.backoff = std::chrono::milliseconds(0);
  auto failing = std::make_shared<FakeTransport>([](const json& b) -> json {
    if (b.at("inputs").at(0) == "c") throw ProviderError("boom");
    return echo_vectors(b, 4);
  });
  HttpEmbedder e(cfg, failing);
  try {
    e.embed({"a", "b", "c", "d"});
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& err) {
    EXPECT_EQ(err.indices(), (std::vector<std::size_t>{2, 3}));
  }
  EXPECT_EQ(failing->calls, 1 + 3);  // first batch, then 1 + 2 retries
}

TEST(EmbedBatch, RejectsEmptyText) {
  MockEmbedder e("m", 8, 1);
  EXPECT_THROW(embed_batch(e, {"ok", ""}), InvalidArgument);
}

TEST(MockNli, LogitFollowsSimilarity) {
  auto emb = std::make_shared<MockEmbedder>("m", 64, 1);
  MockNli nli(emb);
  const std::string p = "The card fee is waived for students";
  const std::string h = "Students pay no card fee";
  const auto j = nli_score(nli, p, h);
  const double c = cos_oracle(emb->embed_one(p).values, emb->embed_one(h).values);
  EXPECT_NEAR(j.entailment_logit, MockNli::kGain * c + MockNli::kOffset, 1e-12);
  EXPECT_DOUBLE_EQ(j.scale, MockNli::kScale);
  EXPECT_NEAR(j.probabilities[0] + j.probabilities[1] + j.probabilities[2], 1.0, 1e-12);
  EXPECT_THROW(nli_score(nli, "", h), InvalidArgument);
}

TEST(NliProbabilities, SoftmaxOfSymmetricLogits) {
  const auto p = nli_probabilities(1.5);
  const double z = std::exp(1.5) + 1.0 + std::exp(-1.5);
  EXPECT_NEAR(p[0], std::exp(1.5) / z, 1e-15);
  EXPECT_NEAR(p[1], 1.0 / z, 1e-15);
  EXPECT_NEAR(p[2], std::exp(-1.5) / z, 1e-15);
}

TEST(HttpNli, ProbabilitiesMapToLogOdds) {
  ProviderConfig cfg;
  cfg.endpoint = "http://localhost:1/nli";
  auto t = std::make_shared<FakeTransport>(
      [](const json&) { return json{{"probabilities", {0.8, 0.15, 0.05}}}; });
  HttpNli nli(cfg, t);
  const auto j = nli_score(nli, "p", "h");
  EXPECT_NEAR(j.entailment_logit, std::log(0.8 / 0.2), 1e-12);
  EXPECT_DOUBLE_EQ(j.scale, 1.0);
  EXPECT_TRUE(j.reconstructed);
}

TEST(MockClassifier, LexiconRatios) {
  Lexicons lex;
  lex.toxic = Lexicon::parse("idiot\n# comment\n\nstupid\n");
  lex.positive = Lexicon::parse("great\n");
  lex.negative = Lexicon::parse("bad\nawful\n");
  MockClassifier c(lex);
  EXPECT_DOUBLE_EQ(classify(c, "You stupid idiot, go away", ClassifyTask::kToxicity), 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(classify(c, "great great bad day", ClassifyTask::kSentiment), 1.0 / 4.0);
  EXPECT_DOUBLE_EQ(classify(c, "...", ClassifyTask::kSentiment), 0.0);
}

TEST(MockClassifier, DefaultsMatchShippedFiles) {
  const auto dir = std::filesystem::path(RAGVAL_SOURCE_DIR) / "data" / "lexicons";
  const Lexicons shipped = Lexicons::load(dir);
  const Lexicons builtin = Lexicons::defaults();
  EXPECT_EQ(shipped.toxic.terms(), builtin.toxic.terms());
  EXPECT_EQ(shipped.positive.terms(), builtin.positive.terms());
  EXPECT_EQ(shipped.negative.terms(), builtin.negative.terms());
}

TEST(HttpClassifier, OutOfRangeScoreRejected) {
  ProviderConfig cfg;
  cfg.endpoint = "http://localhost:1/classify";
  auto t = std::make_shared<FakeTransport>([](const json&) { return json{{"score", 1.5}}; });
  HttpClassifier c(cfg, t);
  EXPECT_THROW(classify(c, "text", ClassifyTask::kToxicity), Error);
}

TEST(MockGenerator, RealizesMarkers) {
  MockGenerator g;
  EXPECT_EQ(generate(g, "Write a question.\nYes/no about: The fee is $5."), "Is the fee $5?");
  EXPECT_EQ(generate(g, "Q about: Rates rose in 2024."),
            "What does the following state: Rates rose in 2024?");
  EXPECT_EQ(to_yes_no_question("Most holders earn points."),
            "Is it true that most holders earn points?");
  // A leading word that may be a name keeps its case.
  EXPECT_EQ(to_yes_no_question("Card Services answers calls."),
            "Is it true that Card Services answers calls?");
}

TEST(Generator, EmptyResponseIsProviderError) {
  ProviderConfig cfg;
  cfg.endpoint = "http://localhost:1/gen";
  cfg.retry.count = 0;
  auto t = std::make_shared<FakeTransport>([](const json&) { return json{{"text", "  "}}; });
  HttpGenerator g(cfg, t);
  EXPECT_THROW(generate(g, "prompt"), ProviderError);
}

}  // namespace
}  // namespace ragval::providers
