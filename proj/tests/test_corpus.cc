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

#include <filesystem>

#include "ragval/common/error.h"
#include "ragval/common/io.h"
#include "ragval/common/random.h"
#include "ragval/corpus/corpus.h"

namespace ragval::corpus {
namespace {

std::vector<std::string> texts(const std::vector<Sentence>& s) {
  std::vector<std::string> out;
  for (const auto& x : s) out.push_back(x.text);
  return out;
}

TEST(Segment, SplitsOnTerminalPunctuation) {
  EXPECT_EQ(texts(segment_sentences("The fee is $5. Is it waived? Yes!")),
            (std::vector<std::string>{"The fee is $5.", "Is it waived?", "Yes!"}));
}

TEST(Segment, AbbreviationsDoNotEndSentences) {
  EXPECT_EQ(texts(segment_sentences("Dr. Smith met Mr. Jones at 5 p.m. on Main St. today.")).size(),
            1u);
  EXPECT_EQ(texts(segment_sentences("See Fig. 2 for details. Then stop.")),
            (std::vector<std::string>{"See Fig. 2 for details.", "Then stop."}));
}

TEST(Segment, ClosersStayWithTheSentence) {
  EXPECT_EQ(texts(segment_sentences("He said \"stop.\" Then left.")),
            (std::vector<std::string>{"He said \"stop.\"", "Then left."}));
}

TEST(Segment, BlankLineEndsAnUnterminatedSentence) {
  EXPECT_EQ(texts(segment_sentences("Heading\n\nBody one. Body two.")),
            (std::vector<std::string>{"Heading", "Body one.", "Body two."}));
}

// Property: join_sentences inverts segment_sentences on arbitrary mixes.
TEST(Segment, JoinInvertsSegment) {
  const std::vector<std::string> pieces = {"Alpha beta.", " ", "  ", "\n", "\n\n", "Why?",
                                           "Dr. No", "ok!", "3.5 percent", "end"};
  Rng rng(5);
  for (int t = 0; t < 300; ++t) {
    std::string s;
    const auto len = rng.index(12);
    for (std::size_t i = 0; i < len; ++i) s += pieces[rng.index(pieces.size())];
    EXPECT_EQ(join_sentences(segment_sentences(s)), s) << "input: [" << s << "]";
  }
}

TEST(Markdown, StripsMarkupKeepsText) {
  const std::string md =
      "# Title\n\nSome **bold** and _it_ text with a [link](http://x).\n\n- item one\n1. first\n"
      "```\ncode\n```\n";
  const std::string flat = flatten_markdown(md);
  EXPECT_EQ(flat.find('#'), std::string::npos);
  EXPECT_EQ(flat.find("**"), std::string::npos);
  EXPECT_NE(flat.find("Some bold and it text with a link."), std::string::npos);
  EXPECT_NE(flat.find("item one"), std::string::npos);
  EXPECT_NE(flat.find("first"), std::string::npos);
  EXPECT_EQ(texts(segment_sentences(flat)).front(), "Title");
  EXPECT_EQ(flatten_markdown("Set max_tokens to _120_."), "Set max_tokens to 120.");
}

std::vector<Sentence> numbered(std::size_t n, std::size_t words = 3) {
  std::vector<Sentence> s;
  for (std::size_t i = 0; i < n; ++i) {
    Sentence x;
    x.index = i;
    for (std::size_t w = 0; w + 1 < words; ++w) x.text += "w ";
    x.text += "s" + std::to_string(i) + ".";
    s.push_back(x);
  }
  return s;
}

TEST(Chunk, SlidingWindowWithOverlap) {
  ChunkingConfig c;
  c.max_sentences = 3;
  c.overlap = 1;
  const auto chunks = chunk_document("d", numbered(7), c);
  // Windows [0,3) [2,5) [4,7).
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[0].sentences.front().index, 0u);
  EXPECT_EQ(chunks[1].sentences.front().index, 2u);
  EXPECT_EQ(chunks[2].sentences.front().index, 4u);
  EXPECT_EQ(chunks[2].sentences.back().index, 6u);
  EXPECT_EQ(chunks[1].chunk_id, "d#1");
  EXPECT_EQ(chunks[0].token_estimate, 9u);
}

TEST(Chunk, TokenLimitShortensWindows) {
  ChunkingConfig c;
  c.max_sentences = 10;
  c.max_tokens = 7;
  c.overlap = 0;
  const auto chunks = chunk_document("d", numbered(5, 3), c);
  ASSERT_EQ(chunks.size(), 3u);  // 2 + 2 + 1 sentences
  for (const auto& ch : chunks) EXPECT_LE(ch.token_estimate, 7u);
  c.max_tokens = 2;
  EXPECT_THROW(chunk_document("d", numbered(2, 3), c), InvalidArgument);
}

// Property: every sentence lands in some chunk, in order, for any valid config.
TEST(Chunk, CoversEverySentence) {
  Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    ChunkingConfig c;
    c.max_sentences = 1 + rng.index(6);
    c.overlap = rng.index(c.max_sentences);
    c.max_tokens = 3 + rng.index(20);
    const std::size_t n = 1 + rng.index(30);
    const auto chunks = chunk_document("d", numbered(n), c);
    std::vector<bool> seen(n, false);
    std::size_t prev_start = 0;
    for (std::size_t k = 0; k < chunks.size(); ++k) {
      const auto& ch = chunks[k];
      ASSERT_FALSE(ch.sentences.empty());
      ASSERT_LE(ch.sentences.size(), c.max_sentences);
      if (k > 0) ASSERT_GT(ch.sentences.front().index, prev_start);
      prev_start = ch.sentences.front().index;
      for (const auto& s : ch.sentences) seen[s.index] = true;
    }
    for (bool b : seen) ASSERT_TRUE(b);
  }
}

TEST(Chunk, OverlapMustBeBelowWindow) {
  ChunkingConfig c;
  c.max_sentences = 2;
  c.overlap = 2;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Chunk, TextReSegmentsToTheSameSentences) {
  const auto sents = segment_sentences("Heading\n\nFirst fact. Second fact.");
  ChunkingConfig c;
  c.max_sentences = 5;
  const auto chunks = chunk_document("d", sents, c);
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_EQ(texts(segment_sentences(chunks[0].text())), texts(sents));
}

class IngestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "ragval_ingest_test";
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_ / "sub");
    io::write_file(dir_ / "a.md", "# A\n\nOne fact. Two facts.\n");
    io::write_file(dir_ / "sub" / "b.txt", "Three. Four. Five.\n");
    io::write_file(dir_ / "empty.txt", "");
    io::write_file(dir_ / "skip.pdf", "binary");
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(IngestTest, WalksSortsAndRecordsDiagnostics) {
  ChunkingConfig c;
  c.max_sentences = 2;
  c.overlap = 0;
  const Corpus corpus = ingest({dir_}, c);
  EXPECT_EQ(corpus.documents().size(), 2u);
  EXPECT_EQ(corpus.chunks().size(), 4u);  // [A, One] [Two] + [Three, Four] [Five]
  ASSERT_EQ(corpus.diagnostics().size(), 1u);
  EXPECT_NE(corpus.diagnostics()[0].path.find("empty.txt"), std::string::npos);
  EXPECT_EQ(corpus.documents()[0].doc_id, document_id(io::read_file(dir_ / "a.md")));
}

TEST_F(IngestTest, JsonlRoundTrip) {
  const Corpus corpus = ingest({dir_}, ChunkingConfig{});
  const Corpus back = Corpus::from_jsonl(corpus.to_jsonl());
  EXPECT_EQ(back.to_jsonl(), corpus.to_jsonl());
  ASSERT_EQ(back.chunks().size(), corpus.chunks().size());
  for (const auto& ch : corpus.chunks()) {
    const Chunk* found = back.find_chunk(ch.chunk_id);
    ASSERT_NE(found, nullptr);
    EXPECT_EQ(found->text(), ch.text());
  }
  EXPECT_EQ(back.find_chunk("nope"), nullptr);
}

TEST_F(IngestTest, NothingReadableIsAnError) {
  EXPECT_THROW(ingest({dir_ / "empty.txt"}, ChunkingConfig{}), IoError);
  EXPECT_THROW(ingest({dir_ / "missing"}, ChunkingConfig{}), IoError);
}

}  // namespace
}  // namespace ragval::corpus
