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

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ragval::corpus {

// One segmented sentence. `lead` holds whitespace before the text (only ever
// non-empty on a parent's first sentence) and `trail` the whitespace up to the
// next sentence, so lead + text + trail over all sentences is the parent text.
struct Sentence {
  std::size_t index = 0;
  std::string text;
  std::string lead;
  std::string trail;
};

struct Document {
  std::string doc_id;
  std::string source_path;
  std::string text;
  std::map<std::string, std::string> metadata;
};

struct Chunk {
  std::string chunk_id;  // "<doc_id>#<ordinal>"
  std::string doc_id;
  std::size_t ordinal = 0;
  std::vector<Sentence> sentences;
  std::size_t token_estimate = 0;

  // Sentence texts joined by single spaces; a blank line follows an
  // unterminated sentence (a heading) so the text re-segments the same way.
  std::string text() const;
};

struct ChunkingConfig {
  std::size_t max_sentences = 8;
  std::size_t max_tokens = 512;
  std::size_t overlap = 1;

  // Throws InvalidArgument.
  void validate() const;
};

struct FileDiagnostic {
  std::string path;
  std::string message;
};

class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Document> documents, std::vector<Chunk> chunks,
         std::vector<FileDiagnostic> diagnostics);

  const std::vector<Document>& documents() const { return documents_; }
  const std::vector<Chunk>& chunks() const { return chunks_; }
  const std::vector<FileDiagnostic>& diagnostics() const { return diagnostics_; }

  // nullptr when absent.
  const Chunk* find_chunk(std::string_view chunk_id) const;

  // One chunk per line: {chunk_id, doc_id, source, sentences[], token_estimate}.
  std::string to_jsonl() const;
  static Corpus from_jsonl(std::string_view text);

 private:
  std::vector<Document> documents_;
  std::vector<Chunk> chunks_;
  std::vector<FileDiagnostic> diagnostics_;
  std::map<std::string, std::size_t, std::less<>> chunk_index_;
};

// Rule-based segmentation: terminal punctuation runs (.!?) followed by
// optional closers and whitespace end a sentence, except after a known
// abbreviation. Blank-line paragraph breaks also end a sentence.
std::vector<Sentence> segment_sentences(std::string_view text);

// Inverse of segment_sentences.
std::string join_sentences(const std::vector<Sentence>& sentences);

// Strips Markdown markup (headings, list markers, emphasis, links, fences)
// leaving plain text with the line structure intact.
std::string flatten_markdown(std::string_view markdown);

// Sliding window over sentences. Throws InvalidArgument when a single
// sentence exceeds max_tokens.
std::vector<Chunk> chunk_document(const std::string& doc_id,
                                  const std::vector<Sentence>& sentences,
                                  const ChunkingConfig& config);

// "d" + first 16 hex digits of SHA-256 over the raw file bytes.
std::string document_id(std::string_view bytes);

// Expands directories (recursively; .txt, .md, .markdown), sorts, reads and
// chunks every file. Unreadable or empty files are recorded as diagnostics;
// throws IoError when no file survives.
Corpus ingest(const std::vector<std::filesystem::path>& paths,
              const ChunkingConfig& config);

}  // namespace ragval::corpus
