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

#include "ragval/corpus/corpus.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

#include "ragval/common/error.h"
#include "ragval/common/hash.h"
#include "ragval/common/io.h"
#include "ragval/common/text.h"

namespace ragval::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Lowercased, without the trailing period. Sorted.
constexpr std::array<std::string_view, 42> kAbbreviations = {
    "approx", "apr",  "aug",  "ave",    "blvd", "capt", "cf",   "co",
    "col",    "corp", "dec",  "dept",   "dr",   "est",  "feb",  "fig",
    "gen",    "gov",  "inc",  "jan",    "jr",   "jul",  "jun",  "lt",
    "ltd",    "mar",  "messrs", "mr",   "mrs",  "ms",   "mt",   "nov",
    "oct",    "prof", "rep",  "rev",    "sen",  "sep",  "sept", "sr",
    "st",     "vs"};

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

// Length of a closing quote/bracket at pos, 0 if none.
std::size_t closer_len(std::string_view t, std::size_t pos) {
  const char c = t[pos];
  if (c == ')' || c == ']' || c == '"' || c == '\'') return 1;
  if (t.substr(pos, 3) == "\xE2\x80\x99" || t.substr(pos, 3) == "\xE2\x80\x9D") {
    return 3;
  }
  return 0;
}

std::size_t next_non_space(std::string_view t, std::size_t pos) {
  while (pos < t.size() && text::is_space(t[pos])) ++pos;
  return pos;
}

// `token` is the word immediately before a single '.'.
bool is_abbreviation(std::string_view token, std::string_view rest) {
  while (!token.empty() && (token.front() == '(' || token.front() == '"' ||
                            token.front() == '\'' || token.front() == '[')) {
    token.remove_prefix(1);
  }
  if (token.empty()) return false;
  // Dotted forms such as "e.g", "i.e", "U.S", "Ph.D".
  if (token.find('.') != std::string_view::npos) {
    std::size_t part_start = 0;
    while (part_start <= token.size()) {
      std::size_t dot = token.find('.', part_start);
      if (dot == std::string_view::npos) dot = token.size();
      const std::size_t len = dot - part_start;
      if (len == 0 || len > 3) return false;
      part_start = dot + 1;
      if (dot == token.size()) break;
    }
    return true;
  }
  const std::string lower = text::to_lower(token);
  if (lower == "no" || lower == "nos") {
    const std::size_t k = next_non_space(rest, 0);
    return k < rest.size() && std::isdigit(static_cast<unsigned char>(rest[k]));
  }
  return std::binary_search(kAbbreviations.begin(), kAbbreviations.end(),
                            std::string_view(lower));
}

// Returns one past the last character of the sentence starting at `pos`
// (pos is at a non-space character).
std::size_t find_sentence_end(std::string_view t, std::size_t pos) {
  const std::size_t n = t.size();
  std::size_t j = pos;
  while (j < n) {
    const char c = t[j];
    if (is_terminal(c)) {
      std::size_t k = j;
      while (k < n && is_terminal(t[k])) ++k;
      const bool single_period = (k - j == 1) && c == '.';
      while (k < n) {
        const std::size_t cl = closer_len(t, k);
        if (cl == 0) break;
        k += cl;
      }
      if (k == n || text::is_space(t[k])) {
        if (single_period) {
          std::size_t w = j;
          while (w > pos && !text::is_space(t[w - 1])) --w;
          if (is_abbreviation(t.substr(w, j - w), t.substr(k))) {
            j = k;
            continue;
          }
        }
        return k;
      }
      j = k;
      continue;
    }
    if (c == '\n') {
      std::size_t m = j;
      int newlines = 0;
      while (m < n && text::is_space(t[m])) {
        if (t[m] == '\n') ++newlines;
        ++m;
      }
      if (newlines >= 2 && m < n) {
        std::size_t e = j;
        while (e > pos && text::is_space(t[e - 1])) --e;
        return e;
      }
      j = m;
      continue;
    }
    ++j;
  }
  std::size_t e = n;
  while (e > pos && text::is_space(t[e - 1])) --e;
  return e;
}

bool has_extension(const fs::path& p) {
  const std::string ext = text::to_lower(p.extension().string());
  return ext == ".txt" || ext == ".md" || ext == ".markdown";
}

bool is_markdown(const fs::path& p) {
  const std::string ext = text::to_lower(p.extension().string());
  return ext == ".md" || ext == ".markdown";
}

// Strips inline Markdown: images, links, emphasis markers and code ticks.
std::string flatten_inline(std::string_view line) {
  std::string out;
  out.reserve(line.size());
  std::size_t i = 0;
  while (i < line.size()) {
    const bool image = line[i] == '!' && i + 1 < line.size() && line[i + 1] == '[';
    if (line[i] == '[' || image) {
      const std::size_t open = image ? i + 1 : i;
      const std::size_t close = line.find(']', open);
      if (close != std::string_view::npos && close + 1 < line.size() &&
          line[close + 1] == '(') {
        const std::size_t paren = line.find(')', close + 2);
        if (paren != std::string_view::npos) {
          out += flatten_inline(line.substr(open + 1, close - open - 1));
          i = paren + 1;
          continue;
        }
      }
    }
    if (line[i] == '*' || line[i] == '`') {
      ++i;
      continue;
    }
    if (line.substr(i, 2) == "__") {
      i += 2;
      continue;
    }
    if (line[i] == '_') {
      // _emphasis_ at a word edge; snake_case stays.
      const auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
      const bool before = i > 0 && word(line[i - 1]);
      const bool after = i + 1 < line.size() && word(line[i + 1]);
      if (before != after) {
        ++i;
        continue;
      }
    }
    out.push_back(line[i]);
    ++i;
  }
  return out;
}

}  // namespace

std::string Chunk::text() const {
  std::string out;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (i) {
      const std::string& prev = sentences[i - 1].text;
      const char end = prev.empty() ? '.' : prev.back();
      const bool closed = end == '.' || end == '!' || end == '?' || end == '"' || end == '\'' ||
                          end == ')';
      out += closed ? " " : "\n\n";
    }
    out += sentences[i].text;
  }
  return out;
}

void ChunkingConfig::validate() const {
  if (max_sentences < 1) throw InvalidArgument("chunking: max_sentences must be >= 1");
  if (max_tokens < 1) throw InvalidArgument("chunking: max_tokens must be >= 1");
  if (overlap >= max_sentences) {
    throw InvalidArgument("chunking: overlap must be < max_sentences");
  }
}

std::vector<Sentence> segment_sentences(std::string_view t) {
  std::vector<Sentence> out;
  if (t.empty()) return out;
  std::size_t pos = next_non_space(t, 0);
  if (pos == t.size()) {
    out.push_back(Sentence{0, "", std::string(t), ""});
    return out;
  }
  std::string lead(t.substr(0, pos));
  while (pos < t.size()) {
    const std::size_t end = find_sentence_end(t, pos);
    const std::size_t ws_end = next_non_space(t, end);
    Sentence s;
    s.index = out.size();
    s.text = std::string(t.substr(pos, end - pos));
    s.lead = std::move(lead);
    lead.clear();
    s.trail = std::string(t.substr(end, ws_end - end));
    out.push_back(std::move(s));
    pos = ws_end;
  }
  return out;
}

std::string join_sentences(const std::vector<Sentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    out += s.lead;
    out += s.text;
    out += s.trail;
  }
  return out;
}

std::string flatten_markdown(std::string_view md) {
  std::string out;
  bool in_fence = false;
  std::size_t pos = 0;
  while (pos <= md.size()) {
    std::size_t eol = md.find('\n', pos);
    const bool last = eol == std::string_view::npos;
    if (last) eol = md.size();
    std::string_view line = md.substr(pos, eol - pos);
    std::string_view body = text::trim(line);
    std::string rendered;
    bool heading = false;
    if (body.starts_with("```") || body.starts_with("~~~")) {
      in_fence = !in_fence;
    } else if (in_fence) {
      rendered = std::string(line);
    } else if (body.find_first_not_of("-*_= ") == std::string_view::npos &&
               body.size() >= 3) {
      // Horizontal rule or setext underline.
    } else {
      while (body.starts_with(">")) body = text::trim(body.substr(1));
      if (body.starts_with("#")) {
        std::size_t h = body.find_first_not_of('#');
        if (h != std::string_view::npos && h <= 6 && body[h] == ' ') {
          body = text::trim(body.substr(h));
          heading = true;
        }
      }
      if (body.size() >= 2 && (body[0] == '-' || body[0] == '*' || body[0] == '+') &&
          body[1] == ' ') {
        body = text::trim(body.substr(2));
      } else {
        std::size_t d = 0;
        while (d < body.size() && std::isdigit(static_cast<unsigned char>(body[d]))) ++d;
        if (d > 0 && d + 1 < body.size() && (body[d] == '.' || body[d] == ')') &&
            body[d + 1] == ' ') {
          body = text::trim(body.substr(d + 2));
        }
      }
      if (body.starts_with("|")) {
        if (body.find_first_not_of("|-: ") == std::string_view::npos) {
          body = {};
        } else {
          std::string cells(body);
          std::replace(cells.begin(), cells.end(), '|', ' ');
          rendered = flatten_inline(text::trim(cells));
          body = {};
        }
      }
      if (!body.empty()) rendered = flatten_inline(body);
    }
    out += rendered;
    if (!last) out.push_back('\n');
    // A heading is its own sentence: force a paragraph break after it.
    if (heading && !last) out.push_back('\n');
    if (last) break;
    pos = eol + 1;
  }
  return out;
}

std::vector<Chunk> chunk_document(const std::string& doc_id,
                                  const std::vector<Sentence>& sentences,
                                  const ChunkingConfig& config) {
  config.validate();
  std::vector<Chunk> chunks;
  const std::size_t n = sentences.size();
  if (n == 0) return chunks;
  std::vector<std::size_t> tokens(n);
  for (std::size_t i = 0; i < n; ++i) {
    tokens[i] = text::whitespace_word_count(sentences[i].text);
    if (tokens[i] > config.max_tokens) {
      throw InvalidArgument("sentence " + std::to_string(i) + " has " +
                            std::to_string(tokens[i]) +
                            " tokens, more than max_tokens=" +
                            std::to_string(config.max_tokens));
    }
  }
  std::size_t start = 0;
  while (true) {
    std::size_t end = start;
    std::size_t total = 0;
    while (end < n && end - start < config.max_sentences) {
      if (end > start && total + tokens[end] > config.max_tokens) break;
      total += tokens[end];
      ++end;
    }
    Chunk c;
    c.doc_id = doc_id;
    c.ordinal = chunks.size();
    c.chunk_id = doc_id + "#" + std::to_string(c.ordinal);
    c.sentences.assign(sentences.begin() + static_cast<std::ptrdiff_t>(start),
                       sentences.begin() + static_cast<std::ptrdiff_t>(end));
    c.token_estimate = total;
    chunks.push_back(std::move(c));
    if (end == n) break;
    const std::size_t shared = std::min(config.overlap, end - start - 1);
    start = end - shared;
  }
  return chunks;
}

std::string document_id(std::string_view bytes) {
  return "d" + sha256_hex(bytes).substr(0, 16);
}

Corpus::Corpus(std::vector<Document> documents, std::vector<Chunk> chunks,
               std::vector<FileDiagnostic> diagnostics)
    : documents_(std::move(documents)),
      chunks_(std::move(chunks)),
      diagnostics_(std::move(diagnostics)) {
  for (std::size_t i = 0; i < chunks_.size(); ++i) {
    if (!chunk_index_.emplace(chunks_[i].chunk_id, i).second) {
      throw InvalidArgument("duplicate chunk id " + chunks_[i].chunk_id);
    }
  }
}

const Chunk* Corpus::find_chunk(std::string_view chunk_id) const {
  auto it = chunk_index_.find(chunk_id);
  return it == chunk_index_.end() ? nullptr : &chunks_[it->second];
}

std::string Corpus::to_jsonl() const {
  std::map<std::string, const Document*> docs;
  for (const auto& d : documents_) docs[d.doc_id] = &d;
  std::vector<json> rows;
  rows.reserve(chunks_.size());
  for (const auto& c : chunks_) {
    json sents = json::array();
    for (const auto& s : c.sentences) {
      sents.push_back({{"index", s.index}, {"text", s.text}});
    }
    auto it = docs.find(c.doc_id);
    rows.push_back({{"chunk_id", c.chunk_id},
                    {"doc_id", c.doc_id},
                    {"source", it == docs.end() ? "" : it->second->source_path},
                    {"sentences", std::move(sents)},
                    {"token_estimate", c.token_estimate}});
  }
  return io::to_jsonl(rows);
}

Corpus Corpus::from_jsonl(std::string_view text) {
  std::vector<Chunk> chunks;
  std::vector<Document> documents;
  std::map<std::string, std::size_t> doc_pos;
  std::map<std::string, std::map<std::size_t, std::string>> doc_sentences;
  for (const auto& row : io::parse_jsonl(text, "corpus.jsonl")) {
    Chunk c;
    c.chunk_id = row.at("chunk_id").get<std::string>();
    c.doc_id = row.at("doc_id").get<std::string>();
    const auto hash = c.chunk_id.rfind('#');
    c.ordinal = hash == std::string::npos ? 0 : std::stoul(c.chunk_id.substr(hash + 1));
    for (const auto& s : row.at("sentences")) {
      Sentence sent;
      sent.index = s.at("index").get<std::size_t>();
      sent.text = s.at("text").get<std::string>();
      doc_sentences[c.doc_id][sent.index] = sent.text;
      c.sentences.push_back(std::move(sent));
    }
    c.token_estimate = row.at("token_estimate").get<std::size_t>();
    if (!doc_pos.count(c.doc_id)) {
      doc_pos[c.doc_id] = documents.size();
      documents.push_back(Document{c.doc_id, row.value("source", ""), "", {}});
    }
    chunks.push_back(std::move(c));
  }
  for (auto& d : documents) {
    std::vector<std::string> parts;
    for (const auto& [idx, s] : doc_sentences[d.doc_id]) parts.push_back(s);
    d.text = text::join(parts, " ");
  }
  return Corpus(std::move(documents), std::move(chunks), {});
}

Corpus ingest(const std::vector<fs::path>& paths, const ChunkingConfig& config) {
  config.validate();
  struct Entry {
    std::string source;
    fs::path path;
  };
  std::vector<Entry> entries;
  std::vector<FileDiagnostic> diagnostics;
  for (const auto& p : paths) {
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      const fs::path root_name = p.filename().empty() ? p.parent_path().filename()
                                                      : p.filename();
      for (auto it = fs::recursive_directory_iterator(p, ec);
           !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (it->is_regular_file() && has_extension(it->path())) {
          entries.push_back(
              {(root_name / fs::relative(it->path(), p)).generic_string(), it->path()});
        }
      }
      if (ec) diagnostics.push_back({p.string(), "directory walk failed: " + ec.message()});
    } else {
      entries.push_back({p.filename().generic_string(), p});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.source != b.source ? a.source < b.source : a.path < b.path;
  });

  std::vector<Document> documents;
  std::vector<Chunk> chunks;
  std::map<std::string, std::string> seen;
  for (const auto& e : entries) {
    std::string bytes;
    try {
      bytes = io::read_file(e.path);
    } catch (const IoError& err) {
      diagnostics.push_back({e.source, err.what()});
      continue;
    }
    if (text::trim(bytes).empty()) {
      diagnostics.push_back({e.source, "empty file rejected"});
      continue;
    }
    const std::string id = document_id(bytes);
    if (auto it = seen.find(id); it != seen.end()) {
      diagnostics.push_back({e.source, "duplicate content of " + it->second + " skipped"});
      continue;
    }
    const bool md = is_markdown(e.path);
    std::string body = md ? flatten_markdown(bytes) : bytes;
    if (text::trim(body).empty()) {
      diagnostics.push_back({e.source, "no text after markdown flattening"});
      continue;
    }
    std::vector<Chunk> doc_chunks;
    try {
      doc_chunks = chunk_document(id, segment_sentences(body), config);
    } catch (const InvalidArgument& err) {
      diagnostics.push_back({e.source, err.what()});
      continue;
    }
    seen.emplace(id, e.source);
    documents.push_back(Document{id, e.source, std::move(body),
                                 {{"format", md ? "markdown" : "text"},
                                  {"bytes", std::to_string(bytes.size())}}});
    for (auto& c : doc_chunks) chunks.push_back(std::move(c));
  }
  if (documents.empty()) {
    std::string why = entries.empty() ? "no input files found" : "every input file failed";
    for (const auto& d : diagnostics) why += "; " + d.path + ": " + d.message;
    throw IoError("ingest: " + why);
  }
  return Corpus(std::move(documents), std::move(chunks), std::move(diagnostics));
}

}  // namespace ragval::corpus
