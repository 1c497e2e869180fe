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

#include "ragval/common/text.h"

#include <algorithm>
#include <array>
#include <cctype>

namespace ragval::text {

namespace {

// Sorted for binary search.
constexpr std::array<std::string_view, 97> kStopwords = {
    "a",       "about", "after",  "again", "all",   "also",  "am",
    "an",      "and",   "any",    "are",   "as",    "at",    "be",
    "because", "been",  "before", "being", "both",  "but",   "by",
    "can",     "could", "did",    "do",    "does",  "doing", "during",
    "each",    "few",   "for",    "from",  "further", "had", "has",
    "have",    "having", "he",    "her",   "here",  "hers",  "him",
    "his",     "how",   "i",      "if",    "in",    "into",  "is",
    "it",      "its",   "just",   "may",   "me",    "more",  "most",
    "must",    "my",    "no",     "nor",   "not",   "of",    "on",
    "once",    "only",  "or",     "other", "our",   "out",   "over",
    "own",     "same",  "she",    "should", "so",   "some",  "such",
    "than",    "that",  "the",    "their", "them",  "then",  "there",
    "these",   "they",  "this",   "those", "to",    "was",   "we",
    "were",    "what",  "which",  "will",  "with",  "you"};

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (ch == '\'' && !cur.empty()) {
      continue;
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t whitespace_word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

bool is_stopword(std::string_view lower_word) {
  return std::binary_search(kStopwords.begin(), kStopwords.end(), lower_word);
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i]))) {
      return false;
    }
  }
  return true;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace ragval::text
