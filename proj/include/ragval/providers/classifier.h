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

#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <string_view>

#include "ragval/providers/config.h"
#include "ragval/providers/transport.h"

namespace ragval::providers {

// Lowercased single-word term list. File format: one term per line, '#'
// starts a comment, blank lines ignored.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(const std::set<std::string>& terms) : terms_(terms.begin(), terms.end()) {}

  static Lexicon parse(std::string_view text);
  static Lexicon load(const std::filesystem::path& path);

  bool contains(std::string_view lower_word) const;
  const std::set<std::string, std::less<>>& terms() const { return terms_; }

 private:
  std::set<std::string, std::less<>> terms_;
};

struct Lexicons {
  Lexicon toxic;
  Lexicon positive;
  Lexicon negative;

  // Built-in lists; the same content ships under data/lexicons/.
  static Lexicons defaults();
  // Loads toxic.txt, positive.txt and negative.txt from `dir`.
  static Lexicons load(const std::filesystem::path& dir);
};

std::string_view default_lexicon_text(std::string_view name);

enum class ClassifyTask { kToxicity, kSentiment };

std::string_view task_name(ClassifyTask task);

class Classifier {
 public:
  virtual ~Classifier() = default;
  // Toxicity in [0,1]; sentiment in [-1,1].
  virtual double classify(const std::string& text, ClassifyTask task) = 0;
};

// Lexicon counts over word tokens: toxicity = hits / words,
// sentiment = (positive - negative) / words. Zero for token-free text.
class MockClassifier : public Classifier {
 public:
  explicit MockClassifier(Lexicons lexicons = Lexicons::defaults())
      : lexicons_(std::move(lexicons)) {}
  double classify(const std::string& text, ClassifyTask task) override;

 private:
  Lexicons lexicons_;
};

// Request {"model", "task", "text"} -> response {"score"}, passed through.
class HttpClassifier : public Classifier {
 public:
  HttpClassifier(ProviderConfig config, std::shared_ptr<Transport> transport);
  double classify(const std::string& text, ClassifyTask task) override;

 private:
  ProviderConfig config_;
  std::shared_ptr<Transport> transport_;
};

// Range-checked entry point.
double classify(Classifier& classifier, const std::string& text, ClassifyTask task);

std::shared_ptr<Classifier> make_classifier(const ProviderConfig& config,
                                            Lexicons lexicons = Lexicons::defaults());

}  // namespace ragval::providers
