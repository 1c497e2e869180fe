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

#include "ragval/providers/classifier.h"

#include <cmath>

#include "ragval/common/io.h"
#include "ragval/common/text.h"

namespace ragval::providers {

namespace {

// Keep in sync with data/lexicons/*.txt (a unit test compares them).
constexpr std::string_view kToxic =
    "abuse\ncrap\ndamn\ndisgusting\ndumb\ngarbage\nhate\nidiot\nidiotic\nincompetent\n"
    "loser\nmoron\npathetic\nscum\nshut\nstupid\ntrash\nuseless\nworthless\n";
constexpr std::string_view kPositive =
    "approved\nbenefit\nbest\neasy\nexcellent\nfavorable\nglad\ngood\ngreat\nhappy\n"
    "helpful\npleased\nreliable\nsafe\nsecure\nthank\nthanks\nwelcome\n";
constexpr std::string_view kNegative =
    "bad\ndeclined\ndenied\ndifficult\nfail\nfailed\npoor\nproblem\nreject\nrejected\n"
    "sorry\nterrible\nunfavorable\nunfortunately\nworse\nworst\n";

}  // namespace

Lexicon Lexicon::parse(std::string_view t) {
  std::set<std::string> terms;
  std::size_t pos = 0;
  while (pos <= t.size()) {
    std::size_t eol = t.find('\n', pos);
    if (eol == std::string_view::npos) eol = t.size();
    std::string_view line = t.substr(pos, eol - pos);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (!line.empty()) terms.insert(text::to_lower(line));
    if (eol == t.size()) break;
    pos = eol + 1;
  }
  return Lexicon(std::move(terms));
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  return parse(io::read_file(path));
}

bool Lexicon::contains(std::string_view lower_word) const {
  return terms_.find(lower_word) != terms_.end();
}

Lexicons Lexicons::defaults() {
  return Lexicons{Lexicon::parse(kToxic), Lexicon::parse(kPositive),
                  Lexicon::parse(kNegative)};
}

Lexicons Lexicons::load(const std::filesystem::path& dir) {
  return Lexicons{Lexicon::load(dir / "toxic.txt"), Lexicon::load(dir / "positive.txt"),
                  Lexicon::load(dir / "negative.txt")};
}

std::string_view default_lexicon_text(std::string_view name) {
  if (name == "toxic") return kToxic;
  if (name == "positive") return kPositive;
  if (name == "negative") return kNegative;
  throw InvalidArgument("unknown lexicon " + std::string(name));
}

std::string_view task_name(ClassifyTask task) {
  return task == ClassifyTask::kToxicity ? "toxicity" : "sentiment";
}

double MockClassifier::classify(const std::string& t, ClassifyTask task) {
  const auto words = text::word_tokens(t);
  if (words.empty()) return 0.0;
  const double n = static_cast<double>(words.size());
  if (task == ClassifyTask::kToxicity) {
    std::size_t hits = 0;
    for (const auto& w : words) hits += lexicons_.toxic.contains(w) ? 1 : 0;
    return static_cast<double>(hits) / n;
  }
  long balance = 0;
  for (const auto& w : words) {
    if (lexicons_.positive.contains(w)) ++balance;
    if (lexicons_.negative.contains(w)) --balance;
  }
  return static_cast<double>(balance) / n;
}

HttpClassifier::HttpClassifier(ProviderConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  config_.validate();
}

double HttpClassifier::classify(const std::string& t, ClassifyTask task) {
  const nlohmann::json body = {
      {"model", config_.model_id}, {"task", task_name(task)}, {"text", t}};
  const auto resp = with_retries(config_.retry, [&] { return transport_->post(body); });
  if (!resp.contains("score") || !resp.at("score").is_number()) {
    throw ProviderError("classify: response lacks a numeric \"score\"");
  }
  return resp.at("score").get<double>();
}

double classify(Classifier& classifier, const std::string& t, ClassifyTask task) {
  const double s = classifier.classify(t, task);
  const double lo = task == ClassifyTask::kToxicity ? 0.0 : -1.0;
  if (!std::isfinite(s) || s < lo || s > 1.0) {
    throw ProviderError(std::string(task_name(task)) + " score out of range: " +
                        std::to_string(s));
  }
  return s;
}

std::shared_ptr<Classifier> make_classifier(const ProviderConfig& config, Lexicons lexicons) {
  config.validate();
  if (config.is_mock()) return std::make_shared<MockClassifier>(std::move(lexicons));
  return std::make_shared<HttpClassifier>(config, std::make_shared<HttpTransport>(config));
}

}  // namespace ragval::providers
