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

#include "ragval/providers/generator.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <vector>

#include "ragval/common/text.h"

namespace ragval::providers {

namespace {

constexpr std::array<std::string_view, 11> kAuxiliaries = {
    "is", "are", "was", "were", "can", "will", "does", "do", "did", "should", "must"};

constexpr std::array<std::string_view, 20> kLowercaseLeaders = {
    "the",  "a",     "an",   "this", "that",  "these", "those",
    "it",   "its",   "they", "their", "our",  "we",    "each",
    "every", "all",  "some", "any",  "most",  "many"};

std::string strip_terminal(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) {
    s.remove_suffix(1);
  }
  return std::string(text::trim(s));
}

// Lowercases the first character when the first word is a function word.
std::string soften_first(std::string s) {
  const auto sp = s.find(' ');
  const std::string first = text::to_lower(s.substr(0, sp));
  if (std::find(kLowercaseLeaders.begin(), kLowercaseLeaders.end(), first) !=
      kLowercaseLeaders.end()) {
    s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  }
  return s;
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

}  // namespace

std::string to_yes_no_question(std::string_view statement) {
  const std::string body = strip_terminal(statement);
  if (body.empty()) return "Is it true?";
  const auto words = split_words(body);
  for (std::size_t i = 1; i < words.size(); ++i) {
    const std::string w = text::to_lower(words[i]);
    if (std::find(kAuxiliaries.begin(), kAuxiliaries.end(), w) == kAuxiliaries.end()) {
      continue;
    }
    std::string aux = w;
    aux[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(aux[0])));
    std::vector<std::string> subject(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(i));
    std::vector<std::string> rest(words.begin() + static_cast<std::ptrdiff_t>(i) + 1, words.end());
    std::string out = aux + " " + soften_first(text::join(subject, " "));
    if (!rest.empty()) out += " " + text::join(rest, " ");
    return out + "?";
  }
  return "Is it true that " + soften_first(body) + "?";
}

std::string MockGenerator::generate(const std::string& prompt) {
  std::string_view last;
  std::size_t pos = 0;
  std::string_view all(prompt);
  struct Hit {
    std::string_view marker;
    std::string_view payload;
  };
  std::optional<Hit> hit;
  while (pos <= all.size()) {
    std::size_t eol = all.find('\n', pos);
    if (eol == std::string_view::npos) eol = all.size();
    const std::string_view line = text::trim(all.substr(pos, eol - pos));
    if (!line.empty()) last = line;
    for (std::string_view m : {markers::kSimpleFactual, markers::kYesNo, markers::kInference,
                               markers::kMultipleChoice, markers::kMultiHop}) {
      if (line.starts_with(m)) hit = Hit{m, text::trim(line.substr(m.size()))};
    }
    if (eol == all.size()) break;
    pos = eol + 1;
  }
  if (!hit) return last.empty() ? std::string() : "Response to: " + std::string(last);
  const std::string fact = strip_terminal(hit->payload);
  if (fact.empty()) return {};
  if (hit->marker == markers::kSimpleFactual) {
    return "What does the following state: " + fact + "?";
  }
  if (hit->marker == markers::kYesNo) return to_yes_no_question(hit->payload);
  if (hit->marker == markers::kInference) {
    return "What can be inferred from the fact that " + soften_first(fact) + "?";
  }
  if (hit->marker == markers::kMultipleChoice) {
    return "Which option is correct according to the documents: (A) " + fact +
           "; (B) none of the above?";
  }
  const auto sep = hit->payload.find(markers::kFactSeparator);
  if (sep == std::string_view::npos) {
    return "How does the fact that " + soften_first(fact) + " relate to other documents?";
  }
  const std::string a = strip_terminal(hit->payload.substr(0, sep));
  const std::string b =
      strip_terminal(hit->payload.substr(sep + markers::kFactSeparator.size()));
  return "How does the fact that " + soften_first(a) + " relate to the fact that " +
         soften_first(b) + "?";
}

HttpGenerator::HttpGenerator(ProviderConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  config_.validate();
}

std::string HttpGenerator::generate(const std::string& prompt) {
  const nlohmann::json body = {
      {"model", config_.model_id}, {"prompt", prompt}, {"seed", config_.seed}};
  const auto resp = with_retries(config_.retry, [&] { return transport_->post(body); });
  if (!resp.contains("text") || !resp.at("text").is_string()) {
    throw ProviderError("generate: response lacks a \"text\" string");
  }
  return resp.at("text").get<std::string>();
}

std::string generate(Generator& generator, const std::string& prompt) {
  if (prompt.empty()) throw InvalidArgument("generate: prompt is empty");
  std::string out = generator.generate(prompt);
  if (text::trim(out).empty()) throw ProviderError("generate: provider returned empty text");
  return out;
}

std::shared_ptr<Generator> make_generator(const ProviderConfig& config) {
  config.validate();
  if (config.is_mock()) return std::make_shared<MockGenerator>();
  return std::make_shared<HttpGenerator>(config, std::make_shared<HttpTransport>(config));
}

}  // namespace ragval::providers
