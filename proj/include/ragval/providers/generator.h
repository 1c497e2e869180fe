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

#include <memory>
#include <string>
#include <string_view>

#include "ragval/providers/config.h"
#include "ragval/providers/transport.h"

namespace ragval::providers {

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string generate(const std::string& prompt) = 0;
};

// Markers the shipped prompt templates end with. The mock generator looks
// for the last line starting with one of these and realizes the question
// deterministically from the text after it.
namespace markers {
inline constexpr std::string_view kSimpleFactual = "Q about:";
inline constexpr std::string_view kYesNo = "Yes/no about:";
inline constexpr std::string_view kInference = "Inference about:";
inline constexpr std::string_view kMultipleChoice = "Choice about:";
inline constexpr std::string_view kMultiHop = "Multi-hop about:";
// Separates the two facts of a multi-hop prompt.
inline constexpr std::string_view kFactSeparator = " || ";
}  // namespace markers

// Template realizations, e.g. "Q about: <s>" -> "What does the following
// state: <s>?" and "Yes/no about: The fee is $5." -> "Is the fee $5?".
// Unrecognized prompts get "Response to: <last line>".
class MockGenerator : public Generator {
 public:
  std::string generate(const std::string& prompt) override;
};

// Request {"model", "prompt", "seed"} -> response {"text"}.
class HttpGenerator : public Generator {
 public:
  HttpGenerator(ProviderConfig config, std::shared_ptr<Transport> transport);
  std::string generate(const std::string& prompt) override;

 private:
  ProviderConfig config_;
  std::shared_ptr<Transport> transport_;
};

// Yes/no question from a declarative sentence: fronts the first auxiliary
// verb, otherwise "Is it true that ...?".
std::string to_yes_no_question(std::string_view statement);

// Checked entry point: prompt non-empty; an empty or whitespace-only
// response is a ProviderError.
std::string generate(Generator& generator, const std::string& prompt);

std::shared_ptr<Generator> make_generator(const ProviderConfig& config);

}  // namespace ragval::providers
