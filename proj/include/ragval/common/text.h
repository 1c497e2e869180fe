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

#include <string>
#include <string_view>
#include <vector>

namespace ragval::text {

std::string to_lower(std::string_view s);

std::string_view trim(std::string_view s);

bool is_space(char c);

// Lowercased alphanumeric word tokens. Apostrophes inside a word are dropped
// ("don't" -> "dont"); everything else non-alphanumeric separates tokens.
std::vector<std::string> word_tokens(std::string_view s);

// Whitespace-delimited word count.
std::size_t whitespace_word_count(std::string_view s);

// Small English function-word list shared by the mock embedder and keyword
// extraction.
bool is_stopword(std::string_view lower_word);

bool starts_with_ci(std::string_view s, std::string_view prefix);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace ragval::text
