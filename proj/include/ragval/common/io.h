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
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ragval::io {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path);

// Writes via a temp file in the same directory and renames over the target.
void write_file(const std::filesystem::path& path, std::string_view bytes);

// One compact JSON document per line, each line '\n'-terminated.
std::string to_jsonl(const std::vector<json>& rows);

// Parses JSONL; blank lines are skipped. Throws IoError naming the line on
// malformed input.
std::vector<json> parse_jsonl(std::string_view text, std::string_view origin);

// Shortest decimal that parses back to the same double; used for CSV
// outputs.
std::string format_double(double v);

}  // namespace ragval::io
