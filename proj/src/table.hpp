// Copyright 2026 The pflsim Authors.
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

// Delimited numeric tables shared by the curve and covariate readers.

#include <filesystem>
#include <string>
#include <vector>

namespace pflsim::detail {

struct TextTable {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
};

/// Reads comma- or tab-delimited text. Blank lines are skipped.
TextTable read_text_table(const std::filesystem::path& path);

/// Parses a decimal cell; throws a parse error naming row and column.
double parse_cell(const std::string& cell, const std::filesystem::path& path,
                  std::size_t line, std::size_t column);

bool try_parse(const std::string& cell, double& out);

/// Writes `content` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

}  // namespace pflsim::detail
