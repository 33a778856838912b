/*
* Copyright (C) 2026 The kdyn Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#ifndef KDYN_TEXT_HPP
#define KDYN_TEXT_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kdyn::text
{

/// Full-precision decimal (17 significant digits), shortest of fixed/scientific.
std::string format_double(double v);

/// Strict decimal parse of the whole token; throws ValidationError naming `field`.
double parse_double(std::string_view token, std::string_view field);

std::string_view trim(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames over `path`, creating parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

} // namespace kdyn::text

#endif // KDYN_TEXT_HPP
