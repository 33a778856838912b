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
#ifndef KDYN_CLI_HPP
#define KDYN_CLI_HPP

#include "kdyn/calibration.hpp"

#include <exception>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace kdyn::cli
{

/// Process exit status of every command.
enum class ExitCode : int
{
    Success    = 0,
    Validation = 1, ///< bad input or domain violation
    Io         = 2, ///< file, network or schema failure
    Numerical  = 3, ///< integration or optimisation failure
};

/// Maps an in-flight exception onto the exit taxonomy.
ExitCode exit_code_for(std::exception_ptr error);

/// Environment variable overriding the default cache directory.
inline constexpr const char* cache_dir_env = "KDYN_CACHE_DIR";

/**
 * Runs one command line (without the program name). Help and data go to `out`,
 * the one-line summary and diagnostics to `err`.
 */
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Grid specification: comma list ("0.1,0.2,0.5") or inclusive linspace ("lo:hi:n").
std::vector<double> parse_grid(std::string_view spec, std::string_view field);

/// Plain-text calibration tables.
std::string format_fit_report(const std::vector<calibration::FitResult>& fits);
std::string format_variant_report(const calibration::VariantMatrix& matrix);

/// Machine-readable counterparts including the restart tables.
std::string fit_report_json(const std::vector<calibration::FitResult>& fits);
std::string variant_report_json(const calibration::VariantMatrix& matrix);

} // namespace kdyn::cli

#endif // KDYN_CLI_HPP
