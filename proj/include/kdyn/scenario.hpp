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
#ifndef KDYN_SCENARIO_HPP
#define KDYN_SCENARIO_HPP

#include "kdyn/integrator.hpp"
#include "kdyn/model.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kdyn
{

/// Initial state shared by every built-in preset: K, q, theta, H, Q.
inline constexpr State reference_initial_state{100.0, 0.5, 0.3, 10.0, 50.0};

struct ScenarioPreset {
    std::string name;
    std::string label;
    ModelParams params;
    State y0;
    IntegratorConfig config;
};

/// The nine regime presets followed by the two case studies.
const std::vector<ScenarioPreset>& builtin_presets();

std::vector<std::string> preset_names();

/**
 * Resolves a built-in preset by name, or else treats `name_or_path` as a scenario
 * config file. Throws ValidationError for unknown names and malformed files, IoError
 * when an existing path cannot be read.
 */
ScenarioPreset load_preset(std::string_view name_or_path);

/**
 * Parses a flat `key = value` scenario document. Keys are the 24 parameter names
 * (all required) plus optional K0, q0, theta0, H0, Q0 and t_end. `#` starts a comment.
 */
ScenarioPreset parse_scenario_config(std::string_view text, std::string name);

/// Writes a preset back in the config-file syntax, one key per line.
std::string format_scenario_config(const ScenarioPreset& preset);

struct NormalizedTrajectory {
    std::vector<double> times;
    std::vector<double> K_norm; ///< K / K_max
    std::vector<double> q;
    std::vector<double> theta;
    std::vector<double> H_norm; ///< H / H_inf
    std::vector<double> Q_norm; ///< Q / Q_sat
};

NormalizedTrajectory normalize(const Trajectory& traj);

enum class Regime
{
    Growth,
    Stagnation,
    Decline,
    Oscillatory,
    Mixed,
    Unclassified, ///< horizon too short to classify
};

std::string_view to_string(Regime r);

namespace regime_thresholds
{
inline constexpr double slope          = 1e-5; ///< per month
inline constexpr double prominence     = 0.01;
inline constexpr int peaks             = 3;
inline constexpr double growth_margin  = 0.05;
inline constexpr std::size_t min_points = 50;
} // namespace regime_thresholds

/// Values for q, theta and H_norm, in that order.
using TriadValues = std::array<double, 3>;

struct RegimeDiagnostics {
    TriadValues initial{};
    TriadValues final_values{};
    TriadValues slopes{}; ///< least squares over the final 20% of the grid
    int q_peaks = 0;      ///< prominent interior maxima of q in the final 80%
    double K_norm_final = 0.0;
    double Q_norm_final = 0.0;
};

struct RegimeLabel {
    Regime regime = Regime::Mixed;
    RegimeDiagnostics diagnostics;
};

/// Throws ValidationError if the trajectory has fewer than 50 points.
RegimeLabel classify_regime(const NormalizedTrajectory& traj);

/// Counts interior local maxima with topographic prominence above `min_prominence`.
int count_prominent_peaks(const std::vector<double>& series, std::size_t first, double min_prominence);

/// Shared simulate path of the CLI and the HTTP service.
struct SimulationResult {
    Trajectory trajectory;
    NormalizedTrajectory normalized;
    RegimeLabel regime;
};

/// Integrates, normalizes and classifies; horizons under 50 points are labelled Unclassified.
SimulationResult run_scenario(const ScenarioPreset& preset);

// Trajectory files: comma separated, LF, 17 significant digits.

inline constexpr std::string_view trajectory_header = "t,K,q,theta,H,Q,K_norm,H_norm,Q_norm";
inline constexpr std::string_view normalized_header = "t,K_norm,q,theta,H_norm,Q_norm";

std::string format_trajectory(const Trajectory& traj);
std::string format_trajectory(const NormalizedTrajectory& traj);

/// Throws ValidationError on an empty trajectory and IoError on write failure.
void export_trajectory(const Trajectory& traj, const std::filesystem::path& path);
void export_trajectory(const NormalizedTrajectory& traj, const std::filesystem::path& path);

struct TrajectoryTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    /// Column by name; throws ValidationError if absent.
    std::vector<double> column(std::string_view name) const;
};

TrajectoryTable import_trajectory(const std::filesystem::path& path);
TrajectoryTable parse_trajectory(std::string_view text);

} // namespace kdyn

#endif // KDYN_SCENARIO_HPP
