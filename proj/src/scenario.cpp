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
#include "kdyn/scenario.hpp"

#include "kdyn/errors.hpp"
#include "kdyn/text.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>

namespace kdyn
{

namespace
{

/// Values shared by the nine regime presets; columns override the rest.
ParameterSet regime_common()
{
    ParameterSet p;
    p.delta_K   = 0.01;
    p.q_H       = 0.95;
    p.delta_q   = 0.001;
    p.theta_mid = 0.0;
    p.theta_max = 1.0;
    p.K_max     = 1e4;
    p.gamma_H   = 0.05;
    p.Q_sat     = 500.0;
    p.H_inf     = 100.0;
    p.rho_Q     = 0.01;
    return p;
}

struct RegimeColumn {
    const char* name;
    const char* label;
    double alpha_H, alpha_A, beta_K, beta_A, eta_sup, eta_RLHF, a_0;
    double Q_half, hill_beta, K_half, xi_0, kappa_H, T_difficulty, kappa_gate;
    double t_end;
};

// clang-format off
constexpr RegimeColumn regime_columns[] = {
    // name                     label                                 aH    aA    bK    bA    eS    eR    a0   Qh      hb   Kh   xi0  kH    Td       kg    T
    {"no_llms",                "(a) No LLMs",                          0.5,  0.00, 0.05, 0.00, 0.00, 0.00, 0.0, 5000.0, 0.9, 300, 0.0, 0.05, 10.0,    10.0, 1000},
    {"healthy_growth",         "(b) Healthy growth",                   0.5,  0.05, 0.05, 0.03, 0.05, 0.03, 0.5, 5000.0, 0.9, 300, 2.0, 0.05, 10.0,    10.0, 1000},
    {"tighter_gate",           "(c) Healthy growth & tighter gate",    0.5,  0.05, 0.05, 0.03, 0.05, 0.03, 0.8, 5000.0, 0.9, 300, 2.0, 0.05, 10.0,    10.0, 1000},
    {"inverted_flow",          "(d) Inverted flow",                    0.05, 0.5,  0.05, 0.03, 0.05, 0.03, 0.5, 5000.0, 0.9, 300, 2.0, 0.05, 10.0,    10.0, 1000},
    {"inverted_learning",      "(e) Inverted learning",                0.5,  0.05, 0.03, 0.05, 0.05, 0.03, 0.5, 5000.0, 0.9, 300, 2.0, 0.05, 10.0,    10.0, 1000},
    {"inverted_flow_learning", "(f) Inverted flow & inverted learning", 0.05, 0.5, 0.03, 0.05, 0.05, 0.03, 0.5, 5000.0, 0.9, 300, 2.0, 0.05, 10.0,    10.0, 1000},
    {"gate_tightening",        "(g) Gate tightening stops collapse",   0.25, 0.3,  0.03, 0.05, 0.05, 0.03, 0.8, 5000.0, 0.9, 300, 2.0, 0.05, 10.0,    10.0, 1000},
    {"model_recovery",         "(h) Model recovery due to RLHF",       0.05, 0.5,  0.03, 0.05, 0.05, 0.5,  0.5, 5000.0, 0.9, 300, 2.0, 0.05, 10.0,    10.0, 1000},
    {"oscillations",           "(i) Oscillations",                     0.05, 0.5,  0.05, 0.3,  0.05, 0.5,  0.5, 100.0,  4.0, 200, 2.0, 0.9,  10000.0, 1.0,  5000},
};
// clang-format on

ScenarioPreset make_regime(const RegimeColumn& c)
{
    ParameterSet p  = regime_common();
    p.alpha_H       = c.alpha_H;
    p.alpha_A       = c.alpha_A;
    p.beta_K        = c.beta_K;
    p.beta_A        = c.beta_A;
    p.eta_sup       = c.eta_sup;
    p.eta_RLHF      = c.eta_RLHF;
    p.a_0           = c.a_0;
    p.Q_half        = c.Q_half;
    p.hill_beta     = c.hill_beta;
    p.K_half        = c.K_half;
    p.xi_0          = c.xi_0;
    p.kappa_H       = c.kappa_H;
    p.T_difficulty  = c.T_difficulty;
    p.kappa_gate    = c.kappa_gate;
    IntegratorConfig cfg;
    cfg.t_end = c.t_end;
    return {c.name, c.label, ModelParams(p), reference_initial_state, cfg};
}

ScenarioPreset medical()
{
    ParameterSet p;
    p.alpha_H      = 0.32;
    p.alpha_A      = 0.05;
    p.delta_K      = 0.010;
    p.q_H          = 0.99;
    p.delta_q      = 0.0005;
    p.theta_mid    = 0.0;
    p.theta_max    = 1.0;
    p.K_max        = 1e5;
    p.eta_sup      = 0.10;
    p.eta_RLHF     = 0.30;
    p.Q_half       = 8000.0;
    p.beta_K       = 0.20;
    p.beta_A       = 0.05;
    p.gamma_H      = 0.02;
    p.Q_sat        = 1000.0;
    p.H_inf        = 100.0;
    p.K_half       = 300.0;
    p.hill_beta    = 0.9;
    p.xi_0         = 2.0;
    p.kappa_H      = 0.05;
    p.rho_Q        = 0.02;
    p.T_difficulty = 10.0;
    p.a_0          = 0.90;
    p.kappa_gate   = 20.0;
    return {"medical", "Medical research", ModelParams(p), reference_initial_state, IntegratorConfig{}};
}

ScenarioPreset open_source()
{
    ParameterSet p;
    p.alpha_H      = 5.0;
    p.alpha_A      = 4.26;
    p.delta_K      = 0.023;
    p.q_H          = 0.90;
    p.delta_q      = 0.002;
    p.theta_mid    = 0.0;
    p.theta_max    = 1.0;
    p.K_max        = 5e5;
    p.eta_sup      = 0.12;
    p.eta_RLHF     = 0.25;
    p.Q_half       = 5000.0;
    p.beta_K       = 0.30;
    p.beta_A       = 0.10;
    p.gamma_H      = 0.03;
    p.Q_sat        = 500.0;
    p.H_inf        = 100.0;
    p.K_half       = 300.0;
    p.hill_beta    = 0.9;
    p.xi_0         = 2.0;
    p.kappa_H      = 0.05;
    p.rho_Q        = 0.02;
    p.T_difficulty = 10.0;
    p.a_0          = 0.60;
    p.kappa_gate   = 8.0;
    return {"open_source", "Open source software", ModelParams(p), reference_initial_state, IntegratorConfig{}};
}

const char* state_keys[] = {"K0", "q0", "theta0", "H0", "Q0"};

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y, std::size_t first)
{
    const auto n = static_cast<double>(x.size() - first);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = first; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = first; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

void append_row(std::string& out, std::initializer_list<double> values)
{
    bool first = true;
    for (double v : values) {
        if (!first) {
            out += ',';
        }
        first = false;
        out += text::format_double(v);
    }
    out += '\n';
}

} // namespace

const std::vector<ScenarioPreset>& builtin_presets()
{
    static const std::vector<ScenarioPreset> presets = [] {
        std::vector<ScenarioPreset> v;
        for (const auto& c : regime_columns) {
            v.push_back(make_regime(c));
        }
        v.push_back(medical());
        v.push_back(open_source());
        return v;
    }();
    return presets;
}

std::vector<std::string> preset_names()
{
    std::vector<std::string> names;
    for (const auto& p : builtin_presets()) {
        names.push_back(p.name);
    }
    return names;
}

ScenarioPreset load_preset(std::string_view name_or_path)
{
    for (const auto& p : builtin_presets()) {
        if (p.name == name_or_path) {
            return p;
        }
    }
    const std::filesystem::path path(name_or_path);
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        std::string names;
        for (const auto& n : preset_names()) {
            names += (names.empty() ? "" : ", ") + n;
        }
        throw ValidationError("preset", "unknown preset or missing config file '" + std::string(name_or_path) +
                                            "'; valid presets: " + names);
    }
    return parse_scenario_config(text::read_file(path), path.stem().string());
}

ScenarioPreset parse_scenario_config(std::string_view text, std::string name)
{
    std::map<std::string, double, std::less<>> values;
    std::size_t line_no = 0;
    for (auto line : text::split(text, '\n')) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = text::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError("line " + std::to_string(line_no), "expected 'key = value'");
        }
        const std::string key(text::trim(line.substr(0, eq)));
        const bool known = find_parameter(key) != nullptr || key == "t_end" ||
                           std::find(std::begin(state_keys), std::end(state_keys), key) != std::end(state_keys);
        if (!known) {
            throw ValidationError(key, "unknown key on line " + std::to_string(line_no));
        }
        if (values.count(key)) {
            throw ValidationError(key, "duplicate key on line " + std::to_string(line_no));
        }
        values[key] = text::parse_double(line.substr(eq + 1), key);
    }

    ParameterSet p;
    for (const auto& f : parameter_fields()) {
        auto it = values.find(f.name);
        if (it == values.end()) {
            throw ValidationError(std::string(f.name), "missing from scenario config");
        }
        p.*f.member = it->second;
    }
    auto get = [&](const char* key, double fallback) {
        auto it = values.find(key);
        return it == values.end() ? fallback : it->second;
    };
    ModelParams params(p);
    const State& ref = reference_initial_state;
    State y0{get("K0", ref.K), get("q0", ref.q), get("theta0", ref.theta), get("H0", ref.H), get("Q0", ref.Q)};
    validate_initial_state(y0, params);
    IntegratorConfig cfg;
    cfg.t_end = get("t_end", cfg.t_end);
    cfg.validate();
    return {name, name, params, y0, cfg};
}

std::string format_scenario_config(const ScenarioPreset& preset)
{
    std::string out = "# scenario " + preset.name + "\n";
    for (const auto& f : parameter_fields()) {
        out += std::string(f.name) + " = " + text::format_double(preset.params.values().*f.member) + "\n";
    }
    const auto y = preset.y0.to_array();
    for (std::size_t i = 0; i < y.size(); ++i) {
        out += std::string(state_keys[i]) + " = " + text::format_double(y[i]) + "\n";
    }
    out += "t_end = " + text::format_double(preset.config.t_end) + "\n";
    return out;
}

NormalizedTrajectory normalize(const Trajectory& traj)
{
    const auto& p = traj.params.values();
    NormalizedTrajectory n;
    n.times = traj.times;
    const auto size = traj.states.size();
    n.K_norm.reserve(size);
    n.q.reserve(size);
    n.theta.reserve(size);
    n.H_norm.reserve(size);
    n.Q_norm.reserve(size);
    for (const auto& s : traj.states) {
        n.K_norm.push_back(s.K / p.K_max);
        n.q.push_back(s.q);
        n.theta.push_back(s.theta);
        n.H_norm.push_back(s.H / p.H_inf);
        n.Q_norm.push_back(s.Q / p.Q_sat);
    }
    return n;
}

std::string_view to_string(Regime r)
{
    switch (r) {
    case Regime::Growth:
        return "growth";
    case Regime::Stagnation:
        return "stagnation";
    case Regime::Decline:
        return "decline";
    case Regime::Oscillatory:
        return "oscillatory";
    case Regime::Mixed:
        return "mixed";
    case Regime::Unclassified:
        return "unclassified";
    }
    return "mixed";
}

int count_prominent_peaks(const std::vector<double>& x, std::size_t first, double min_prominence)
{
    const std::size_t n = x.size();
    int count           = 0;
    std::size_t i       = first + 1;
    while (i + 1 < n) {
        if (!(x[i] > x[i - 1])) {
            ++i;
            continue;
        }
        // plateau-aware: extend over equal values, peak if the run then drops
        std::size_t j = i;
        while (j + 1 < n && x[j + 1] == x[i]) {
            ++j;
        }
        if (j + 1 >= n || !(x[j + 1] < x[i])) {
            i = j + 1;
            continue;
        }
        const double height = x[i];
        double left_min     = height;
        for (std::size_t k = i; k-- > first;) {
            if (x[k] > height) {
                break;
            }
            left_min = std::min(left_min, x[k]);
        }
        double right_min = height;
        for (std::size_t k = j + 1; k < n; ++k) {
            if (x[k] > height) {
                break;
            }
            right_min = std::min(right_min, x[k]);
        }
        if (height - std::max(left_min, right_min) > min_prominence) {
            ++count;
        }
        i = j + 1;
    }
    return count;
}

RegimeLabel classify_regime(const NormalizedTrajectory& traj)
{
    namespace th   = regime_thresholds;
    const auto n   = traj.times.size();
    if (n < th::min_points) {
        throw ValidationError("trajectory", "at least " + std::to_string(th::min_points) +
                                                " points are needed to classify (got " + std::to_string(n) + ")");
    }
    const std::vector<double>* triad[] = {&traj.q, &traj.theta, &traj.H_norm};
    const std::size_t tail_start       = n - n / 5;

    RegimeLabel out;
    auto& d = out.diagnostics;
    for (std::size_t i = 0; i < 3; ++i) {
        d.initial[i]      = triad[i]->front();
        d.final_values[i] = triad[i]->back();
        d.slopes[i]       = least_squares_slope(traj.times, *triad[i], tail_start);
    }
    d.q_peaks      = count_prominent_peaks(traj.q, n / 5, th::prominence);
    d.K_norm_final = traj.K_norm.back();
    d.Q_norm_final = traj.Q_norm.back();

    auto all = [&](auto pred) {
        return std::all_of(std::begin(d.slopes), std::end(d.slopes), pred);
    };
    bool grew = true;
    for (std::size_t i = 0; i < 3; ++i) {
        grew = grew && d.final_values[i] > d.initial[i] * (1.0 + th::growth_margin);
    }

    if (d.q_peaks >= th::peaks) {
        out.regime = Regime::Oscillatory;
    }
    else if (all([](double s) { return s < -th::slope; })) {
        out.regime = Regime::Decline;
    }
    else if (all([](double s) { return s > th::slope; }) || (grew && all([](double s) { return s >= 0.0; }))) {
        out.regime = Regime::Growth;
    }
    else if (all([](double s) { return std::abs(s) <= th::slope; })) {
        out.regime = Regime::Stagnation;
    }
    else {
        out.regime = Regime::Mixed;
    }
    return out;
}

SimulationResult run_scenario(const ScenarioPreset& preset)
{
    Trajectory traj = integrate(preset.y0, preset.params, preset.config);
    NormalizedTrajectory norm = normalize(traj);
    RegimeLabel label;
    if (norm.times.size() >= regime_thresholds::min_points) {
        label = classify_regime(norm);
    }
    else {
        label.regime = Regime::Unclassified;
        auto& d      = label.diagnostics;
        d.initial    = {norm.q.front(), norm.theta.front(), norm.H_norm.front()};
        d.final_values = {norm.q.back(), norm.theta.back(), norm.H_norm.back()};
        d.K_norm_final = norm.K_norm.back();
        d.Q_norm_final = norm.Q_norm.back();
    }
    return {std::move(traj), std::move(norm), label};
}

std::string format_trajectory(const Trajectory& traj)
{
    if (traj.times.empty()) {
        throw ValidationError("trajectory", "cannot export an empty trajectory");
    }
    const auto& p   = traj.params.values();
    std::string out = std::string(trajectory_header) + "\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const auto& s = traj.states[i];
        append_row(out, {traj.times[i], s.K, s.q, s.theta, s.H, s.Q, s.K / p.K_max, s.H / p.H_inf, s.Q / p.Q_sat});
    }
    return out;
}

std::string format_trajectory(const NormalizedTrajectory& traj)
{
    if (traj.times.empty()) {
        throw ValidationError("trajectory", "cannot export an empty trajectory");
    }
    std::string out = std::string(normalized_header) + "\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        append_row(out, {traj.times[i], traj.K_norm[i], traj.q[i], traj.theta[i], traj.H_norm[i], traj.Q_norm[i]});
    }
    return out;
}

void export_trajectory(const Trajectory& traj, const std::filesystem::path& path)
{
    text::write_file_atomic(path, format_trajectory(traj));
}

void export_trajectory(const NormalizedTrajectory& traj, const std::filesystem::path& path)
{
    text::write_file_atomic(path, format_trajectory(traj));
}

std::vector<double> TrajectoryTable::column(std::string_view name) const
{
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
        throw ValidationError(std::string(name), "no such column");
    }
    const auto idx = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        out.push_back(r[idx]);
    }
    return out;
}

TrajectoryTable parse_trajectory(std::string_view content)
{
    TrajectoryTable table;
    auto lines = text::split(content, '\n');
    if (!lines.empty() && lines.back().empty()) {
        lines.pop_back();
    }
    if (lines.empty()) {
        throw ValidationError("trajectory", "empty file");
    }
    const auto header = lines.front();
    if (header != trajectory_header && header != normalized_header) {
        throw ValidationError("header", "unrecognized trajectory header '" + std::string(header) + "'");
    }
    for (auto c : text::split(header, ',')) {
        table.columns.emplace_back(c);
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto cells = text::split(lines[i], ',');
        if (cells.size() != table.columns.size()) {
            throw ValidationError("line " + std::to_string(i + 1), "wrong number of columns");
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            row.push_back(text::parse_double(cells[c], table.columns[c]));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

TrajectoryTable import_trajectory(const std::filesystem::path& path)
{
    return parse_trajectory(text::read_file(path));
}

} // namespace kdyn
