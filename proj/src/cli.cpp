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
#include "kdyn/cli.hpp"

#include "kdyn/errors.hpp"
#include "kdyn/scenario.hpp"
#include "kdyn/service.hpp"
#include "kdyn/text.hpp"
#include "kdyn/wikimedia.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <pthread.h>
#include <thread>

namespace kdyn::cli
{

using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

std::string fixed(double v, int digits = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

std::string pad(std::string s, std::size_t width)
{
    if (s.size() < width) {
        s.append(width - s.size(), ' ');
    }
    return s;
}

json regime_json(const ScenarioPreset& preset, const SimulationResult& r)
{
    const auto& d = r.regime.diagnostics;
    auto triad    = [](const TriadValues& v) {
        return json{{"q", v[0]}, {"theta", v[1]}, {"H_norm", v[2]}};
    };
    json params = json::object();
    for (const auto& f : parameter_fields()) {
        params[std::string(f.name)] = preset.params.values().*f.member;
    }
    return {{"preset", preset.name},
            {"label", std::string(to_string(r.regime.regime))},
            {"points", r.normalized.times.size()},
            {"diagnostics",
             {{"initial", triad(d.initial)},
              {"final", triad(d.final_values)},
              {"slopes", triad(d.slopes)},
              {"q_peaks", d.q_peaks},
              {"K_norm_final", d.K_norm_final},
              {"Q_norm_final", d.Q_norm_final}}},
            {"params", params},
            {"y0", {{"K0", preset.y0.K}, {"q0", preset.y0.q}, {"theta0", preset.y0.theta}, {"H0", preset.y0.H},
                    {"Q0", preset.y0.Q}}},
            {"t_end", preset.config.t_end},
            {"rtol", preset.config.rtol},
            {"atol", preset.config.atol}};
}

json restart_json(const calibration::RestartRecord& r)
{
    return {{"index", r.index},
            {"seed_point", r.seed_point},
            {"converged_point", r.converged_point},
            {"loss", r.loss},
            {"iterations", r.iterations},
            {"status", std::string(optimize::to_string(r.status))}};
}

json config_json(const calibration::CalibConfig& c)
{
    json out{{"fit_target", std::string(calibration::to_string(c.fit_target))},
             {"gate_enabled", c.gate_enabled},
             {"demand_lag_months", c.demand_lag_months},
             {"kmax_multiplier", c.kmax_multiplier},
             {"joint_delta_K", c.joint_delta_K},
             {"restarts", c.restarts},
             {"rng_seed", c.rng_seed}};
    out["Q_half_override"] = c.Q_half_override ? json(*c.Q_half_override) : json(nullptr);
    return out;
}

json fit_json(const calibration::FitResult& f)
{
    json restarts = json::array();
    for (const auto& r : f.restart_table) {
        restarts.push_back(restart_json(r));
    }
    return {{"era", f.era.label},
            {"start", f.era.start.str()},
            {"end", f.era.end.str()},
            {"alpha_H", f.flow_params.alpha_H},
            {"alpha_A", f.flow_params.alpha_A},
            {"delta_K", f.flow_params.delta_K},
            {"loss", f.loss},
            {"rmse_flow", f.rmse_flow},
            {"rmse_level", f.rmse_level},
            {"config", config_json(f.config)},
            {"restarts", restarts}};
}

std::string config_line(const calibration::CalibConfig& c)
{
    return "target=" + std::string(calibration::to_string(c.fit_target)) +
           " gate=" + (c.gate_enabled ? "on" : "off") + " demand_lag=" + std::to_string(c.demand_lag_months) +
           " kmax_multiplier=" + fixed(c.kmax_multiplier) +
           " Q_half=" + (c.Q_half_override ? fixed(*c.Q_half_override) : std::string("default")) +
           " restarts=" + std::to_string(c.restarts) + " seed=" + std::to_string(c.rng_seed);
}

std::string table_header()
{
    return pad("era", 8) + pad("window", 19) + pad("alpha_H", 14) + pad("alpha_A", 14) + pad("delta_K", 14) +
           pad("RMSE_flow", 14) + pad("RMSE_level", 14) + "loss\n";
}

std::string table_row(const calibration::FitResult& f)
{
    return pad(f.era.label.empty() ? "-" : f.era.label, 8) + pad(f.era.start.str() + ".." + f.era.end.str(), 19) +
           pad(fixed(f.flow_params.alpha_H), 14) + pad(fixed(f.flow_params.alpha_A), 14) +
           pad(fixed(f.flow_params.delta_K), 14) + pad(fixed(f.rmse_flow), 14) + pad(fixed(f.rmse_level), 14) +
           fixed(f.loss) + "\n";
}

void emit(const fs::path& path, std::string_view content)
{
    text::write_file_atomic(path, content);
}

/// argv view over a vector of strings for CLI11.
struct Argv {
    explicit Argv(const std::vector<std::string>& args)
    {
        storage.push_back("kdyn");
        storage.insert(storage.end(), args.begin(), args.end());
        for (auto& s : storage) {
            ptrs.push_back(s.data());
        }
    }
    int argc() const
    {
        return static_cast<int>(ptrs.size());
    }
    char** argv()
    {
        return ptrs.data();
    }
    std::vector<std::string> storage;
    std::vector<char*> ptrs;
};

struct SimulateArgs {
    std::string preset;
    std::optional<double> t_end;
    std::optional<double> rtol;
    std::optional<double> atol;
    std::string out_dir;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& err)
{
    ScenarioPreset preset = load_preset(a.preset);
    if (a.t_end) {
        preset.config.t_end = *a.t_end;
    }
    if (a.rtol) {
        preset.config.rtol = *a.rtol;
    }
    if (a.atol) {
        preset.config.atol = *a.atol;
    }
    preset.config.validate();
    const fs::path dir = a.out_dir.empty() ? fs::path("out") / "simulate" / preset.name : fs::path(a.out_dir);
    const SimulationResult result = run_scenario(preset);
    emit(dir / "trajectory.csv", format_trajectory(result.trajectory));
    emit(dir / "normalized.csv", format_trajectory(result.normalized));
    emit(dir / "regime.json", regime_json(preset, result).dump(2) + "\n");
    err << preset.name << ": " << to_string(result.regime.regime) << " (" << result.normalized.times.size()
        << " points, t_end " << preset.config.t_end << ") -> " << dir.string() << "\n";
    return 0;
}

struct SweepArgs {
    std::string preset;
    std::string x_lever, y_lever;
    std::string x_values, y_values;
    std::optional<double> t_end;
    unsigned threads = 0;
    std::string out_dir;
};

int cmd_sweep(const SweepArgs& a, std::ostream& err)
{
    const ScenarioPreset base = load_preset(a.preset);
    const ParameterField* fx  = find_parameter(a.x_lever);
    const ParameterField* fy  = find_parameter(a.y_lever);
    if (!fx) {
        throw ValidationError("x-lever", "unknown parameter '" + a.x_lever + "'");
    }
    if (!fy) {
        throw ValidationError("y-lever", "unknown parameter '" + a.y_lever + "'");
    }
    if (fx == fy) {
        throw ValidationError("y-lever", "must differ from x-lever");
    }
    const auto xs = parse_grid(a.x_values, "x-values");
    const auto ys = parse_grid(a.y_values, "y-values");
    IntegratorConfig cfg = base.config;
    if (a.t_end) {
        cfg.t_end = *a.t_end;
    }
    cfg.validate();

    struct Cell {
        double x = 0.0, y = 0.0;
        std::string status, regime, error;
        std::array<double, 5> terminal{};
    };
    std::vector<Cell> cells;
    for (double y : ys) {
        for (double x : xs) {
            cells.push_back({x, y, "", "", "", {}});
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            Cell& c = cells[i];
            try {
                ParameterSet values = base.params.values();
                values.*fx->member  = c.x;
                values.*fy->member  = c.y;
                ScenarioPreset p{base.name, base.label, ModelParams(values), base.y0, cfg};
                const auto r = run_scenario(p);
                const auto& n = r.normalized;
                c.terminal    = {n.K_norm.back(), n.q.back(), n.theta.back(), n.H_norm.back(), n.Q_norm.back()};
                c.regime      = std::string(to_string(r.regime.regime));
                c.status      = "ok";
            }
            catch (const std::exception& e) {
                c.status = "failed";
                c.error  = e.what();
                for (char& ch : c.error) {
                    if (ch == ',' || ch == '\n') {
                        ch = ';';
                    }
                }
            }
        }
    };
    unsigned n_threads = a.threads ? a.threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads          = static_cast<unsigned>(std::min<std::size_t>(n_threads, cells.size()));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_threads; ++t) {
            pool.emplace_back(worker);
        }
    }

    std::string grid = a.x_lever + "," + a.y_lever + ",status,regime,K_norm,q,theta,H_norm,Q_norm,error\n";
    std::size_t failed = 0;
    for (const auto& c : cells) {
        grid += text::format_double(c.x) + "," + text::format_double(c.y) + "," + c.status + "," + c.regime;
        for (double v : c.terminal) {
            grid += "," + (c.status == "ok" ? text::format_double(v) : std::string());
        }
        grid += "," + c.error + "\n";
        failed += c.status != "ok";
    }
    const fs::path dir = a.out_dir.empty() ? fs::path("out") / "sweep" / (base.name + "_" + a.x_lever + "_" + a.y_lever)
                                           : fs::path(a.out_dir);
    emit(dir / "grid.csv", grid);
    err << "sweep " << base.name << ": " << cells.size() << " cells, " << failed << " failed -> " << dir.string()
        << "\n";
    return 0;
}

struct FetchArgs {
    bool live = false, offline = false, fixture = false, permissive = false;
    std::string era = "both";
    std::string start, end, label = "custom";
    std::string cache_dir, fixture_dir, write_fixture, base_url, out_dir;
};

int cmd_fetch_data(const FetchArgs& a, std::ostream& err)
{
    if (int(a.live) + int(a.offline) + int(a.fixture) > 1) {
        throw ValidationError("mode", "choose one of --live, --offline, --fixture");
    }
    wikimedia::ClientConfig config;
    if (!a.base_url.empty()) {
        config.base_url = a.base_url;
    }
    std::vector<EraWindow> windows;
    if (a.era == "pre" || a.era == "both") {
        windows.push_back(EraWindow::pre_chatgpt());
    }
    if (a.era == "post" || a.era == "both") {
        windows.push_back(EraWindow::post_chatgpt());
    }
    if (a.era == "custom") {
        if (a.start.empty() || a.end.empty()) {
            throw ValidationError("era", "custom eras need --start and --end");
        }
        windows.push_back({YearMonth::parse(a.start, "start"), YearMonth::parse(a.end, "end"), a.label});
    }
    if (windows.empty()) {
        throw ValidationError("era", "expected pre, post, both or custom");
    }

    fs::path cache = a.cache_dir;
    if (cache.empty()) {
        const char* env = std::getenv(cache_dir_env);
        cache           = env && *env ? fs::path(env) : fs::path("cache");
    }
    wikimedia::Mode mode = wikimedia::Mode::Fixture;
    fs::path root        = a.fixture_dir.empty() ? wikimedia::default_fixture_dir() : fs::path(a.fixture_dir);
    if (a.live || a.offline) {
        mode = a.live ? wikimedia::Mode::Live : wikimedia::Mode::Offline;
        root = cache;
    }
    else if (!fs::exists(root / "manifest.json")) {
        throw IoError("no pinned fixture at " + root.string() + " (see data/fixtures/wikipedia/README.md)");
    }
    wikimedia::Client client(config, root, mode);
    const fs::path dir = a.out_dir.empty() ? fs::path("out") / "fetch-data" : fs::path(a.out_dir);
    for (const auto& w : windows) {
        const auto era = wikimedia::load_era(client, w, a.permissive);
        emit(dir / (w.label + ".json"), wikimedia::format_era_file(era));
        err << w.label << ": " << era.series.size() << " months, K0 " << fixed(era.K0, 10) << ", K_max "
            << fixed(era.K_max, 10) << " (" << to_string(era.series.provenance.begin()->second.source) << ") -> "
            << (dir / (w.label + ".json")).string() << "\n";
    }
    if (!a.write_fixture.empty()) {
        if (mode == wikimedia::Mode::Fixture) {
            throw ValidationError("write-fixture", "needs --live or --offline");
        }
        wikimedia::write_fixture(root, a.write_fixture, config);
        err << "fixture written to " << a.write_fixture << "\n";
    }
    return 0;
}

struct CalibrateArgs {
    std::string pre, post;
    std::string target = "flow";
    bool no_gate = false, joint = false;
    int demand_lag = 0;
    double kmax_multiplier = 1.25;
    std::optional<double> q_half;
    std::string variants = "none";
    int restarts = 16;
    std::uint64_t seed = 0;
    std::string out_dir;
};

calibration::CalibFixedBlock fixed_from(const wikimedia::EraDataset& era)
{
    calibration::CalibFixedBlock f;
    f.K0    = era.K0;
    f.K_max = era.K_max;
    return f;
}

int cmd_calibrate(const CalibrateArgs& a, std::ostream& err)
{
    if (a.pre.empty() && a.post.empty()) {
        throw ValidationError("pre", "give --pre and/or --post era files");
    }
    calibration::CalibConfig cfg;
    if (a.target == "flow") {
        cfg.fit_target = calibration::FitTarget::Flow;
    }
    else if (a.target == "level") {
        cfg.fit_target = calibration::FitTarget::Level;
    }
    else {
        throw ValidationError("target", "expected flow or level");
    }
    cfg.gate_enabled      = !a.no_gate;
    cfg.demand_lag_months = a.demand_lag;
    cfg.kmax_multiplier   = a.kmax_multiplier;
    cfg.Q_half_override   = a.q_half;
    cfg.joint_delta_K     = a.joint;
    cfg.restarts          = a.restarts;
    cfg.rng_seed          = a.seed;
    cfg.validate();

    std::vector<wikimedia::EraDataset> eras;
    for (const auto& path : {a.pre, a.post}) {
        if (!path.empty()) {
            eras.push_back(wikimedia::parse_era_file(text::read_file(path)));
        }
    }
    const fs::path dir =
        a.out_dir.empty() ? fs::path("out") / "calibrate" / ("seed" + std::to_string(a.seed)) : fs::path(a.out_dir);

    std::string report = "kdyn calibration report\n" + config_line(cfg) + "\n\n";
    std::string machine;
    if (a.variants == "all") {
        if (eras.size() != 2) {
            throw ValidationError("variants", "the variant matrix needs both --pre and --post");
        }
        const auto m = calibration::run_variant_matrix(eras[0].series, fixed_from(eras[0]), eras[1].series,
                                                       fixed_from(eras[1]), cfg);
        report += format_variant_report(m);
        machine = variant_report_json(m);
        err << "variant matrix: " << m.rows.size() << " rows plus joint delta_K -> " << dir.string() << "\n";
    }
    else if (a.variants != "none") {
        throw ValidationError("variants", "expected all or none");
    }
    else if (cfg.joint_delta_K) {
        if (eras.size() != 2) {
            throw ValidationError("joint-delta", "needs both --pre and --post");
        }
        const auto j = calibration::fit_joint_delta(eras[0].series, fixed_from(eras[0]), eras[1].series,
                                                    fixed_from(eras[1]), cfg, eras[0].window, eras[1].window);
        report += format_fit_report({j.pre, j.post});
        report += "\nshared delta_K " + fixed(j.delta_K) + ", joint loss " + fixed(j.loss) + "\n";
        json doc       = json::parse(fit_report_json({j.pre, j.post}));
        doc["joint"]   = {{"delta_K", j.delta_K}, {"loss", j.loss}};
        json restarts  = json::array();
        for (const auto& r : j.restart_table) {
            restarts.push_back(restart_json(r));
        }
        doc["joint"]["restarts"] = restarts;
        machine                  = doc.dump(2) + "\n";
        err << "joint delta_K " << fixed(j.delta_K) << " -> " << dir.string() << "\n";
    }
    else {
        std::vector<calibration::FitResult> fits;
        for (const auto& era : eras) {
            fits.push_back(calibration::fit(era.series, fixed_from(era), cfg, era.window));
        }
        report += format_fit_report(fits);
        machine = fit_report_json(fits);
        for (const auto& f : fits) {
            err << f.era.label << ": alpha_H " << fixed(f.flow_params.alpha_H) << ", alpha_A "
                << fixed(f.flow_params.alpha_A) << ", delta_K " << fixed(f.flow_params.delta_K) << ", RMSE "
                << fixed(f.rmse_flow) << "\n";
        }
    }
    emit(dir / "report.txt", report);
    emit(dir / "report.json", machine);
    return 0;
}

struct ServeArgs {
    std::string host = "127.0.0.1";
    int port         = 8080;
    std::string cors_origin = "http://localhost:5173";
    std::string preset_dir;
};

int cmd_serve(const ServeArgs& a, std::ostream& err)
{
    service::ServerConfig cfg;
    cfg.host        = a.host;
    cfg.port        = a.port;
    cfg.cors_origin = a.cors_origin;
    if (!a.preset_dir.empty()) {
        cfg.preset_dir = a.preset_dir;
    }
    service::Server server(cfg);
    const int port = server.bind();

    // SIGINT/SIGTERM are taken synchronously by a watcher thread that stops the server.
    sigset_t set, old;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, &old);
    std::atomic<bool> done{false};
    std::thread watcher([&]() {
        const timespec tick{0, 200'000'000};
        while (!done) {
            if (sigtimedwait(&set, nullptr, &tick) > 0) {
                server.stop();
                return;
            }
        }
    });
    err << "serving on http://" << a.host << ":" << port << " (GET /api/presets, POST /api/simulate)" << std::endl;
    server.run();
    done = true;
    watcher.join();
    pthread_sigmask(SIG_SETMASK, &old, nullptr);
    err << "server stopped\n";
    return 0;
}

} // namespace

ExitCode exit_code_for(std::exception_ptr error)
{
    try {
        std::rethrow_exception(error);
    }
    catch (const ValidationError&) {
        return ExitCode::Validation;
    }
    catch (const DomainError&) {
        return ExitCode::Validation;
    }
    catch (const NumericalError&) {
        return ExitCode::Numerical;
    }
    catch (const IoError&) {
        return ExitCode::Io;
    }
    catch (const fs::filesystem_error&) {
        return ExitCode::Io;
    }
    catch (const CLI::ParseError&) {
        return ExitCode::Validation;
    }
    catch (...) {
        return ExitCode::Validation;
    }
}

std::vector<double> parse_grid(std::string_view spec, std::string_view field)
{
    std::vector<double> out;
    const auto colon = text::split(spec, ':');
    if (colon.size() == 3) {
        const double lo = text::parse_double(text::trim(colon[0]), field);
        const double hi = text::parse_double(text::trim(colon[1]), field);
        const double n  = text::parse_double(text::trim(colon[2]), field);
        if (n < 1 || n != std::floor(n) || n > 10000) {
            throw ValidationError(std::string(field), "point count must be an integer in [1, 10000]");
        }
        const auto count = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
        }
        return out;
    }
    if (colon.size() != 1) {
        throw ValidationError(std::string(field), "expected a comma list or lo:hi:n");
    }
    for (auto token : text::split(spec, ',')) {
        token = text::trim(token);
        if (!token.empty()) {
            out.push_back(text::parse_double(token, field));
        }
    }
    if (out.empty()) {
        throw ValidationError(std::string(field), "grid is empty");
    }
    return out;
}

std::string format_fit_report(const std::vector<calibration::FitResult>& fits)
{
    std::string out = table_header();
    for (const auto& f : fits) {
        out += table_row(f);
    }
    for (const auto& f : fits) {
        std::size_t converged = 0;
        for (const auto& r : f.restart_table) {
            converged += r.status != optimize::Status::MaxIterations;
        }
        out += "\n" + (f.era.label.empty() ? std::string("-") : f.era.label) + ": " + std::to_string(converged) +
               "/" + std::to_string(f.restart_table.size()) + " restarts converged\n";
    }
    return out;
}

std::string format_variant_report(const calibration::VariantMatrix& m)
{
    std::string out;
    for (const auto& row : m.rows) {
        out += "[" + row.name + "] " + config_line(row.config) + "\n" + table_header();
        for (const auto* cell : {&row.pre, &row.post}) {
            out += cell->result ? table_row(*cell->result) : "failed: " + cell->error + "\n";
        }
        out += "\n";
    }
    out += "[joint_delta_K]\n";
    if (m.joint) {
        out += table_header() + table_row(m.joint->pre) + table_row(m.joint->post);
        out += "shared delta_K " + fixed(m.joint->delta_K) + ", joint loss " + fixed(m.joint->loss) + "\n";
    }
    else {
        out += "failed: " + m.joint_error + "\n";
    }
    return out;
}

std::string fit_report_json(const std::vector<calibration::FitResult>& fits)
{
    json list = json::array();
    for (const auto& f : fits) {
        list.push_back(fit_json(f));
    }
    return json{{"fits", list}}.dump(2) + "\n";
}

std::string variant_report_json(const calibration::VariantMatrix& m)
{
    json rows = json::array();
    for (const auto& row : m.rows) {
        json r{{"name", row.name}, {"config", config_json(row.config)}};
        r["pre"]  = row.pre.result ? fit_json(*row.pre.result) : json{{"error", row.pre.error}};
        r["post"] = row.post.result ? fit_json(*row.post.result) : json{{"error", row.post.error}};
        rows.push_back(r);
    }
    json joint;
    if (m.joint) {
        json restarts = json::array();
        for (const auto& r : m.joint->restart_table) {
            restarts.push_back(restart_json(r));
        }
        joint = {{"delta_K", m.joint->delta_K},
                 {"loss", m.joint->loss},
                 {"pre", fit_json(m.joint->pre)},
                 {"post", fit_json(m.joint->post)},
                 {"restarts", restarts}};
    }
    else {
        joint = {{"error", m.joint_error}};
    }
    return json{{"variants", rows}, {"joint_delta_K", joint}}.dump(2) + "\n";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"kdyn: knowledge-ecosystem dynamics simulator and Wikipedia calibration toolkit.\n"
                 "Time is measured in months throughout."};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every command");

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Integrate one scenario and classify its regime");
    c_sim->add_option("--preset", sim.preset, "Built-in preset name or scenario config file path")->required();
    c_sim->add_option("--t-end", sim.t_end, "Horizon in months (positive integer; grid step 1 month)");
    c_sim->add_option("--rtol", sim.rtol, "Relative tolerance (dimensionless, default 1e-6)");
    c_sim->add_option("--atol", sim.atol, "Absolute tolerance (state units, default 1e-9)");
    c_sim->add_option("--out", sim.out_dir, "Output directory (default out/simulate/<preset>)");

    SweepArgs sw;
    auto* c_sw = app.add_subcommand("sweep", "Two-lever parameter grid over a base preset");
    c_sw->add_option("--preset", sw.preset, "Base preset name or config file path")->required();
    c_sw->add_option("--x-lever", sw.x_lever, "First parameter name (e.g. alpha_H)")->required();
    c_sw->add_option("--x-values", sw.x_values, "Values in the parameter's units: a,b,c or lo:hi:n")->required();
    c_sw->add_option("--y-lever", sw.y_lever, "Second parameter name")->required();
    c_sw->add_option("--y-values", sw.y_values, "Values in the parameter's units: a,b,c or lo:hi:n")->required();
    c_sw->add_option("--t-end", sw.t_end, "Horizon in months");
    c_sw->add_option("--threads", sw.threads, "Worker threads (count, default logical cores)");
    c_sw->add_option("--out", sw.out_dir, "Output directory (default out/sweep/<preset>_<x>_<y>)");

    FetchArgs fe;
    auto* c_fe = app.add_subcommand("fetch-data", "Assemble monthly Wikipedia era files");
    c_fe->add_flag("--fixture", fe.fixture, "Replay the pinned snapshot (default)");
    c_fe->add_flag("--live", fe.live, "Query the Wikimedia API, reading and filling the cache");
    c_fe->add_flag("--offline", fe.offline, "Use the cache only");
    c_fe->add_option("--era", fe.era, "pre, post, both or custom")->capture_default_str();
    c_fe->add_option("--start", fe.start, "Custom era first month (YYYY-MM)");
    c_fe->add_option("--end", fe.end, "Custom era last month (YYYY-MM, inclusive)");
    c_fe->add_option("--label", fe.label, "Custom era label (file name)")->capture_default_str();
    c_fe->add_option("--cache-dir", fe.cache_dir,
                     std::string("Cache directory (default $") + cache_dir_env + " or ./cache)");
    c_fe->add_option("--fixture-dir", fe.fixture_dir, "Pinned snapshot directory");
    c_fe->add_option("--write-fixture", fe.write_fixture, "Snapshot the cached eras into this directory");
    c_fe->add_option("--base-url", fe.base_url, "API base URL");
    c_fe->add_flag("--permissive", fe.permissive, "Allow month gaps after the inner join");
    c_fe->add_option("--out", fe.out_dir, "Output directory (default out/fetch-data)");

    CalibrateArgs ca;
    auto* c_ca = app.add_subcommand("calibrate", "Fit (alpha_H, alpha_A, delta_K) to era files");
    c_ca->add_option("--pre", ca.pre, "Pre-era file from fetch-data");
    c_ca->add_option("--post", ca.post, "Post-era file from fetch-data");
    c_ca->add_option("--target", ca.target, "Fit target: flow (pages/month) or level (pages)")
        ->capture_default_str();
    c_ca->add_flag("--no-gate", ca.no_gate, "Disable the admission gate (g = 1)");
    c_ca->add_option("--demand-lag", ca.demand_lag, "Demand lag in months (0 or 1)")->capture_default_str();
    c_ca->add_option("--kmax-multiplier", ca.kmax_multiplier, "K_max multiplier (1.25 or 1.50)")
        ->capture_default_str();
    c_ca->add_option("--q-half", ca.q_half, "Q_half override (millions of views/month)");
    c_ca->add_flag("--joint-delta", ca.joint, "Share delta_K across both eras");
    c_ca->add_option("--variants", ca.variants, "all runs the full variant matrix; none fits once")
        ->capture_default_str();
    c_ca->add_option("--restarts", ca.restarts, "Multi-start count")->capture_default_str();
    c_ca->add_option("--seed", ca.seed, "Restart seed (unsigned integer)")->capture_default_str();
    c_ca->add_option("--out", ca.out_dir, "Output directory (default out/calibrate/seed<seed>)");

    ServeArgs se;
    auto* c_se = app.add_subcommand("serve", "Run the simulation HTTP API until interrupted");
    c_se->add_option("--host", se.host, "Bind address")->capture_default_str();
    c_se->add_option("--port", se.port, "TCP port (0 picks a free one)")->capture_default_str();
    c_se->add_option("--cors-origin", se.cors_origin, "Allowed browser origin (empty disables CORS)")
        ->capture_default_str();
    c_se->add_option("--preset-dir", se.preset_dir, "Directory of extra *.cfg scenario presets");

    Argv argv(args);
    try {
        app.parse(argv.argc(), argv.argv());
    }
    catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    }
    catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    }
    catch (const CLI::ParseError& e) {
        // Subcommand help requests surface here as CallForHelp from the subcommand.
        err << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::Validation);
    }

    try {
        if (*c_sim) {
            return cmd_simulate(sim, err);
        }
        if (*c_sw) {
            return cmd_sweep(sw, err);
        }
        if (*c_fe) {
            return cmd_fetch_data(fe, err);
        }
        if (*c_ca) {
            return cmd_calibrate(ca, err);
        }
        return cmd_serve(se, err);
    }
    catch (...) {
        const auto code = exit_code_for(std::current_exception());
        try {
            throw;
        }
        catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
        }
        catch (...) {
            err << "error: unknown failure\n";
        }
        return static_cast<int>(code);
    }
}

} // namespace kdyn::cli
