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
#include "kdyn/service.hpp"

#include "kdyn/errors.hpp"
#include "kdyn/text.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>

namespace kdyn::service
{

using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

json params_json(const ParameterSet& p)
{
    json out = json::object();
    for (const auto& f : parameter_fields()) {
        out[std::string(f.name)] = p.*f.member;
    }
    return out;
}

json state_json(const State& s)
{
    return {{"K0", s.K}, {"q0", s.q}, {"theta0", s.theta}, {"H0", s.H}, {"Q0", s.Q}};
}

json preset_json(const ScenarioPreset& p)
{
    return {{"name", p.name},
            {"label", p.label},
            {"params", params_json(p.params.values())},
            {"y0", state_json(p.y0)},
            {"t_end", p.config.t_end}};
}

Response error_response(int status, const std::string& error, const std::string& field, const std::string& detail)
{
    json body{{"error", error}, {"detail", detail}};
    if (!field.empty()) {
        body["field"] = field;
    }
    return {status, body.dump()};
}

double number_field(const json& v, const std::string& field)
{
    if (!v.is_number()) {
        throw ValidationError(field, "must be a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw ValidationError(field, "must be finite");
    }
    return d;
}

} // namespace

Catalog load_catalog(const std::optional<fs::path>& dir)
{
    Catalog catalog = builtin_presets();
    if (!dir) {
        return catalog;
    }
    std::error_code ec;
    if (!fs::is_directory(*dir, ec)) {
        throw IoError("preset directory '" + dir->string() + "' does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(*dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".cfg") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        auto preset = parse_scenario_config(text::read_file(f), f.stem().string());
        const bool taken = std::any_of(catalog.begin(), catalog.end(), [&](const ScenarioPreset& p) {
            return p.name == preset.name;
        });
        if (taken) {
            throw ValidationError("preset", "duplicate preset name '" + preset.name + "' in " + f.string());
        }
        catalog.push_back(std::move(preset));
    }
    return catalog;
}

Response handle_presets(const Catalog& catalog)
{
    json list = json::array();
    for (const auto& p : catalog) {
        list.push_back(preset_json(p));
    }
    return {200, json{{"presets", list}}.dump()};
}

Response handle_presets()
{
    static const Catalog builtins = load_catalog();
    return handle_presets(builtins);
}

ScenarioPreset resolve_request(const std::string& body, const Catalog& catalog)
{
    json req;
    try {
        req = body.empty() ? json::object() : json::parse(body);
    }
    catch (const json::parse_error& e) {
        throw ValidationError("body", std::string("malformed JSON: ") + e.what());
    }
    if (!req.is_object()) {
        throw ValidationError("body", "expected a JSON object");
    }
    for (const auto& [key, value] : req.items()) {
        if (key != "preset" && key != "params" && key != "y0" && key != "t_end") {
            throw ValidationError(key, "unknown request field");
        }
    }

    std::string name = "healthy_growth";
    if (req.contains("preset")) {
        if (!req["preset"].is_string()) {
            throw ValidationError("preset", "must be a string");
        }
        name = req["preset"].get<std::string>();
    }
    const auto it = std::find_if(catalog.begin(), catalog.end(), [&](const ScenarioPreset& p) {
        return p.name == name;
    });
    if (it == catalog.end()) {
        std::string names;
        for (const auto& p : catalog) {
            names += (names.empty() ? "" : ", ") + p.name;
        }
        throw ValidationError("preset", "unknown preset '" + name + "'; valid presets: " + names);
    }
    ScenarioPreset out = *it;

    if (req.contains("params")) {
        const json& overrides = req["params"];
        if (!overrides.is_object()) {
            throw ValidationError("params", "must be an object");
        }
        ParameterSet values = out.params.values();
        for (const auto& [key, value] : overrides.items()) {
            const ParameterField* field = find_parameter(key);
            if (!field) {
                throw ValidationError(key, "unknown parameter");
            }
            values.*field->member = number_field(value, key);
        }
        out.params = ModelParams(values);
    }

    if (req.contains("y0")) {
        const json& y0 = req["y0"];
        if (!y0.is_object()) {
            throw ValidationError("y0", "must be an object");
        }
        for (const auto& [key, value] : y0.items()) {
            double State::*member = nullptr;
            if (key == "K0") {
                member = &State::K;
            }
            else if (key == "q0") {
                member = &State::q;
            }
            else if (key == "theta0") {
                member = &State::theta;
            }
            else if (key == "H0") {
                member = &State::H;
            }
            else if (key == "Q0") {
                member = &State::Q;
            }
            else {
                throw ValidationError(key, "unknown initial-state field");
            }
            out.y0.*member = number_field(value, key);
        }
    }
    validate_initial_state(out.y0, out.params);

    if (req.contains("t_end")) {
        const double t = number_field(req["t_end"], "t_end");
        if (t != std::floor(t) || t < min_t_end || t > max_t_end) {
            throw ValidationError("t_end", "must be an integer in [" + std::to_string(min_t_end) + ", " +
                                               std::to_string(max_t_end) + "]");
        }
        out.config.t_end = t;
    }
    out.config.validate();
    return out;
}

std::string simulation_json(const ScenarioPreset& preset, const SimulationResult& result)
{
    const auto& n = result.normalized;
    const auto& d = result.regime.diagnostics;
    auto triad    = [](const TriadValues& v) {
        return json{{"q", v[0]}, {"theta", v[1]}, {"H_norm", v[2]}};
    };
    json body{
        {"preset", preset.name},
        {"times", n.times},
        {"K_norm", n.K_norm},
        {"q", n.q},
        {"theta", n.theta},
        {"H_norm", n.H_norm},
        {"Q_norm", n.Q_norm},
        {"regime",
         {{"label", std::string(to_string(result.regime.regime))},
          {"diagnostics",
           {{"initial", triad(d.initial)},
            {"final", triad(d.final_values)},
            {"slopes", triad(d.slopes)},
            {"q_peaks", d.q_peaks},
            {"K_norm_final", d.K_norm_final},
            {"Q_norm_final", d.Q_norm_final}}}}},
        {"params", params_json(preset.params.values())},
        {"y0", state_json(preset.y0)},
        {"t_end", preset.config.t_end},
    };
    return body.dump();
}

Response handle_simulate(const std::string& body, const Catalog& catalog)
{
    ScenarioPreset preset = builtin_presets().front();
    try {
        preset = resolve_request(body, catalog);
    }
    catch (const ValidationError& e) {
        return error_response(400, "validation", e.field(), e.detail());
    }
    try {
        return {200, simulation_json(preset, run_scenario(preset))};
    }
    catch (const NumericalError& e) {
        json out{{"error", "integration"}, {"detail", e.what()}};
        if (e.time()) {
            out["time"] = *e.time();
        }
        return {422, out.dump()};
    }
    catch (const ValidationError& e) {
        return error_response(400, "validation", e.field(), e.detail());
    }
    catch (const DomainError& e) {
        return error_response(422, "domain", "", e.what());
    }
}

Response handle_simulate(const std::string& body)
{
    static const Catalog builtins = load_catalog();
    return handle_simulate(body, builtins);
}

struct Server::Impl {
    ServerConfig config;
    Catalog catalog;
    httplib::Server http;
    int bound_port = -1;
    std::atomic<bool> stop_requested{false};
};

Server::Server(ServerConfig config)
    : m_impl(std::make_unique<Impl>())
{
    m_impl->config  = std::move(config);
    m_impl->catalog = load_catalog(m_impl->config.preset_dir);
    auto& http      = m_impl->http;
    // Plain SO_REUSEADDR: a second server on a taken port must fail to bind.
    http.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    const std::string origin = m_impl->config.cors_origin;

    auto send = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    http.Get("/api/presets", [this, send](const httplib::Request&, httplib::Response& res) {
        send(res, handle_presets(m_impl->catalog));
    });
    http.Post("/api/simulate", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, handle_simulate(req.body, m_impl->catalog));
    });
    http.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.status = 204;
    });
    http.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
        if (!origin.empty()) {
            res.set_header("Access-Control-Allow-Origin", origin);
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.set_header("Vary", "Origin");
        }
    });
}

Server::~Server()
{
    stop();
}

int Server::bind()
{
    auto& c = m_impl->config;
    if (c.port < 0 || c.port > 65535) {
        throw ValidationError("port", "must lie in [0, 65535]");
    }
    int port = c.port;
    if (port == 0) {
        port = m_impl->http.bind_to_any_port(c.host);
    }
    else if (!m_impl->http.bind_to_port(c.host, port)) {
        port = -1;
    }
    if (port < 0) {
        throw IoError("cannot bind " + c.host + ":" + std::to_string(c.port));
    }
    m_impl->bound_port = port;
    return port;
}

void Server::run()
{
    if (m_impl->bound_port < 0) {
        throw IoError("server is not bound");
    }
    if (!m_impl->stop_requested) {
        m_impl->http.listen_after_bind();
    }
}

void Server::stop()
{
    if (m_impl) {
        m_impl->stop_requested = true;
        m_impl->http.stop();
    }
}

bool Server::running() const
{
    return m_impl->http.is_running();
}

int Server::port() const
{
    return m_impl->bound_port;
}

} // namespace kdyn::service
