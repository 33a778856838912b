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
#ifndef KDYN_SERVICE_HPP
#define KDYN_SERVICE_HPP

#include "kdyn/scenario.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace kdyn::service
{

inline constexpr int min_t_end = 10;
inline constexpr int max_t_end = 20000;

struct Response {
    int status = 200;
    std::string body; ///< application/json
};

/// Preset catalogue served by the handlers: built-ins, then any extras loaded from a directory.
using Catalog = std::vector<ScenarioPreset>;

/// Built-ins plus every `*.cfg` scenario file in `dir`, sorted by file name.
Catalog load_catalog(const std::optional<std::filesystem::path>& dir = std::nullopt);

/// GET /api/presets: names, labels, parameters, initial states and horizons.
Response handle_presets(const Catalog& catalog);
Response handle_presets();

/**
 * Merges a request document into a preset. Recognised keys: `preset` (default
 * healthy_growth), `params` (parameter overrides), `y0` (K0, q0, theta0, H0, Q0) and
 * `t_end` (integer in [10, 20000]). Throws ValidationError naming the field.
 */
ScenarioPreset resolve_request(const std::string& body, const Catalog& catalog);

/// POST /api/simulate: 200 with trajectory and regime, 400 on validation, 422 on integration failure.
Response handle_simulate(const std::string& body, const Catalog& catalog);
Response handle_simulate(const std::string& body);

/// Response document of a successful simulation.
std::string simulation_json(const ScenarioPreset& preset, const SimulationResult& result);

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port         = 8080; ///< 0 picks a free port
    std::string cors_origin = "http://localhost:5173";
    std::optional<std::filesystem::path> preset_dir;
};

/// HTTP front end over the handlers. Requests run on a worker pool; stop() drains them.
class Server
{
public:
    explicit Server(ServerConfig config);
    ~Server();
    Server(const Server&)            = delete;
    Server& operator=(const Server&) = delete;

    /// Binds the socket; throws IoError when the address is unavailable. Returns the bound port.
    int bind();
    /// Serves until stop(); bind() must have succeeded.
    void run();
    void stop();
    bool running() const;
    int port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> m_impl;
};

} // namespace kdyn::service

#endif // KDYN_SERVICE_HPP
