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
#include "kdyn/integrator.hpp"

#include <cmath>
#include <string>

namespace kdyn
{

void IntegratorConfig::validate() const
{
    if (!std::isfinite(t_end) || t_end < 1.0 || t_end != std::floor(t_end)) {
        throw ValidationError("t_end", "must be a positive whole number of months (got " + std::to_string(t_end) + ")");
    }
    if (!(rtol > 0.0) || !std::isfinite(rtol)) {
        throw ValidationError("rtol", "must be > 0");
    }
    if (!(atol > 0.0) || !std::isfinite(atol)) {
        throw ValidationError("atol", "must be > 0");
    }
    if (max_step && !(*max_step > 0.0)) {
        throw ValidationError("max_step", "must be > 0");
    }
    if (!(min_step_factor > 0.0) || min_step_factor >= 1.0) {
        throw ValidationError("min_step_factor", "must lie in (0, 1)");
    }
}

namespace
{

using Vec5 = dopri::Vec<State::size>;

auto model_rhs(const ModelParams& params)
{
    return [&params](double, const Vec5& y) {
        return vector_field(State::from_array(y), params).to_array();
    };
}

} // namespace

Trajectory integrate(const State& y0, const ModelParams& params, const IntegratorConfig& config)
{
    validate_initial_state(y0, params);

    auto accept = [&params](double t, Vec5& y) {
        if (!(y[0] >= archive_floor)) {
            throw DomainExit("archive size fell below the positivity floor at t = " + std::to_string(t), t);
        }
        double& q = y[1];
        if (q >= 0.0 && q <= 1.0) {
            return false;
        }
        if (q < -controller::q_band || q > 1.0 + controller::q_band || !std::isfinite(q)) {
            throw DomainExit("archive quality left [0, 1] at t = " + std::to_string(t) + " (q = " + std::to_string(q) + ")",
                             t);
        }
        q = std::clamp(q, 0.0, 1.0);
        return true;
    };

    auto rows = dopri::integrate_grid<State::size>(model_rhs(params), y0.to_array(), config, accept);

    Trajectory traj{{}, {}, params};
    traj.times.reserve(rows.size());
    traj.states.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        traj.times.push_back(static_cast<double>(i));
        traj.states.push_back(State::from_array(rows[i]));
    }
    return traj;
}

StepOutcome step_once(const State& y, double t, double h, const ModelParams& params)
{
    if (!(h > 0.0)) {
        throw ValidationError("h", "step size must be > 0");
    }
    auto f        = model_rhs(params);
    const auto y0 = y.to_array();
    const auto s  = dopri::step<State::size>(f, t, y0, h, f(t, y0));
    return {State::from_array(s.y), s.error};
}

} // namespace kdyn
