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
#ifndef KDYN_INTEGRATOR_HPP
#define KDYN_INTEGRATOR_HPP

#include "kdyn/errors.hpp"
#include "kdyn/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace kdyn
{

struct IntegratorConfig {
    double t_end = 1000.0; ///< months; a positive integer, output at 0, 1, ..., t_end
    double rtol  = 1e-6;
    double atol  = 1e-9;
    std::optional<double> max_step; ///< defaults to t_end
    double min_step_factor = 1e-12; ///< minimum step as a fraction of t_end

    std::size_t grid_points() const
    {
        return static_cast<std::size_t>(t_end) + 1;
    }
    double effective_max_step() const
    {
        return max_step.value_or(t_end);
    }
    /// Throws ValidationError.
    void validate() const;

    bool operator==(const IntegratorConfig&) const = default;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    ModelParams params;
};

/// Per-step controller constants.
namespace controller
{
inline constexpr double safety     = 0.9;
inline constexpr double min_factor = 0.2;
inline constexpr double max_factor = 5.0;
/// Roundoff tolerance for q outside [0,1]; larger excursions are failures.
inline constexpr double q_band = 1e-9;
} // namespace controller

namespace dopri
{

template <std::size_t N>
using Vec = std::array<double, N>;

// Dormand-Prince 5(4) tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// 5th-order weights minus embedded 4th-order weights
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;

template <std::size_t N>
struct Step {
    Vec<N> y;     ///< 5th-order advance
    Vec<N> error; ///< 5th minus embedded 4th-order solution
    Vec<N> f_end; ///< f(t + h, y), reusable as the next step's first stage
};

/// One Dormand-Prince step from (t, y) with size h; `f0` = f(t, y).
template <std::size_t N, class Rhs>
Step<N> step(Rhs& f, double t, const Vec<N>& y, double h, const Vec<N>& f0)
{
    Vec<N> tmp;
    auto stage = [&](auto&& combine) {
        for (std::size_t i = 0; i < N; ++i) {
            tmp[i] = y[i] + h * combine(i);
        }
        return tmp;
    };
    const Vec<N>& k1 = f0;
    const Vec<N> k2  = f(t + c2 * h, stage([&](std::size_t i) {
                           return a21 * k1[i];
                       }));
    const Vec<N> k3  = f(t + c3 * h, stage([&](std::size_t i) {
                           return a31 * k1[i] + a32 * k2[i];
                       }));
    const Vec<N> k4  = f(t + c4 * h, stage([&](std::size_t i) {
                           return a41 * k1[i] + a42 * k2[i] + a43 * k3[i];
                       }));
    const Vec<N> k5  = f(t + c5 * h, stage([&](std::size_t i) {
                           return a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i];
                       }));
    const Vec<N> k6  = f(t + h, stage([&](std::size_t i) {
                            return a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i];
                        }));
    Step<N> out;
    out.y = stage([&](std::size_t i) {
        return b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i];
    });
    out.f_end = f(t + h, out.y);
    for (std::size_t i = 0; i < N; ++i) {
        out.error[i] =
            h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * out.f_end[i]);
    }
    return out;
}

/// RMS of error_i / (atol + rtol * max(|y_i|, |y_new_i|)).
template <std::size_t N>
double error_norm(const Vec<N>& error, const Vec<N>& y, const Vec<N>& y_new, double rtol, double atol)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double scale = atol + rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        const double r     = error[i] / scale;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(N));
}

inline double initial_step(const IntegratorConfig& cfg)
{
    return std::min({1.0, cfg.t_end / 100.0, cfg.effective_max_step()});
}

/**
 * Adaptive integration from t = 0 to cfg.t_end, returning the state at every integer
 * time. Steps are capped so that each grid point is hit exactly.
 *
 * `accept(t, y)` runs after each accepted step and may project y (returning true if it
 * changed it) or throw. A stage evaluation throwing DomainError rejects the step.
 */
template <std::size_t N, class Rhs, class Accept>
std::vector<Vec<N>> integrate_grid(Rhs f, const Vec<N>& y0, const IntegratorConfig& cfg, Accept accept)
{
    cfg.validate();
    const std::size_t n_grid = cfg.grid_points();
    const double max_step    = cfg.effective_max_step();
    const double min_step    = cfg.min_step_factor * cfg.t_end;

    std::vector<Vec<N>> out;
    out.reserve(n_grid);
    out.push_back(y0);

    Vec<N> y       = y0;
    double t       = 0.0;
    double h       = initial_step(cfg);
    Vec<N> f0      = f(t, y);
    bool last_bad  = false;
    bool domain_hit = false;

    for (std::size_t g = 1; g < n_grid; ++g) {
        const double t_grid = static_cast<double>(g);
        while (t < t_grid) {
            const double remaining = t_grid - t;
            const bool capped      = std::min(h, max_step) >= remaining;
            const double h_try     = capped ? remaining : std::min(h, max_step);
            if (h_try < min_step) {
                if (domain_hit) {
                    throw DomainExit("integration left the physical domain near t = " + std::to_string(t), t);
                }
                throw StepSizeUnderflow("step size underflow at t = " + std::to_string(t), t);
            }

            Step<N> s;
            try {
                s = step(f, t, y, h_try, f0);
            }
            catch (const DomainError&) {
                domain_hit = true;
                last_bad   = true;
                h          = h_try * 0.25;
                continue;
            }
            catch (const NumericalError& e) {
                if (e.time()) {
                    throw;
                }
                throw NumericalError(e.what() + std::string(" at t = ") + std::to_string(t), t);
            }
            const double err = error_norm(s.error, y, s.y, cfg.rtol, cfg.atol);
            if (!std::isfinite(err)) {
                last_bad = true;
                h        = h_try * controller::min_factor;
                continue;
            }
            if (err <= 1.0) {
                t          = capped ? t_grid : t + h_try;
                y          = s.y;
                f0         = s.f_end;
                domain_hit = false;
                if (accept(t, y)) {
                    f0 = f(t, y);
                }
                double factor = err == 0.0 ? controller::max_factor
                                           : std::clamp(controller::safety * std::pow(err, -0.2),
                                                        controller::min_factor, controller::max_factor);
                if (last_bad) {
                    factor = std::min(factor, 1.0);
                }
                last_bad = false;
                h        = h_try * factor;
            }
            else {
                last_bad = true;
                h        = h_try * std::max(controller::min_factor, controller::safety * std::pow(err, -0.2));
            }
        }
        out.push_back(y);
    }
    return out;
}

} // namespace dopri

/// Integrates the model from y0, returning states at t = 0, 1, ..., config.t_end.
Trajectory integrate(const State& y0, const ModelParams& params, const IntegratorConfig& config);

struct StepOutcome {
    State y_next;
    std::array<double, State::size> error_estimate;
};

/// A single Dormand-Prince step of the model vector field.
StepOutcome step_once(const State& y, double t, double h, const ModelParams& params);

} // namespace kdyn

#endif // KDYN_INTEGRATOR_HPP
