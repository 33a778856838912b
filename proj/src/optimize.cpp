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
#include "kdyn/optimize.hpp"

#include "kdyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace kdyn::optimize
{

std::string_view to_string(Status s)
{
    switch (s) {
    case Status::Converged:
        return "converged";
    case Status::FlatObjective:
        return "flat";
    case Status::MaxIterations:
        return "max_iterations";
    }
    return "max_iterations";
}

namespace
{

double sanitize(double v)
{
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

NelderMeadResult run_simplex(const Objective& f, const std::vector<double>& x0, const NelderMeadOptions& o)
{
    constexpr double reflect = 1.0, expand = 2.0, contract = 0.5, shrink = 0.5;
    const std::size_t n = x0.size();

    NelderMeadResult out;
    auto eval = [&](const std::vector<double>& x) {
        ++out.evaluations;
        return sanitize(f(x));
    };

    std::vector<std::vector<double>> pts(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) {
        pts[i + 1][i] += o.initial_step;
    }
    std::vector<double> vals(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        vals[i] = eval(pts[i]);
    }

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    auto point_at = [&](double coef, const std::vector<double>& worst, std::vector<double>& dst) {
        for (std::size_t j = 0; j < n; ++j) {
            dst[j] = centroid[j] + coef * (centroid[j] - worst[j]);
        }
    };

    out.status = Status::MaxIterations;
    for (out.iterations = 0; out.iterations < o.max_iterations; ++out.iterations) {
        std::iota(order.begin(), order.end(), 0);
        // stable ordering by value then index keeps runs deterministic
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return vals[a] < vals[b];
        });
        const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

        double diameter = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            double d = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                d = std::max(d, std::abs(pts[i][j] - pts[best][j]));
            }
            diameter = std::max(diameter, d);
        }
        if (diameter < o.x_tolerance) {
            out.status = Status::Converged;
            break;
        }
        if (std::isfinite(vals[worst]) &&
            vals[worst] - vals[best] <= o.f_tolerance * std::max(1.0, std::abs(vals[best]))) {
            out.status = Status::FlatObjective;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) {
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) {
                centroid[j] += pts[i][j] / static_cast<double>(n);
            }
        }

        point_at(reflect, pts[worst], trial);
        const double f_r = eval(trial);
        if (f_r < vals[best]) {
            point_at(expand, pts[worst], trial2);
            const double f_e = eval(trial2);
            if (f_e < f_r) {
                pts[worst] = trial2;
                vals[worst] = f_e;
            }
            else {
                pts[worst] = trial;
                vals[worst] = f_r;
            }
            continue;
        }
        if (f_r < vals[second]) {
            pts[worst] = trial;
            vals[worst] = f_r;
            continue;
        }
        const bool outside = f_r < vals[worst];
        point_at(outside ? contract : -contract, pts[worst], trial2);
        const double f_c = eval(trial2);
        if (f_c < (outside ? f_r : vals[worst])) {
            pts[worst] = trial2;
            vals[worst] = f_c;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) {
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) {
                pts[i][j] = pts[best][j] + shrink * (pts[i][j] - pts[best][j]);
            }
            vals[i] = eval(pts[i]);
        }
    }

    const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    out.x = pts[best];
    out.value = vals[best];
    return out;
}

} // namespace

NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& options)
{
    if (x0.empty()) {
        throw ValidationError("x0", "empty starting point");
    }
    NelderMeadResult best = run_simplex(f, x0, options);
    for (int r = 0; r < options.max_restarts; ++r) {
        NelderMeadResult again = run_simplex(f, best.x, options);
        again.iterations += best.iterations;
        again.evaluations += best.evaluations;
        const bool improved = again.value < best.value - options.f_tolerance * std::max(1.0, std::abs(best.value));
        if (again.value <= best.value) {
            best = std::move(again);
        }
        else {
            best.iterations = again.iterations;
            best.evaluations = again.evaluations;
        }
        if (!improved) {
            break;
        }
    }
    return best;
}

LogBox::LogBox(double lo, double hi)
    : m_lo(lo)
    , m_hi(hi)
    , m_log_lo(std::log(lo))
    , m_log_span(std::log(hi) - std::log(lo))
{
    if (!(lo > 0.0) || !(hi > lo)) {
        throw ValidationError("bounds", "LogBox requires 0 < lo < hi");
    }
}

double LogBox::to_bounded(double u) const
{
    const double z = 1.0 / (1.0 + std::exp(-std::clamp(u, -700.0, 700.0)));
    return std::clamp(std::exp(m_log_lo + m_log_span * z), m_lo, m_hi);
}

double LogBox::to_free(double x) const
{
    const double z = std::clamp((std::log(x) - m_log_lo) / m_log_span, 1e-15, 1.0 - 1e-15);
    return std::log(z / (1.0 - z));
}

double LogBox::from_unit(double z) const
{
    return std::clamp(std::exp(m_log_lo + m_log_span * z), m_lo, m_hi);
}

std::uint64_t SeedSequence::next()
{
    std::uint64_t z = (m_state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SeedSequence::uniform()
{
    // 53 random bits, shifted off zero
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace kdyn::optimize
