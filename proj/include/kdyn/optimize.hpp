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
#ifndef KDYN_OPTIMIZE_HPP
#define KDYN_OPTIMIZE_HPP

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

namespace kdyn::optimize
{

enum class Status
{
    Converged,     ///< simplex diameter below tolerance
    FlatObjective, ///< function values across the simplex agree to tolerance
    MaxIterations,
};

std::string_view to_string(Status s);

struct NelderMeadOptions {
    double initial_step  = 1.0;
    double x_tolerance   = 1e-10; ///< simplex diameter
    double f_tolerance   = 1e-13; ///< relative spread of simplex values
    int max_iterations   = 2000;
    int max_restarts     = 3; ///< re-seed the simplex at the optimum while it keeps improving
};

struct NelderMeadResult {
    std::vector<double> x;
    double value   = 0.0;
    int iterations = 0;
    int evaluations = 0;
    Status status  = Status::MaxIterations;
};

using Objective = std::function<double(const std::vector<double>&)>;

/// Unconstrained Nelder-Mead. Non-finite objective values rank as worst.
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& options = {});

/**
 * Maps an unconstrained coordinate onto [lo, hi] through a logistic on the
 * log scale: x = exp(log lo + (log hi - log lo) * sigmoid(u)). Requires 0 < lo < hi.
 */
class LogBox
{
public:
    LogBox(double lo, double hi);

    double lo() const
    {
        return m_lo;
    }
    double hi() const
    {
        return m_hi;
    }
    double to_bounded(double u) const;
    double to_free(double x) const;
    /// Position in [0, 1] on the log scale.
    double from_unit(double z) const;

private:
    double m_lo, m_hi, m_log_lo, m_log_span;
};

/// splitmix64; fixed output for a given seed on every platform.
class SeedSequence
{
public:
    explicit SeedSequence(std::uint64_t seed)
        : m_state(seed)
    {
    }
    std::uint64_t next();
    /// Uniform in the open interval (0, 1).
    double uniform();

private:
    std::uint64_t m_state;
};

} // namespace kdyn::optimize

#endif // KDYN_OPTIMIZE_HPP
