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
#include "kdyn/model.hpp"

#include "kdyn/errors.hpp"

#include <algorithm>
#include <cmath>

namespace kdyn
{

namespace
{

constexpr double exp_clamp = 700.0;

double clamped_exp(double x)
{
    return std::exp(std::clamp(x, -exp_clamp, exp_clamp));
}

std::string describe(Bound b)
{
    switch (b) {
    case Bound::NonNegative:
        return "must be finite and >= 0";
    case Bound::Positive:
        return "must be finite and > 0";
    case Bound::UnitInterval:
        return "must lie in [0, 1]";
    case Bound::Finite:
        return "must be finite";
    }
    return {};
}

bool satisfies(double v, Bound b)
{
    if (!std::isfinite(v)) {
        return false;
    }
    switch (b) {
    case Bound::NonNegative:
        return v >= 0.0;
    case Bound::Positive:
        return v > 0.0;
    case Bound::UnitInterval:
        return v >= 0.0 && v <= 1.0;
    case Bound::Finite:
        return true;
    }
    return false;
}

} // namespace

const std::array<ParameterField, parameter_count>& parameter_fields()
{
    using P = ParameterSet;
    static const std::array<ParameterField, parameter_count> fields = {{
        {"alpha_H", &P::alpha_H, Bound::NonNegative},
        {"alpha_A", &P::alpha_A, Bound::NonNegative},
        {"delta_K", &P::delta_K, Bound::NonNegative},
        {"q_H", &P::q_H, Bound::UnitInterval},
        {"delta_q", &P::delta_q, Bound::NonNegative},
        {"eta_sup", &P::eta_sup, Bound::NonNegative},
        {"eta_RLHF", &P::eta_RLHF, Bound::NonNegative},
        {"theta_max", &P::theta_max, Bound::Positive},
        {"theta_mid", &P::theta_mid, Bound::Finite},
        {"K_max", &P::K_max, Bound::Positive},
        {"Q_half", &P::Q_half, Bound::Positive},
        {"beta_K", &P::beta_K, Bound::NonNegative},
        {"beta_A", &P::beta_A, Bound::NonNegative},
        {"gamma_H", &P::gamma_H, Bound::NonNegative},
        {"H_inf", &P::H_inf, Bound::Positive},
        {"hill_beta", &P::hill_beta, Bound::Positive},
        {"K_half", &P::K_half, Bound::Positive},
        {"Q_sat", &P::Q_sat, Bound::Positive},
        {"xi_0", &P::xi_0, Bound::NonNegative},
        {"kappa_H", &P::kappa_H, Bound::NonNegative},
        {"T_difficulty", &P::T_difficulty, Bound::NonNegative},
        {"rho_Q", &P::rho_Q, Bound::NonNegative},
        {"a_0", &P::a_0, Bound::UnitInterval},
        {"kappa_gate", &P::kappa_gate, Bound::NonNegative},
    }};
    return fields;
}

const ParameterField* find_parameter(std::string_view name)
{
    const auto& fields = parameter_fields();
    auto it = std::find_if(fields.begin(), fields.end(), [&](const ParameterField& f) {
        return f.name == name;
    });
    return it == fields.end() ? nullptr : &*it;
}

void validate(const ParameterSet& p)
{
    for (const auto& f : parameter_fields()) {
        if (!satisfies(p.*f.member, f.bound)) {
            throw ValidationError(std::string(f.name), describe(f.bound) + " (got " + std::to_string(p.*f.member) + ")");
        }
    }
}

ModelParams::ModelParams(const ParameterSet& values)
    : m_values(values)
{
    validate(m_values);
}

bool in_domain(const State& s, const ModelParams& p, double band)
{
    const auto all_finite = std::isfinite(s.K) && std::isfinite(s.q) && std::isfinite(s.theta) &&
                            std::isfinite(s.H) && std::isfinite(s.Q);
    return all_finite && s.K >= -band && s.q >= -band && s.q <= 1.0 + band && s.theta >= -band &&
           s.theta <= p->theta_max + band && s.H >= -band && s.Q >= -band;
}

void validate_initial_state(const State& s, const ModelParams& p)
{
    auto check = [](double v, bool ok, const char* name, const char* what) {
        if (!std::isfinite(v) || !ok) {
            throw ValidationError(name, std::string(what) + " (got " + std::to_string(v) + ")");
        }
    };
    check(s.K, s.K > archive_floor, "K0", "must be > 0");
    check(s.q, s.q >= 0.0 && s.q <= 1.0, "q0", "must lie in [0, 1]");
    check(s.theta, s.theta >= 0.0 && s.theta <= p->theta_max, "theta0", "must lie in [0, theta_max]");
    check(s.H, s.H >= 0.0, "H0", "must be >= 0");
    check(s.Q, s.Q >= 0.0, "Q0", "must be >= 0");
}

double sigma(double theta, const ModelParams& p)
{
    return 1.0 / (1.0 + clamped_exp(-(theta - p->theta_mid)));
}

double answer_accuracy(double theta, double q, const ModelParams& p)
{
    return sigma(theta, p) * q;
}

double gate(double accuracy, const ModelParams& p)
{
    return 1.0 / (1.0 + clamped_exp(-p->kappa_gate * (accuracy - p->a_0)));
}

double theta_star(double K, double q, const ModelParams& p)
{
    return p->theta_max * std::log1p(K) / std::log1p(p->K_max) * q;
}

double rlhf_gain(double theta, double Q, const ModelParams& p)
{
    return Q / (Q + p->Q_half) * (p->theta_max - theta);
}

double human_ceiling(double K, double q, const ModelParams& p)
{
    const double x = q * K;
    if (x <= 0.0) {
        return 0.0;
    }
    // H_inf x^b / (K_half^b + x^b), written to avoid overflowing x^b
    return p->H_inf / (1.0 + std::pow(p->K_half / x, p->hill_beta));
}

double tutor_saturation(double Q, const ModelParams& p)
{
    return Q / (Q + p->Q_sat);
}

double baseline_query_rate(double H, const ModelParams& p)
{
    return p->xi_0 * (1.0 + p->T_difficulty) * clamped_exp(-p->kappa_H * H);
}

Derivative vector_field(const State& s, const ModelParams& p)
{
    if (!(s.K >= archive_floor)) {
        throw DomainError("vector_field: archive size K = " + std::to_string(s.K) + " is below the positivity floor");
    }
    const auto& v = *p;

    const double a          = answer_accuracy(s.theta, s.q, p);
    const double human_flow = v.alpha_H * s.H;
    const double ai_flow    = v.alpha_A * s.Q * gate(a, p);

    Derivative d;
    d.dK     = human_flow + ai_flow - v.delta_K * s.K;
    d.dq     = human_flow / s.K * (v.q_H - s.q) + ai_flow / s.K * (a - s.q) - v.delta_q * s.q;
    d.dtheta = v.eta_sup * (theta_star(s.K, s.q, p) - s.theta) + v.eta_RLHF * rlhf_gain(s.theta, s.Q, p);
    d.dH     = v.beta_K * (human_ceiling(s.K, s.q, p) - s.H) + v.beta_A * a * tutor_saturation(s.Q, p) -
           v.gamma_H * s.H;
    d.dQ = baseline_query_rate(s.H, p) - v.rho_Q * s.Q;

    for (double c : d.to_array()) {
        if (!std::isfinite(c)) {
            throw NumericalError("vector_field: non-finite derivative");
        }
    }
    return d;
}

} // namespace kdyn
