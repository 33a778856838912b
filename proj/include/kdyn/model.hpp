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
#ifndef KDYN_MODEL_HPP
#define KDYN_MODEL_HPP

#include <array>
#include <span>
#include <string>
#include <string_view>

namespace kdyn
{

/**
 * Raw parameter record of the five-state knowledge model.
 *
 * Rates are per month. Unvalidated; wrap in ModelParams before use.
 */
struct ParameterSet {
    double alpha_H      = 0.0; ///< archive items per unit human skill
    double alpha_A      = 0.0; ///< archive items per admitted AI answer
    double delta_K      = 0.0; ///< archive obsolescence
    double q_H          = 0.0; ///< intrinsic quality of human content, [0,1]
    double delta_q      = 0.0; ///< quality drift
    double eta_sup      = 0.0; ///< supervised learning rate
    double eta_RLHF     = 0.0; ///< feedback learning rate
    double theta_max    = 1.0; ///< model skill ceiling
    double theta_mid    = 0.0; ///< logistic midpoint of the skill curve
    double K_max        = 1.0; ///< reference corpus size
    double Q_half       = 1.0; ///< RLHF half-saturation
    double beta_K       = 0.0; ///< archive-study learning rate
    double beta_A       = 0.0; ///< AI-tutoring learning rate
    double gamma_H      = 0.0; ///< skill forgetting
    double H_inf        = 1.0; ///< human skill ceiling
    double hill_beta    = 1.0; ///< Hill exponent
    double K_half       = 1.0; ///< human-ceiling half-saturation
    double Q_sat        = 1.0; ///< tutoring half-saturation
    double xi_0         = 0.0; ///< baseline query generation
    double kappa_H      = 0.0; ///< skill sensitivity of query demand
    double T_difficulty = 0.0; ///< task difficulty
    double rho_Q        = 0.0; ///< query dissipation
    double a_0          = 0.0; ///< gate threshold, [0,1]
    double kappa_gate   = 0.0; ///< gate steepness

    bool operator==(const ParameterSet&) const = default;
};

enum class Bound
{
    NonNegative,
    Positive,
    UnitInterval,
    Finite,
};

struct ParameterField {
    std::string_view name;
    double ParameterSet::*member;
    Bound bound;
};

inline constexpr std::size_t parameter_count = 24;

/// Name, member and bound of every parameter, in declaration order.
const std::array<ParameterField, parameter_count>& parameter_fields();

/// Looks up a field by name; nullptr when unknown.
const ParameterField* find_parameter(std::string_view name);

/// Checks every bound, throwing ValidationError naming the first violation.
void validate(const ParameterSet& p);

/// A ParameterSet that has passed validation. Immutable.
class ModelParams
{
public:
    /// Throws ValidationError.
    explicit ModelParams(const ParameterSet& values);

    const ParameterSet& values() const
    {
        return m_values;
    }
    const ParameterSet* operator->() const
    {
        return &m_values;
    }
    const ParameterSet& operator*() const
    {
        return m_values;
    }

    bool operator==(const ModelParams&) const = default;

private:
    ParameterSet m_values;
};

struct State {
    double K     = 0.0;
    double q     = 0.0;
    double theta = 0.0;
    double H     = 0.0;
    double Q     = 0.0;

    static constexpr std::size_t size = 5;

    std::array<double, size> to_array() const
    {
        return {K, q, theta, H, Q};
    }
    static State from_array(const std::array<double, size>& y)
    {
        return {y[0], y[1], y[2], y[3], y[4]};
    }

    bool operator==(const State&) const = default;
};

struct Derivative {
    double dK     = 0.0;
    double dq     = 0.0;
    double dtheta = 0.0;
    double dH     = 0.0;
    double dQ     = 0.0;

    std::array<double, State::size> to_array() const
    {
        return {dK, dq, dtheta, dH, dQ};
    }
};

/// Archive sizes below this are treated as outside the domain of the q-equation.
inline constexpr double archive_floor = 1e-12;

/// Membership in the physical domain, allowing `band` of slack on every face.
bool in_domain(const State& s, const ModelParams& p, double band = 0.0);

/// Throws ValidationError naming the first state component (as `<name>0`) outside the domain.
void validate_initial_state(const State& s, const ModelParams& p);

// Auxiliary functions of the vector field.

double sigma(double theta, const ModelParams& p);
double answer_accuracy(double theta, double q, const ModelParams& p);
double gate(double accuracy, const ModelParams& p);
double theta_star(double K, double q, const ModelParams& p);
double rlhf_gain(double theta, double Q, const ModelParams& p);
double human_ceiling(double K, double q, const ModelParams& p);
double tutor_saturation(double Q, const ModelParams& p);
double baseline_query_rate(double H, const ModelParams& p);

/**
 * Right-hand side of the coupled archive / quality / model-skill / human-skill /
 * query-volume system.
 *
 * Throws DomainError if K < archive_floor and NumericalError if any component is
 * not finite.
 */
Derivative vector_field(const State& s, const ModelParams& p);

} // namespace kdyn

#endif // KDYN_MODEL_HPP
