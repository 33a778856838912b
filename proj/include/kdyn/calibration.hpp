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
#ifndef KDYN_CALIBRATION_HPP
#define KDYN_CALIBRATION_HPP

#include "kdyn/model.hpp"
#include "kdyn/optimize.hpp"
#include "kdyn/series.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kdyn::calibration
{

/// Auxiliary dynamics held fixed while the archive-flow triplet is estimated.
struct CalibFixedBlock {
    double q_H        = 0.85;
    double delta_q    = 5e-4;
    double theta_max  = 1.0;
    double theta_mid  = 0.0;
    double eta_sup    = 0.02;
    double eta_RLHF   = 0.05;
    double Q_half     = 5000.0;
    double a_0        = 0.60;
    double kappa_gate = 10.0;
    double q0         = 0.85;
    double theta0     = 0.3;
    double K_max      = 0.0; ///< items; 1.25x cumulative new pages, shared by both eras
    double K0         = 0.0; ///< items; cumulative new pages before the era start

    bool operator==(const CalibFixedBlock&) const = default;
};

/// Multiplier the K_max of a fixed block is assumed to have been built with.
inline constexpr double baseline_kmax_multiplier = 1.25;

struct FlowParams {
    double alpha_H = 0.0;
    double alpha_A = 0.0;
    double delta_K = 0.0;

    static constexpr std::array<double, 3> lower{1e-8, 1e-8, 1e-6};
    static constexpr std::array<double, 3> upper{10.0, 5.0, 0.2};

    std::array<double, 3> to_array() const
    {
        return {alpha_H, alpha_A, delta_K};
    }
    /// Throws ValidationError naming the out-of-bounds field.
    void validate() const;

    bool operator==(const FlowParams&) const = default;
};

enum class FitTarget
{
    Flow,
    Level,
};

std::string_view to_string(FitTarget t);

struct CalibConfig {
    FitTarget fit_target  = FitTarget::Flow;
    bool gate_enabled     = true;
    int demand_lag_months = 0; ///< 0 or 1
    double kmax_multiplier = 1.25; ///< 1.25 or 1.50
    std::optional<double> Q_half_override;
    bool joint_delta_K    = false;
    int restarts          = 16;
    std::uint64_t rng_seed = 0;

    /// Throws ValidationError.
    void validate() const;
};

/// The fixed block after applying the K_max multiplier and Q_half override of `config`.
CalibFixedBlock effective_fixed(const CalibFixedBlock& fixed, const CalibConfig& config);

/// Model record used by the monthly dynamics; fields the q/theta equations do not read keep neutral values.
ModelParams model_params(const CalibFixedBlock& fixed, const FlowParams& flow);

/// Exact one-month solution of dK/dt = A - delta_K K for constant A.
double step_K_exact(double K, double A, double delta_K);

struct AuxState {
    double q     = 0.0;
    double theta = 0.0;
};

/// One explicit Euler month of the quality and model-skill equations, q clipped to [0, 1].
AuxState advance_aux(double q, double theta, double H_t, double Q_t, double K_t, const CalibFixedBlock& fixed,
                     const FlowParams& flow, bool gate_enabled);

struct ForwardRun {
    std::vector<double> flows;  ///< predicted K_{t+1} - K_t
    std::vector<double> levels; ///< predicted K_{t+1}
    std::vector<double> ai_inflow; ///< alpha_A Q g(a) per month
    std::vector<double> accuracy;  ///< a_t per month
};

ForwardRun simulate_flows(const MonthlySeries& data, const FlowParams& flow, const CalibFixedBlock& fixed,
                          const CalibConfig& config);

/// Observed cumulative levels K0 + sum of observed flows through each month.
std::vector<double> observed_levels(const MonthlySeries& data, double K0);

/// 1.4826 * median |x - median(x)|, floored at 1e-9.
double mad_scale(std::span<const double> values);

/// Sum of 2 (sqrt(1 + (r/scale)^2) - 1).
double soft_l1_loss(std::span<const double> residuals, double scale);

/// Soft-l1 loss of predicted - observed with the MAD scale of those residuals.
double soft_l1_objective(std::span<const double> predicted, std::span<const double> observed);

double rmse(std::span<const double> predicted, std::span<const double> observed);

struct RestartRecord {
    int index = 0;
    std::vector<double> seed_point;      ///< bounded coordinates
    std::vector<double> converged_point; ///< bounded coordinates
    double loss    = 0.0;
    int iterations = 0;
    optimize::Status status = optimize::Status::MaxIterations;
};

struct FitResult {
    FlowParams flow_params;
    double loss       = 0.0;
    double rmse_flow  = 0.0;
    double rmse_level = 0.0;
    std::vector<RestartRecord> restart_table;
    CalibConfig config;
    EraWindow era;
};

/**
 * Multi-start bounded Nelder-Mead estimate of (alpha_H, alpha_A, delta_K).
 *
 * Residuals are scaled by the MAD of the observed target series; restarts are
 * seeded log-uniformly within the bounds from `config.rng_seed`. Throws
 * InsufficientDataError for fewer than 12 months and NumericalError if no restart
 * converges.
 */
FitResult fit(const MonthlySeries& data, const CalibFixedBlock& fixed, const CalibConfig& config,
              const EraWindow& era = {});

struct JointFitResult {
    FitResult pre;
    FitResult post;
    double delta_K = 0.0;
    double loss    = 0.0;
    std::vector<RestartRecord> restart_table; ///< points are (aH_pre, aA_pre, aH_post, aA_post, delta_K)
};

/// Fits both eras at once with a shared delta_K, summing the two losses.
JointFitResult fit_joint_delta(const MonthlySeries& pre, const CalibFixedBlock& fixed_pre, const MonthlySeries& post,
                               const CalibFixedBlock& fixed_post, const CalibConfig& config,
                               const EraWindow& era_pre = EraWindow::pre_chatgpt(),
                               const EraWindow& era_post = EraWindow::post_chatgpt());

struct VariantCell {
    std::optional<FitResult> result;
    std::string error;
};

struct VariantRow {
    std::string name;
    CalibConfig config;
    VariantCell pre;
    VariantCell post;
};

struct VariantMatrix {
    std::vector<VariantRow> rows; ///< baseline then the five single-factor variants
    std::optional<JointFitResult> joint;
    std::string joint_error;
};

/// Names of the single-factor variants, baseline first.
const std::vector<std::string>& variant_names();

/// Applies one named variant on top of `base`.
CalibConfig variant_config(const std::string& name, const CalibConfig& base);

/// Baseline, level target, gate off, demand lag 1, K_max x1.50, Q_half = 2500 and joint delta_K.
/// Failed cells are recorded; the matrix always completes.
VariantMatrix run_variant_matrix(const MonthlySeries& pre, const CalibFixedBlock& fixed_pre,
                                 const MonthlySeries& post, const CalibFixedBlock& fixed_post,
                                 const CalibConfig& base = {});

} // namespace kdyn::calibration

#endif // KDYN_CALIBRATION_HPP
