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
#include "kdyn/calibration.hpp"

#include "kdyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kdyn::calibration
{

namespace
{

constexpr std::size_t min_months = 12;

std::array<optimize::LogBox, 3> flow_boxes()
{
    return {optimize::LogBox(FlowParams::lower[0], FlowParams::upper[0]),
            optimize::LogBox(FlowParams::lower[1], FlowParams::upper[1]),
            optimize::LogBox(FlowParams::lower[2], FlowParams::upper[2])};
}

AuxState advance_aux_impl(double q, double theta, double H_t, double Q_t, double K_t, const ModelParams& p,
                          bool gate_enabled)
{
    if (!(K_t > 0.0)) {
        throw DomainError("advance_aux: archive size must be > 0 (got " + std::to_string(K_t) + ")");
    }
    const auto& v      = *p;
    const double a     = answer_accuracy(theta, q, p);
    const double g     = gate_enabled ? gate(a, p) : 1.0;
    const double human = v.alpha_H * H_t;
    const double ai    = v.alpha_A * Q_t * g;

    const double dq = human / K_t * (v.q_H - q) + ai / K_t * (a - q) - v.delta_q * q;
    const double dtheta = v.eta_sup * (theta_star(K_t, q, p) - theta) + v.eta_RLHF * rlhf_gain(theta, Q_t, p);
    return {std::clamp(q + dq, 0.0, 1.0), theta + dtheta};
}

std::vector<double> residuals(std::span<const double> predicted, std::span<const double> observed)
{
    if (predicted.size() != observed.size()) {
        throw ValidationError("residuals", "length mismatch: " + std::to_string(predicted.size()) + " predicted vs " +
                                               std::to_string(observed.size()) + " observed");
    }
    std::vector<double> r(predicted.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = predicted[i] - observed[i];
    }
    return r;
}

double median(std::vector<double> v)
{
    const auto n   = v.size();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) {
        return *mid;
    }
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

void check_fixed(const CalibFixedBlock& f)
{
    if (!(f.K0 > 0.0) || !std::isfinite(f.K0)) {
        throw ValidationError("K0", "initial archive stock must be > 0");
    }
    if (!(f.K_max > 0.0) || !std::isfinite(f.K_max)) {
        throw ValidationError("K_max", "must be > 0");
    }
}

struct Target {
    std::vector<double> observed;
    double scale;
};

Target make_target(const MonthlySeries& data, const CalibFixedBlock& fixed, FitTarget t)
{
    std::vector<double> obs = t == FitTarget::Flow ? data.delta_K : observed_levels(data, fixed.K0);
    const double scale      = mad_scale(obs);
    return {std::move(obs), scale};
}

double target_loss(const MonthlySeries& data, const FlowParams& flow, const CalibFixedBlock& fixed,
                   const CalibConfig& config, const Target& target)
{
    try {
        const auto run = simulate_flows(data, flow, fixed, config);
        const auto& predicted = config.fit_target == FitTarget::Flow ? run.flows : run.levels;
        return soft_l1_loss(residuals(predicted, target.observed), target.scale);
    }
    catch (const Error&) {
        return std::numeric_limits<double>::infinity();
    }
}

FitResult summarize(const MonthlySeries& data, const CalibFixedBlock& fixed, const CalibConfig& config,
                    const EraWindow& era, const FlowParams& flow, double loss)
{
    const auto run = simulate_flows(data, flow, fixed, config);
    FitResult r;
    r.flow_params = flow;
    r.loss        = loss;
    r.rmse_flow   = rmse(run.flows, data.delta_K);
    r.rmse_level  = rmse(run.levels, observed_levels(data, fixed.K0));
    r.config      = config;
    r.era         = era;
    return r;
}

/// Runs the restarts and returns them ordered by restart index.
template <class Decode>
std::vector<RestartRecord> run_restarts(const optimize::Objective& objective, std::span<const optimize::LogBox> boxes,
                                        const CalibConfig& config, Decode decode)
{
    optimize::SeedSequence rng(config.rng_seed);
    std::vector<RestartRecord> table;
    for (int r = 0; r < config.restarts; ++r) {
        std::vector<double> u0(boxes.size());
        RestartRecord rec;
        rec.index = r;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            const double z = rng.uniform();
            rec.seed_point.push_back(boxes[i].from_unit(z));
            u0[i] = std::log(z / (1.0 - z));
        }
        const auto res      = optimize::nelder_mead(objective, u0);
        rec.converged_point = decode(res.x);
        rec.loss            = res.value;
        rec.iterations      = res.iterations;
        rec.status          = res.status;
        table.push_back(std::move(rec));
    }
    const bool any_converged = std::any_of(table.begin(), table.end(), [](const RestartRecord& r) {
        return r.status != optimize::Status::MaxIterations && std::isfinite(r.loss);
    });
    if (!any_converged) {
        std::string detail;
        for (const auto& r : table) {
            detail += " [" + std::to_string(r.index) + ": " + std::string(optimize::to_string(r.status)) +
                      ", loss " + std::to_string(r.loss) + "]";
        }
        throw NumericalError("optimizer did not converge on any restart:" + detail);
    }
    return table;
}

const RestartRecord& best_restart(const std::vector<RestartRecord>& table)
{
    // ties resolve to the lowest restart index
    return *std::min_element(table.begin(), table.end(), [](const RestartRecord& a, const RestartRecord& b) {
        if (a.loss != b.loss) {
            return a.loss < b.loss;
        }
        return a.index < b.index;
    });
}

} // namespace

std::string_view to_string(FitTarget t)
{
    return t == FitTarget::Flow ? "flow" : "level";
}

void FlowParams::validate() const
{
    const auto v                 = to_array();
    static const char* names[3] = {"alpha_H", "alpha_A", "delta_K"};
    for (std::size_t i = 0; i < 3; ++i) {
        if (!(v[i] >= lower[i] && v[i] <= upper[i])) {
            throw ValidationError(names[i], "outside [" + std::to_string(lower[i]) + ", " + std::to_string(upper[i]) +
                                                "] (got " + std::to_string(v[i]) + ")");
        }
    }
}

void CalibConfig::validate() const
{
    if (demand_lag_months != 0 && demand_lag_months != 1) {
        throw ValidationError("demand_lag_months", "must be 0 or 1");
    }
    if (kmax_multiplier != 1.25 && kmax_multiplier != 1.50) {
        throw ValidationError("kmax_multiplier", "must be 1.25 or 1.50");
    }
    if (Q_half_override && !(*Q_half_override > 0.0)) {
        throw ValidationError("Q_half", "override must be > 0");
    }
    if (restarts < 1) {
        throw ValidationError("restarts", "must be >= 1");
    }
}

CalibFixedBlock effective_fixed(const CalibFixedBlock& fixed, const CalibConfig& config)
{
    CalibFixedBlock f = fixed;
    f.K_max           = fixed.K_max * (config.kmax_multiplier / baseline_kmax_multiplier);
    if (config.Q_half_override) {
        f.Q_half = *config.Q_half_override;
    }
    return f;
}

ModelParams model_params(const CalibFixedBlock& fixed, const FlowParams& flow)
{
    ParameterSet p;
    p.alpha_H    = flow.alpha_H;
    p.alpha_A    = flow.alpha_A;
    p.delta_K    = flow.delta_K;
    p.q_H        = fixed.q_H;
    p.delta_q    = fixed.delta_q;
    p.eta_sup    = fixed.eta_sup;
    p.eta_RLHF   = fixed.eta_RLHF;
    p.theta_max  = fixed.theta_max;
    p.theta_mid  = fixed.theta_mid;
    p.K_max      = fixed.K_max;
    p.Q_half     = fixed.Q_half;
    p.a_0        = fixed.a_0;
    p.kappa_gate = fixed.kappa_gate;
    return ModelParams(p);
}

double step_K_exact(double K, double A, double delta_K)
{
    if (delta_K == 0.0) {
        return K + A;
    }
    if (delta_K > 1e-4) {
        const double eq = A / delta_K;
        return (K - eq) * std::exp(-delta_K) + eq;
    }
    // same solution without the large A / delta_K cancellation
    return K * std::exp(-delta_K) + A * (-std::expm1(-delta_K) / delta_K);
}

AuxState advance_aux(double q, double theta, double H_t, double Q_t, double K_t, const CalibFixedBlock& fixed,
                     const FlowParams& flow, bool gate_enabled)
{
    return advance_aux_impl(q, theta, H_t, Q_t, K_t, model_params(fixed, flow), gate_enabled);
}

ForwardRun simulate_flows(const MonthlySeries& data, const FlowParams& flow, const CalibFixedBlock& fixed,
                          const CalibConfig& config)
{
    config.validate();
    if (data.size() == 0) {
        throw InsufficientDataError("simulate_flows: empty series");
    }
    const CalibFixedBlock fx = effective_fixed(fixed, config);
    check_fixed(fx);
    const ModelParams params = model_params(fx, flow);

    const auto n = data.size();
    ForwardRun run;
    run.flows.reserve(n);
    run.levels.reserve(n);
    run.ai_inflow.reserve(n);
    run.accuracy.reserve(n);

    double q = fx.q0, theta = fx.theta0, K = fx.K0;
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t q_index = config.demand_lag_months == 1 && t > 0 ? t - 1 : t;
        const double Q_t          = data.Q_millions[q_index];
        const double H_t          = data.H[t];

        const double a  = answer_accuracy(theta, q, params);
        const double g  = config.gate_enabled ? gate(a, params) : 1.0;
        const double ai = flow.alpha_A * Q_t * g;
        const double A  = flow.alpha_H * H_t + ai;
        const double K_next = step_K_exact(K, A, flow.delta_K);

        run.flows.push_back(K_next - K);
        run.levels.push_back(K_next);
        run.ai_inflow.push_back(ai);
        run.accuracy.push_back(a);

        const AuxState aux = advance_aux_impl(q, theta, H_t, Q_t, K, params, config.gate_enabled);
        q                  = aux.q;
        theta              = aux.theta;
        K                  = K_next;
    }
    return run;
}

std::vector<double> observed_levels(const MonthlySeries& data, double K0)
{
    std::vector<double> out;
    out.reserve(data.size());
    double K = K0;
    for (double dk : data.delta_K) {
        K += dk;
        out.push_back(K);
    }
    return out;
}

double mad_scale(std::span<const double> values)
{
    if (values.empty()) {
        throw ValidationError("values", "MAD of an empty series");
    }
    std::vector<double> v(values.begin(), values.end());
    const double m = median(v);
    for (double& x : v) {
        x = std::abs(x - m);
    }
    return std::max(1.4826 * median(std::move(v)), 1e-9);
}

double soft_l1_loss(std::span<const double> r, double scale)
{
    double loss = 0.0;
    for (double x : r) {
        const double z = (x / scale) * (x / scale);
        loss += 2.0 * (std::sqrt(1.0 + z) - 1.0);
    }
    return loss;
}

double soft_l1_objective(std::span<const double> predicted, std::span<const double> observed)
{
    if (predicted.size() != observed.size()) {
        throw ValidationError("observed", "length mismatch");
    }
    if (predicted.size() < 3) {
        throw ValidationError("observed", "need at least 3 residuals");
    }
    const auto r = residuals(predicted, observed);
    return soft_l1_loss(r, mad_scale(r));
}

double rmse(std::span<const double> predicted, std::span<const double> observed)
{
    const auto r = residuals(predicted, observed);
    if (r.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (double x : r) {
        s += x * x;
    }
    return std::sqrt(s / static_cast<double>(r.size()));
}

FitResult fit(const MonthlySeries& data, const CalibFixedBlock& fixed, const CalibConfig& config,
              const EraWindow& era)
{
    config.validate();
    data.validate();
    if (data.size() < min_months) {
        throw InsufficientDataError("calibration needs at least " + std::to_string(min_months) + " months (got " +
                                    std::to_string(data.size()) + ")");
    }
    check_fixed(effective_fixed(fixed, config));

    const Target target = make_target(data, fixed, config.fit_target);
    const auto boxes    = flow_boxes();
    auto decode         = [&](const std::vector<double>& u) {
        return std::vector<double>{boxes[0].to_bounded(u[0]), boxes[1].to_bounded(u[1]), boxes[2].to_bounded(u[2])};
    };
    const optimize::Objective objective = [&](const std::vector<double>& u) {
        const auto x = decode(u);
        return target_loss(data, {x[0], x[1], x[2]}, fixed, config, target);
    };

    auto table       = run_restarts(objective, boxes, config, decode);
    const auto& best = best_restart(table);
    const FlowParams flow{best.converged_point[0], best.converged_point[1], best.converged_point[2]};
    FitResult result = summarize(data, fixed, config, era, flow, best.loss);
    result.restart_table = std::move(table);
    return result;
}

JointFitResult fit_joint_delta(const MonthlySeries& pre, const CalibFixedBlock& fixed_pre, const MonthlySeries& post,
                               const CalibFixedBlock& fixed_post, const CalibConfig& config, const EraWindow& era_pre,
                               const EraWindow& era_post)
{
    config.validate();
    pre.validate();
    post.validate();
    for (const auto* d : {&pre, &post}) {
        if (d->size() < min_months) {
            throw InsufficientDataError("joint calibration needs at least " + std::to_string(min_months) +
                                        " months per era (got " + std::to_string(d->size()) + ")");
        }
    }
    check_fixed(effective_fixed(fixed_pre, config));
    check_fixed(effective_fixed(fixed_post, config));

    const Target t_pre  = make_target(pre, fixed_pre, config.fit_target);
    const Target t_post = make_target(post, fixed_post, config.fit_target);
    const auto fb       = flow_boxes();
    const std::array<optimize::LogBox, 5> boxes{fb[0], fb[1], fb[0], fb[1], fb[2]};
    auto decode = [&](const std::vector<double>& u) {
        std::vector<double> x(5);
        for (std::size_t i = 0; i < 5; ++i) {
            x[i] = boxes[i].to_bounded(u[i]);
        }
        return x;
    };
    const optimize::Objective objective = [&](const std::vector<double>& u) {
        const auto x = decode(u);
        return target_loss(pre, {x[0], x[1], x[4]}, fixed_pre, config, t_pre) +
               target_loss(post, {x[2], x[3], x[4]}, fixed_post, config, t_post);
    };

    auto table       = run_restarts(objective, boxes, config, decode);
    const auto& best = best_restart(table);
    const auto& x    = best.converged_point;

    JointFitResult out;
    out.delta_K = x[4];
    out.loss    = best.loss;
    const FlowParams fp_pre{x[0], x[1], x[4]}, fp_post{x[2], x[3], x[4]};
    out.pre  = summarize(pre, fixed_pre, config, era_pre, fp_pre, target_loss(pre, fp_pre, fixed_pre, config, t_pre));
    out.post = summarize(post, fixed_post, config, era_post, fp_post,
                         target_loss(post, fp_post, fixed_post, config, t_post));
    out.restart_table = std::move(table);
    return out;
}

const std::vector<std::string>& variant_names()
{
    static const std::vector<std::string> names = {"baseline",   "level",     "gate_off",
                                                   "demand_lag", "kmax_1.50", "q_half_2500"};
    return names;
}

CalibConfig variant_config(const std::string& name, const CalibConfig& base)
{
    CalibConfig c = base;
    if (name == "baseline") {
    }
    else if (name == "level") {
        c.fit_target = FitTarget::Level;
    }
    else if (name == "gate_off") {
        c.gate_enabled = false;
    }
    else if (name == "demand_lag") {
        c.demand_lag_months = 1;
    }
    else if (name == "kmax_1.50") {
        c.kmax_multiplier = 1.50;
    }
    else if (name == "q_half_2500") {
        c.Q_half_override = 2500.0;
    }
    else if (name == "joint_delta_K") {
        c.joint_delta_K = true;
    }
    else {
        throw ValidationError("variant", "unknown variant '" + name + "'");
    }
    return c;
}

VariantMatrix run_variant_matrix(const MonthlySeries& pre, const CalibFixedBlock& fixed_pre,
                                 const MonthlySeries& post, const CalibFixedBlock& fixed_post,
                                 const CalibConfig& base)
{
    auto run_cell = [](auto&& fn) {
        VariantCell cell;
        try {
            cell.result = fn();
        }
        catch (const std::exception& e) {
            cell.error = e.what();
        }
        return cell;
    };

    VariantMatrix m;
    for (const auto& name : variant_names()) {
        VariantRow row;
        row.name   = name;
        row.config = variant_config(name, base);
        row.pre    = run_cell([&] {
            return fit(pre, fixed_pre, row.config, EraWindow::pre_chatgpt());
        });
        row.post   = run_cell([&] {
            return fit(post, fixed_post, row.config, EraWindow::post_chatgpt());
        });
        m.rows.push_back(std::move(row));
    }
    try {
        m.joint = fit_joint_delta(pre, fixed_pre, post, fixed_post, variant_config("joint_delta_K", base));
    }
    catch (const std::exception& e) {
        m.joint_error = e.what();
    }
    return m;
}

} // namespace kdyn::calibration
