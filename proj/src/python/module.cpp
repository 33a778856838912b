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
#include "kdyn/cli.hpp"
#include "kdyn/errors.hpp"
#include "kdyn/scenario.hpp"
#include "kdyn/service.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;

namespace
{

kdyn::MonthlySeries series_from(const std::vector<std::string>& months, std::vector<double> delta_K,
                                std::vector<double> H, std::vector<double> Q_millions)
{
    kdyn::MonthlySeries s;
    for (const auto& m : months) {
        s.months.push_back(kdyn::YearMonth::parse(m, "months"));
    }
    s.delta_K    = std::move(delta_K);
    s.H          = std::move(H);
    s.Q_millions = std::move(Q_millions);
    s.validate();
    return s;
}

py::dict fit_dict(const kdyn::calibration::FitResult& f)
{
    py::dict d;
    d["alpha_H"]    = f.flow_params.alpha_H;
    d["alpha_A"]    = f.flow_params.alpha_A;
    d["delta_K"]    = f.flow_params.delta_K;
    d["loss"]       = f.loss;
    d["rmse_flow"]  = f.rmse_flow;
    d["rmse_level"] = f.rmse_level;
    py::list restarts;
    for (const auto& r : f.restart_table) {
        py::dict row;
        row["index"]           = r.index;
        row["seed_point"]      = r.seed_point;
        row["converged_point"] = r.converged_point;
        row["loss"]            = r.loss;
        row["iterations"]      = r.iterations;
        row["status"]          = std::string(kdyn::optimize::to_string(r.status));
        restarts.append(row);
    }
    d["restarts"] = restarts;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Native core of kdyn: scenario integration, regime classification and calibration.";

    auto base       = py::register_exception<kdyn::Error>(m, "Error", PyExc_RuntimeError);
    auto validation = py::register_exception<kdyn::ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<kdyn::DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<kdyn::NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<kdyn::IoError>(m, "IoError", PyExc_OSError);
    (void)validation;

    m.def("preset_names", &kdyn::preset_names, "Names of the built-in scenario presets.");

    m.def(
        "presets_json", [] { return kdyn::service::handle_presets().body; },
        "Preset catalogue as served by GET /api/presets.");

    m.def(
        "simulate_json",
        [](const std::string& request) {
            py::gil_scoped_release release;
            const auto r = kdyn::service::handle_simulate(request);
            return std::make_pair(r.status, r.body);
        },
        py::arg("request"), "Runs a simulate request document; returns (http_status, json_body).");

    m.def(
        "simulate_csv",
        [](const std::string& preset, std::optional<double> t_end) {
            auto p = kdyn::load_preset(preset);
            if (t_end) {
                p.config.t_end = *t_end;
                p.config.validate();
            }
            py::gil_scoped_release release;
            const auto r = kdyn::run_scenario(p);
            return std::make_pair(kdyn::format_trajectory(r.normalized), std::string(kdyn::to_string(r.regime.regime)));
        },
        py::arg("preset"), py::arg("t_end") = py::none(),
        "Normalized trajectory CSV and regime label, exactly as written by `kdyn simulate`.");

    m.def("step_K_exact", &kdyn::calibration::step_K_exact, py::arg("K"), py::arg("A"), py::arg("delta_K"),
          "Archive stock after one month of constant inflow A.");

    m.def(
        "fit",
        [](const std::vector<std::string>& months, std::vector<double> delta_K, std::vector<double> H,
           std::vector<double> Q_millions, double K0, double K_max, const std::string& target, bool gate,
           int demand_lag, double kmax_multiplier, int restarts, std::uint64_t seed) {
            const auto data = series_from(months, std::move(delta_K), std::move(H), std::move(Q_millions));
            kdyn::calibration::CalibFixedBlock fixed;
            fixed.K0    = K0;
            fixed.K_max = K_max;
            kdyn::calibration::CalibConfig cfg;
            if (target == "level") {
                cfg.fit_target = kdyn::calibration::FitTarget::Level;
            }
            else if (target != "flow") {
                throw kdyn::ValidationError("target", "expected flow or level");
            }
            cfg.gate_enabled      = gate;
            cfg.demand_lag_months = demand_lag;
            cfg.kmax_multiplier   = kmax_multiplier;
            cfg.restarts          = restarts;
            cfg.rng_seed          = seed;
            kdyn::calibration::FitResult result;
            {
                py::gil_scoped_release release;
                result = kdyn::calibration::fit(data, fixed, cfg);
            }
            return fit_dict(result);
        },
        py::arg("months"), py::arg("delta_K"), py::arg("H"), py::arg("Q_millions"), py::kw_only(), py::arg("K0"),
        py::arg("K_max"), py::arg("target") = "flow", py::arg("gate") = true, py::arg("demand_lag") = 0,
        py::arg("kmax_multiplier") = 1.25, py::arg("restarts") = 16, py::arg("seed") = 0,
        "Multi-start estimate of (alpha_H, alpha_A, delta_K) for one era.");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = kdyn::cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a kdyn command line; returns (exit_code, stdout, stderr).");
}
