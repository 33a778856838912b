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
#include "kdyn/cli.hpp"
#include "kdyn/errors.hpp"
#include "kdyn/scenario.hpp"
#include "kdyn/text.hpp"
#include "kdyn/wikimedia.hpp"

#include "doctest.h"
#include "support/mock_aqs.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

using namespace kdyn;
namespace fs = std::filesystem;

namespace
{

struct Outcome {
    int code;
    std::string out, err;
};

Outcome kdyn_run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / ("kdyn_cli_" + name))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir()
    {
        fs::remove_all(path);
    }
    std::string operator/(const std::string& leaf) const
    {
        return (path / leaf).string();
    }
};

std::vector<std::vector<std::string>> read_csv(const std::string& path)
{
    const std::string content = text::read_file(path);
    std::vector<std::vector<std::string>> rows;
    for (auto line : text::split(content, '\n')) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        for (auto c : text::split(line, ',')) {
            cells.emplace_back(c);
        }
        rows.push_back(cells);
    }
    return rows;
}

} // namespace

TEST_CASE("exit code taxonomy")
{
    auto code = [](auto thrower) {
        try {
            thrower();
        }
        catch (...) {
            return cli::exit_code_for(std::current_exception());
        }
        return cli::ExitCode::Success;
    };
    CHECK(code([] { throw ValidationError("x", "bad"); }) == cli::ExitCode::Validation);
    CHECK(code([] { throw InsufficientDataError("short"); }) == cli::ExitCode::Validation);
    CHECK(code([] { throw DomainError("outside"); }) == cli::ExitCode::Validation);
    CHECK(code([] { throw NetworkError("down"); }) == cli::ExitCode::Io);
    CHECK(code([] { throw SchemaError("shape"); }) == cli::ExitCode::Io);
    CHECK(code([] { throw fs::filesystem_error("io", std::error_code()); }) == cli::ExitCode::Io);
    CHECK(code([] { throw StepSizeUnderflow("tiny", 3.0); }) == cli::ExitCode::Numerical);
}

TEST_CASE("grid specifications")
{
    CHECK(cli::parse_grid("0.1,0.2,0.5", "x") == std::vector<double>{0.1, 0.2, 0.5});
    CHECK(cli::parse_grid("0:1:5", "x") == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
    CHECK(cli::parse_grid("2:2:1", "x") == std::vector<double>{2});
    CHECK_THROWS_AS(cli::parse_grid("", "x"), ValidationError);
    CHECK_THROWS_AS(cli::parse_grid("0:1:0", "x"), ValidationError);
    CHECK_THROWS_AS(cli::parse_grid("a,b", "x"), ValidationError);
}

TEST_CASE("help lists the commands and units")
{
    const auto top = kdyn_run({"--help"});
    CHECK(top.code == 0);
    for (const char* cmd : {"simulate", "sweep", "fetch-data", "calibrate", "serve"}) {
        CHECK(top.out.find(cmd) != std::string::npos);
    }
    CHECK(top.out.find("months") != std::string::npos);
    const auto sim = kdyn_run({"simulate", "--help"});
    CHECK(sim.code == 0);
    CHECK(sim.out.find("Horizon in months") != std::string::npos);
    CHECK(kdyn_run({"calibrate", "--help"}).out.find("millions of views/month") != std::string::npos);
    CHECK(kdyn_run({}).code == 1);
    CHECK(kdyn_run({"simulate"}).code == 1);
}

TEST_CASE("simulate writes trajectory, normalized series and regime")
{
    TempDir dir("simulate");
    const auto r = kdyn_run({"simulate", "--preset", "healthy_growth", "--t-end", "120", "--out", dir / "b"});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("growth") != std::string::npos);
    const auto traj = read_csv(dir / "b/trajectory.csv");
    CHECK(traj.size() == 122);
    CHECK(traj[0].size() == 9);
    const auto norm = parse_trajectory(text::read_file(dir / "b/normalized.csv"));
    CHECK(norm.rows.size() == 121);
    const auto regime = text::read_file(dir / "b/regime.json");
    CHECK(regime.find("\"label\": \"growth\"") != std::string::npos);
    CHECK(regime.find("\"rtol\"") != std::string::npos);

    // same run through the core gives identical numbers
    auto p         = load_preset("healthy_growth");
    p.config.t_end = 120;
    CHECK(text::read_file(dir / "b/normalized.csv") == format_trajectory(run_scenario(p).normalized));
}

TEST_CASE("simulate exit codes")
{
    TempDir dir("simulate_codes");
    CHECK(kdyn_run({"simulate", "--preset", "nope", "--out", dir / "x"}).code == 1);
    CHECK(kdyn_run({"simulate", "--preset", "healthy_growth", "--t-end", "12.5", "--out", dir / "x"}).code == 1);
    CHECK(kdyn_run({"simulate", "--preset", "healthy_growth", "--rtol", "-1", "--out", dir / "x"}).code == 1);

    std::ofstream(dir / "blocker") << "a file, not a directory";
    const auto io = kdyn_run({"simulate", "--preset", "healthy_growth", "--t-end", "20", "--out", dir / "blocker/sub"});
    CHECK(io.code == 2);

    auto wild                     = load_preset("healthy_growth");
    auto values                   = wild.params.values();
    values.alpha_H                = 1e300;
    wild.params                   = ModelParams(values);
    std::ofstream(dir / "wild.cfg") << format_scenario_config(wild);
    const auto num = kdyn_run({"simulate", "--preset", dir / "wild.cfg", "--t-end", "20", "--out", dir / "w"});
    CHECK(num.code == 3);
    CHECK(num.err.find("error:") != std::string::npos);
}

TEST_CASE("sweep over two levers")
{
    TempDir dir("sweep");
    // (e) base; swapping the flow rates gives (f)
    const auto r = kdyn_run({"sweep", "--preset", "inverted_learning", "--x-lever", "alpha_H", "--x-values",
                             "0.5,0.05", "--y-lever", "alpha_A", "--y-values", "0.05,0.5", "--threads", "3", "--out",
                             dir / "g"});
    REQUIRE(r.code == 0);
    const auto rows = read_csv(dir / "g/grid.csv");
    REQUIRE(rows.size() == 5);
    CHECK(rows[0][0] == "alpha_H");
    CHECK(rows[0][1] == "alpha_A");
    auto regime_at = [&](double x, double y) {
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto& row = rows[i];
            if (std::stod(row[0]) == x && std::stod(row[1]) == y) {
                return row[3];
            }
        }
        return std::string("missing");
    };
    CHECK(regime_at(0.5, 0.05) == to_string(run_scenario(load_preset("inverted_learning")).regime.regime));
    CHECK(regime_at(0.05, 0.5) == "decline");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i][2] == "ok");
    }
}

TEST_CASE("sweep records failed cells and rejects bad levers")
{
    TempDir dir("sweep_bad");
    const auto r = kdyn_run({"sweep", "--preset", "healthy_growth", "--x-lever", "alpha_H", "--x-values", "0.5,-1",
                             "--y-lever", "alpha_A", "--y-values", "0.05", "--t-end", "60", "--out", dir / "g"});
    REQUIRE(r.code == 0);
    const auto rows = read_csv(dir / "g/grid.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][2] == "ok");
    CHECK(rows[2][2] == "failed");
    CHECK(r.err.find("1 failed") != std::string::npos);

    CHECK(kdyn_run({"sweep", "--preset", "healthy_growth", "--x-lever", "alpha", "--x-values", "1", "--y-lever",
                    "alpha_A", "--y-values", "1", "--out", dir / "h"})
              .code == 1);
    CHECK(kdyn_run({"sweep", "--preset", "healthy_growth", "--x-lever", "alpha_A", "--x-values", "1", "--y-lever",
                    "alpha_A", "--y-values", "1", "--out", dir / "h"})
              .code == 1);
}

TEST_CASE("fetch-data and calibrate end to end against a local API")
{
    TempDir dir("fetch");
    testing::MockAqsServer server;
    const auto live = kdyn_run({"fetch-data", "--live", "--base-url", server.base_url(), "--cache-dir", dir / "cache",
                                "--write-fixture", dir / "fixture", "--out", dir / "eras"});
    REQUIRE(live.code == 0);
    CHECK(fs::exists(dir / "eras/pre.json"));
    CHECK(fs::exists(dir / "eras/post.json"));
    CHECK(fs::exists(dir / "fixture/manifest.json"));

    const int before = server.requests();
    const auto replay =
        kdyn_run({"fetch-data", "--fixture", "--fixture-dir", dir / "fixture", "--era", "post", "--out", dir / "r"});
    REQUIRE(replay.code == 0);
    CHECK(server.requests() == before);
    const auto a = wikimedia::parse_era_file(text::read_file(dir / "eras/post.json"));
    const auto b = wikimedia::parse_era_file(text::read_file(dir / "r/post.json"));
    CHECK(a.series.same_values(b.series));
    CHECK(a.K0 == b.K0);
    CHECK(b.series.provenance.at("pageviews").source == DataSource::Fixture);

    SUBCASE("a custom era shorter than a year is rejected")
    {
        const auto r = kdyn_run({"fetch-data", "--live", "--base-url", server.base_url(), "--cache-dir", dir / "cache",
                                 "--era", "custom", "--start", "2021-01", "--end", "2021-06", "--out", dir / "c"});
        CHECK(r.code == 1);
    }
    SUBCASE("conflicting modes")
    {
        CHECK(kdyn_run({"fetch-data", "--live", "--offline", "--cache-dir", dir / "cache"}).code == 1);
    }
    SUBCASE("calibration reports are reproducible for a seed")
    {
        const std::vector<std::string> common{"calibrate", "--pre", dir / "eras/pre.json", "--post",
                                              dir / "eras/post.json", "--seed", "7", "--restarts", "3"};
        auto first = common, second = common;
        first.insert(first.end(), {"--out", dir / "cal1"});
        second.insert(second.end(), {"--out", dir / "cal2"});
        REQUIRE(kdyn_run(first).code == 0);
        REQUIRE(kdyn_run(second).code == 0);
        CHECK(text::read_file(dir / "cal1/report.txt") == text::read_file(dir / "cal2/report.txt"));
        CHECK(text::read_file(dir / "cal1/report.json") == text::read_file(dir / "cal2/report.json"));
    }
    SUBCASE("variant matrix has six rows and the joint fit")
    {
        const auto r = kdyn_run({"calibrate", "--pre", dir / "eras/pre.json", "--post", dir / "eras/post.json",
                                 "--variants", "all", "--restarts", "2", "--out", dir / "var"});
        REQUIRE(r.code == 0);
        const auto report = text::read_file(dir / "var/report.txt");
        for (const auto& name : calibration::variant_names()) {
            CHECK(report.find("[" + name + "]") != std::string::npos);
        }
        CHECK(report.find("[joint_delta_K]") != std::string::npos);
    }
    SUBCASE("calibrate input errors")
    {
        CHECK(kdyn_run({"calibrate", "--out", dir / "x"}).code == 1);
        CHECK(kdyn_run({"calibrate", "--pre", dir / "missing.json", "--out", dir / "x"}).code == 2);
        CHECK(kdyn_run({"calibrate", "--pre", dir / "eras/pre.json", "--kmax-multiplier", "2", "--out", dir / "x"})
                  .code == 1);
        CHECK(kdyn_run({"calibrate", "--pre", dir / "eras/pre.json", "--variants", "all", "--out", dir / "x"}).code ==
              1);
    }
}

TEST_CASE("fetch-data without a network or fixture is an I/O failure")
{
    TempDir dir("fetch_down");
    const auto down = kdyn_run({"fetch-data", "--live", "--base-url", "http://127.0.0.1:1/api/rest_v1", "--era", "pre",
                                "--cache-dir", dir / "cache", "--out", dir / "o"});
    CHECK(down.code == 2);
    CHECK(kdyn_run({"fetch-data", "--fixture-dir", dir / "none", "--out", dir / "o"}).code == 2);
    CHECK(kdyn_run({"fetch-data", "--offline", "--cache-dir", dir / "cache", "--out", dir / "o"}).code == 2);
}

TEST_CASE("serve reports a taken port")
{
    testing::MockAqsServer occupant;
    const auto url  = occupant.base_url();
    const auto port = url.substr(url.rfind(':') + 1, url.find('/', url.rfind(':')) - url.rfind(':') - 1);
    const auto r    = kdyn_run({"serve", "--port", port});
    CHECK(r.code == 2);
    CHECK(kdyn_run({"serve", "--port", "70000"}).code == 1);
}

TEST_CASE("the installed binary propagates exit codes")
{
    const char* binary = std::getenv("KDYN_BINARY");
    if (!binary) {
        MESSAGE("KDYN_BINARY not set; skipping process-level checks");
        return;
    }
    TempDir dir("binary");
    auto status = [&](const std::string& args) {
        const int raw = std::system(("\"" + std::string(binary) + "\" " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    CHECK(status("simulate --preset healthy_growth --t-end 20 --out " + dir / "ok") == 0);
    CHECK(status("simulate --preset nope --out " + dir / "x") == 1);
    CHECK(status("--help") == 0);
}
