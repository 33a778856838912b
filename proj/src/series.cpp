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
#include "kdyn/series.hpp"

#include "kdyn/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace kdyn
{

YearMonth YearMonth::parse(std::string_view s, std::string_view field)
{
    auto fail = [&]() -> YearMonth {
        throw ValidationError(std::string(field), "expected YYYY-MM, got '" + std::string(s) + "'");
    };
    if (s.size() != 7 || s[4] != '-') {
        return fail();
    }
    YearMonth ym;
    auto r1 = std::from_chars(s.data(), s.data() + 4, ym.year);
    auto r2 = std::from_chars(s.data() + 5, s.data() + 7, ym.month);
    if (r1.ec != std::errc() || r1.ptr != s.data() + 4 || r2.ec != std::errc() || r2.ptr != s.data() + 7 ||
        ym.month < 1 || ym.month > 12) {
        return fail();
    }
    return ym;
}

std::string YearMonth::str() const
{
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
    return buf;
}

std::string YearMonth::compact(int day) const
{
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d%02d%02d", year, month, day);
    return buf;
}

std::vector<YearMonth> EraWindow::month_list() const
{
    std::vector<YearMonth> out;
    for (int o = start.ordinal(); o <= end.ordinal(); ++o) {
        out.push_back(YearMonth::from_ordinal(o));
    }
    return out;
}

void EraWindow::validate() const
{
    if (end < start) {
        throw ValidationError("window", "end " + end.str() + " precedes start " + start.str());
    }
}

EraWindow EraWindow::pre_chatgpt()
{
    return {{2020, 3}, {2022, 11}, "pre"};
}

EraWindow EraWindow::post_chatgpt()
{
    return {{2022, 12}, {2025, 8}, "post"};
}

std::string_view to_string(DataSource s)
{
    switch (s) {
    case DataSource::Api:
        return "api";
    case DataSource::Cache:
        return "cache";
    case DataSource::Fixture:
        return "fixture";
    case DataSource::Synthetic:
        return "synthetic";
    }
    return "api";
}

DataSource data_source_from_string(std::string_view s)
{
    for (auto d : {DataSource::Api, DataSource::Cache, DataSource::Fixture, DataSource::Synthetic}) {
        if (to_string(d) == s) {
            return d;
        }
    }
    throw ValidationError("source", "unknown data source '" + std::string(s) + "'");
}

bool MonthlySeries::contiguous() const
{
    for (std::size_t i = 1; i < months.size(); ++i) {
        if (months[i].ordinal() != months[i - 1].ordinal() + 1) {
            return false;
        }
    }
    return true;
}

void MonthlySeries::validate() const
{
    const auto n = months.size();
    if (delta_K.size() != n || H.size() != n || Q_millions.size() != n) {
        throw ValidationError("series", "columns have unequal lengths");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!(months[i - 1] < months[i])) {
            throw ValidationError("months", "not strictly increasing at " + months[i].str());
        }
    }
    auto check = [&](const std::vector<double>& v, const char* name) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(v[i]) || v[i] < 0.0) {
                throw ValidationError(name, "negative or non-finite value at " + months[i].str());
            }
        }
    };
    check(delta_K, "delta_K");
    check(H, "H");
    check(Q_millions, "Q_millions");
}

bool MonthlySeries::same_values(const MonthlySeries& o) const
{
    return months == o.months && delta_K == o.delta_K && H == o.H && Q_millions == o.Q_millions;
}

} // namespace kdyn
