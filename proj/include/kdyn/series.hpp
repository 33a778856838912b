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
#ifndef KDYN_SERIES_HPP
#define KDYN_SERIES_HPP

#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace kdyn
{

struct YearMonth {
    int year  = 2001;
    int month = 1; ///< 1..12

    /// Accepts "YYYY-MM". Throws ValidationError naming `field`.
    static YearMonth parse(std::string_view s, std::string_view field = "month");

    /// Months since year 0, for arithmetic.
    int ordinal() const
    {
        return year * 12 + (month - 1);
    }
    static YearMonth from_ordinal(int ordinal)
    {
        return {ordinal / 12, ordinal % 12 + 1};
    }
    YearMonth plus(int months) const
    {
        return from_ordinal(ordinal() + months);
    }

    std::string str() const; ///< "YYYY-MM"
    std::string compact(int day = 1) const; ///< "YYYYMMDD"

    auto operator<=>(const YearMonth&) const = default;
};

/// Inclusive month range.
struct EraWindow {
    YearMonth start;
    YearMonth end;
    std::string label;

    int months() const
    {
        return end.ordinal() - start.ordinal() + 1;
    }
    std::vector<YearMonth> month_list() const;

    /// Throws ValidationError when end precedes start.
    void validate() const;

    static EraWindow pre_chatgpt();
    static EraWindow post_chatgpt();

    bool operator==(const EraWindow&) const = default;
};

enum class DataSource
{
    Api,
    Cache,
    Fixture,
    Synthetic,
};

std::string_view to_string(DataSource s);
DataSource data_source_from_string(std::string_view s);

struct Provenance {
    DataSource source = DataSource::Api;
    std::string fetched_at; ///< ISO-8601 UTC
    std::vector<std::string> notes; ///< fallbacks taken, gaps dropped

    bool operator==(const Provenance&) const = default;
};

/// Month-indexed observed flows for one era. Q is in millions of views.
struct MonthlySeries {
    std::vector<YearMonth> months;
    std::vector<double> delta_K;
    std::vector<double> H;
    std::vector<double> Q_millions;
    std::map<std::string, Provenance> provenance; ///< keyed by metric

    std::size_t size() const
    {
        return months.size();
    }
    bool contiguous() const;

    /// Equal lengths, strictly increasing months, non-negative finite values.
    void validate() const;

    /// Same months and values; provenance ignored.
    bool same_values(const MonthlySeries& other) const;
};

} // namespace kdyn

#endif // KDYN_SERIES_HPP
