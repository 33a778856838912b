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
#ifndef KDYN_WIKIMEDIA_HPP
#define KDYN_WIKIMEDIA_HPP

#include "kdyn/series.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace kdyn::wikimedia
{

/// First month of the new-pages history used for stocks.
inline constexpr YearMonth history_start{2001, 1};
/// Last month whose cumulative new pages define K_max.
inline constexpr YearMonth kmax_through{2025, 8};

struct ClientConfig {
    std::string base_url   = "https://wikimedia.org/api/rest_v1";
    std::string project    = "en.wikipedia";
    std::string user_agent = "kdyn/0.1 (knowledge-dynamics calibration toolkit)";
    std::string editor_type = "all-editor-types";
    std::string editors_page_type = "content";
    int attempts           = 3;
    double backoff_seconds = 1.0; ///< doubled after every failed attempt
    double timeout_seconds = 30.0;
};

struct HttpResponse {
    int status = 0;
    std::string body;
    std::optional<double> retry_after; ///< seconds, from the Retry-After header
};

/// GET transport; throws NetworkError on connection failure.
class Transport
{
public:
    virtual ~Transport() = default;
    virtual HttpResponse get(const std::string& url) = 0;
};

/// cpp-httplib backed transport (http and https).
std::unique_ptr<Transport> make_http_transport(const ClientConfig& config);

/// Month-indexed values of one metric plus where they came from.
struct MonthlyCounts {
    std::vector<YearMonth> months;
    std::vector<double> values;
    Provenance provenance;

    std::size_t size() const
    {
        return months.size();
    }
    std::optional<double> at(YearMonth m) const;
};

/// One AQS request family: what to ask for and how to read the answer.
struct MetricRequest {
    std::string metric; ///< cache key, e.g. "new-pages_content"
    std::string path;   ///< URL path after the base, with the window appended by the client
    std::string value_key; ///< JSON field holding the count
    bool nested_results = true; ///< items[0].results[] (true) or items[] (false)
    bool hourly_timestamps = false; ///< pageviews style YYYYMMDDHH window bounds
};

MetricRequest new_pages_request(const ClientConfig& c, const std::string& page_type);
MetricRequest editors_request(const ClientConfig& c, const std::string& activity_level);
MetricRequest pageviews_request(const ClientConfig& c);

/// Reads counts for `window` from a raw AQS payload. Throws SchemaError naming the bad key.
MonthlyCounts parse_payload(const std::string& body, const MetricRequest& request, const EraWindow& window);

/// Timestamp of an AQS row: "YYYY-MM-DDT..." or "YYYYMMDDHH".
YearMonth parse_timestamp(const std::string& ts);

enum class Mode
{
    Live,    ///< cache first, then network
    Offline, ///< cache only
    Fixture, ///< read-only pinned snapshot
};

/**
 * AQS client with an on-disk cache laid out as
 * `<cache>/<project>/<metric>/<start>_<end>.raw.json` (verbatim payload) and
 * `.csv` (parsed table). Requests are sequential and retried with exponential backoff.
 */
class Client
{
public:
    Client(ClientConfig config, std::optional<std::filesystem::path> cache_dir, Mode mode = Mode::Live,
           std::unique_ptr<Transport> transport = nullptr);

    /// Content pages; falls back to all page types when the content breakdown is unavailable.
    MonthlyCounts fetch_new_pages(const EraWindow& window);
    /// Sum of the 5..24, 25..99 and 100.. buckets; months with a missing bucket use the >= 1 edit level.
    MonthlyCounts fetch_active_editors(const EraWindow& window);
    /// Monthly all-access user-agent views, raw counts.
    MonthlyCounts fetch_pageviews(const EraWindow& window);

    /// One metric through the cache; nullopt when the upstream reports it unavailable.
    std::optional<MonthlyCounts> fetch_metric(const MetricRequest& request, const EraWindow& window);

    const ClientConfig& config() const
    {
        return m_config;
    }
    /// Optional sleep hook for tests; defaults to std::this_thread::sleep_for.
    void set_sleeper(std::function<void(double)> sleeper)
    {
        m_sleep = std::move(sleeper);
    }
    int requests_made() const
    {
        return m_requests;
    }

private:
    std::filesystem::path cache_base(const MetricRequest& request, const EraWindow& window) const;
    std::optional<std::string> download(const std::string& url);

    ClientConfig m_config;
    std::optional<std::filesystem::path> m_cache;
    Mode m_mode;
    std::unique_ptr<Transport> m_transport;
    std::function<void(double)> m_sleep;
    int m_requests = 0;
};

/// Parsed-table text of a cache entry.
std::string format_counts_csv(const MonthlyCounts& counts);
MonthlyCounts parse_counts_csv(const std::string& text);

/**
 * Inner-joins the three metrics on month, converts views to millions and checks
 * contiguity. A join with gaps is an error unless `permissive`, in which case the
 * gap is noted in provenance. Throws InsufficientDataError below 12 months.
 */
MonthlySeries assemble_series(const MonthlyCounts& new_pages, const MonthlyCounts& editors,
                              const MonthlyCounts& pageviews, bool permissive = false);

MonthlySeries assemble_series(Client& client, const EraWindow& window, bool permissive = false);

/// Sum of new pages from 2001-01 through the month before `era_start`.
double build_initial_stock(YearMonth era_start, const MonthlyCounts& history);

/// multiplier (1.25 or 1.50) times cumulative new pages 2001-01..2025-08.
double build_kmax(double multiplier, const MonthlyCounts& history);

/// A calibration-ready era: observed series plus its stock and the shared K_max.
struct EraDataset {
    EraWindow window;
    MonthlySeries series;
    double K0    = 0.0;
    double K_max = 0.0; ///< built with the 1.25 multiplier
};

EraDataset load_era(Client& client, const EraWindow& window, bool permissive = false);

/// Era file (JSON) written by `fetch-data` and read by `calibrate`.
std::string format_era_file(const EraDataset& era);
EraDataset parse_era_file(const std::string& text);

/// Builds a pinned snapshot directory from an existing cache for the given windows.
void write_fixture(const std::filesystem::path& cache_dir, const std::filesystem::path& fixture_dir,
                   const ClientConfig& config);

/// Directory of the pinned pre/post era snapshot shipped with the sources.
std::filesystem::path default_fixture_dir();

} // namespace kdyn::wikimedia

#endif // KDYN_WIKIMEDIA_HPP
