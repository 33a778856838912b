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
#include "kdyn/wikimedia.hpp"

#include "kdyn/errors.hpp"
#include "kdyn/text.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <set>
#include <thread>

namespace kdyn::wikimedia
{

using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

std::string utc_now()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool all_digits(std::string_view s)
{
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return c >= '0' && c <= '9';
    });
}

class HttplibTransport : public Transport
{
public:
    explicit HttplibTransport(const ClientConfig& config)
        : m_config(config)
    {
    }

    HttpResponse get(const std::string& url) override
    {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) {
            throw NetworkError("malformed URL '" + url + "'");
        }
        const auto path_start = url.find('/', scheme_end + 3);
        const std::string origin = url.substr(0, path_start);
        const std::string path   = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client client(origin);
        if (!client.is_valid()) {
            throw NetworkError("unsupported URL '" + url + "'");
        }
        const auto timeout = std::chrono::milliseconds(static_cast<long>(m_config.timeout_seconds * 1000.0));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_follow_location(true);
        auto res = client.Get(path, {{"User-Agent", m_config.user_agent}, {"Accept", "application/json"}});
        if (!res) {
            throw NetworkError("GET " + url + " failed: " + httplib::to_string(res.error()));
        }
        HttpResponse out;
        out.status = res->status;
        out.body   = res->body;
        if (res->has_header("Retry-After")) {
            const std::string v = res->get_header_value("Retry-After");
            if (all_digits(v)) {
                out.retry_after = std::stod(v);
            }
        }
        return out;
    }

private:
    ClientConfig m_config;
};

const json& require(const json& obj, const std::string& key, const std::string& context)
{
    if (!obj.is_object() || !obj.contains(key)) {
        throw SchemaError("missing key '" + key + "' in " + context);
    }
    return obj.at(key);
}

std::string window_key(const EraWindow& w)
{
    return w.start.str() + "_" + w.end.str();
}

const char* const editor_buckets[] = {"5..24-edits", "25..99-edits", "100..-edits"};

} // namespace

std::unique_ptr<Transport> make_http_transport(const ClientConfig& config)
{
    return std::make_unique<HttplibTransport>(config);
}

std::optional<double> MonthlyCounts::at(YearMonth m) const
{
    const auto it = std::lower_bound(months.begin(), months.end(), m);
    if (it == months.end() || *it != m) {
        return std::nullopt;
    }
    return values[static_cast<std::size_t>(it - months.begin())];
}

MetricRequest new_pages_request(const ClientConfig& c, const std::string& page_type)
{
    return {"new-pages_" + c.editor_type + "_" + page_type,
            "metrics/edited-pages/new/" + c.project + "/" + c.editor_type + "/" + page_type + "/monthly", "new_pages",
            true, false};
}

MetricRequest editors_request(const ClientConfig& c, const std::string& activity_level)
{
    return {"editors_" + c.editor_type + "_" + c.editors_page_type + "_" + activity_level,
            "metrics/editors/aggregate/" + c.project + "/" + c.editor_type + "/" + c.editors_page_type + "/" +
                activity_level + "/monthly",
            "editors", true, false};
}

MetricRequest pageviews_request(const ClientConfig& c)
{
    return {"pageviews_all-access_user", "metrics/pageviews/aggregate/" + c.project + "/all-access/user/monthly",
            "views", false, true};
}

YearMonth parse_timestamp(const std::string& ts)
{
    auto bad = [&]() -> YearMonth {
        throw SchemaError("malformed month key '" + ts + "'");
    };
    std::string ym;
    if (ts.size() >= 10 && ts[4] == '-' && ts[7] == '-') {
        ym = ts.substr(0, 7);
    }
    else if ((ts.size() == 8 || ts.size() == 10) && all_digits(ts)) {
        ym = ts.substr(0, 4) + "-" + ts.substr(4, 2);
    }
    else {
        return bad();
    }
    try {
        return YearMonth::parse(ym, "timestamp");
    }
    catch (const ValidationError&) {
        return bad();
    }
}

MonthlyCounts parse_payload(const std::string& body, const MetricRequest& request, const EraWindow& window)
{
    json doc;
    try {
        doc = json::parse(body);
    }
    catch (const json::parse_error& e) {
        throw SchemaError(request.metric + ": response is not JSON (" + e.what() + ")");
    }
    const json& items = require(doc, "items", request.metric);
    if (!items.is_array()) {
        throw SchemaError(request.metric + ": 'items' is not an array");
    }
    std::vector<const json*> rows;
    for (const auto& item : items) {
        if (request.nested_results) {
            const json& results = require(item, "results", request.metric);
            if (!results.is_array()) {
                throw SchemaError(request.metric + ": 'results' is not an array");
            }
            for (const auto& r : results) {
                rows.push_back(&r);
            }
        }
        else {
            rows.push_back(&item);
        }
    }

    std::vector<std::pair<YearMonth, double>> parsed;
    for (const json* row : rows) {
        const json& ts = require(*row, "timestamp", request.metric);
        if (!ts.is_string()) {
            throw SchemaError(request.metric + ": timestamp is not a string");
        }
        const YearMonth m = parse_timestamp(ts.get<std::string>());
        const json& v     = require(*row, request.value_key, request.metric + " row " + ts.get<std::string>());
        if (!v.is_number() || v.get<double>() < 0.0 || !std::isfinite(v.get<double>())) {
            throw SchemaError(request.metric + ": invalid '" + request.value_key + "' at " + m.str());
        }
        if (m < window.start || window.end < m) {
            continue;
        }
        parsed.emplace_back(m, v.get<double>());
    }
    if (parsed.empty()) {
        throw SchemaError(request.metric + ": empty response for " + window_key(window));
    }
    std::sort(parsed.begin(), parsed.end(), [](const auto& a, const auto& b) {
        return a.first < b.first;
    });
    MonthlyCounts out;
    for (const auto& [m, v] : parsed) {
        if (!out.months.empty() && out.months.back() == m) {
            throw SchemaError(request.metric + ": duplicate month key '" + m.str() + "'");
        }
        out.months.push_back(m);
        out.values.push_back(v);
    }
    return out;
}

std::string format_counts_csv(const MonthlyCounts& counts)
{
    std::string out = "# source=" + std::string(to_string(counts.provenance.source)) +
                      "\n# fetched_at=" + counts.provenance.fetched_at + "\n";
    for (const auto& note : counts.provenance.notes) {
        out += "# note=" + note + "\n";
    }
    out += "month,value\n";
    for (std::size_t i = 0; i < counts.size(); ++i) {
        out += counts.months[i].str() + "," + text::format_double(counts.values[i]) + "\n";
    }
    return out;
}

MonthlyCounts parse_counts_csv(const std::string& content)
{
    MonthlyCounts out;
    bool header = false;
    for (auto line : text::split(content, '\n')) {
        line = text::trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            const auto body = text::trim(line.substr(1));
            const auto eq   = body.find('=');
            if (eq == std::string_view::npos) {
                continue;
            }
            const auto key = body.substr(0, eq);
            const std::string value(body.substr(eq + 1));
            if (key == "source") {
                out.provenance.source = data_source_from_string(value);
            }
            else if (key == "fetched_at") {
                out.provenance.fetched_at = value;
            }
            else if (key == "note") {
                out.provenance.notes.push_back(value);
            }
            continue;
        }
        if (!header) {
            if (line != "month,value") {
                throw SchemaError("counts table: unexpected header '" + std::string(line) + "'");
            }
            header = true;
            continue;
        }
        const auto cells = text::split(line, ',');
        if (cells.size() != 2) {
            throw SchemaError("counts table: malformed row '" + std::string(line) + "'");
        }
        try {
            out.months.push_back(YearMonth::parse(cells[0], "month"));
            out.values.push_back(text::parse_double(cells[1], "value"));
        }
        catch (const ValidationError& e) {
            throw SchemaError(std::string("counts table: ") + e.what());
        }
    }
    if (!header) {
        throw SchemaError("counts table: missing header");
    }
    return out;
}

Client::Client(ClientConfig config, std::optional<fs::path> cache_dir, Mode mode, std::unique_ptr<Transport> transport)
    : m_config(std::move(config))
    , m_cache(std::move(cache_dir))
    , m_mode(mode)
    , m_transport(std::move(transport))
    , m_sleep([](double s) {
        std::this_thread::sleep_for(std::chrono::duration<double>(s));
    })
{
    if (m_config.attempts < 1) {
        throw ValidationError("attempts", "must be at least 1");
    }
    if (mode != Mode::Live && !m_cache) {
        throw ValidationError("cache_dir", "offline and fixture modes need a directory");
    }
    if (mode == Mode::Live && !m_transport) {
        m_transport = make_http_transport(m_config);
    }
}

fs::path Client::cache_base(const MetricRequest& request, const EraWindow& window) const
{
    return *m_cache / m_config.project / request.metric / window_key(window);
}

std::optional<std::string> Client::download(const std::string& url)
{
    std::string last_error;
    double backoff = m_config.backoff_seconds;
    for (int attempt = 1; attempt <= m_config.attempts; ++attempt) {
        std::optional<double> wait;
        std::optional<HttpResponse> res;
        try {
            ++m_requests;
            res = m_transport->get(url);
        }
        catch (const NetworkError& e) {
            last_error = e.what();
        }
        if (res) {
            if (res->status == 200) {
                return res->body;
            }
            if (res->status == 404) {
                return std::nullopt;
            }
            last_error = "HTTP " + std::to_string(res->status);
            if (res->status != 429 && res->status < 500) {
                throw NetworkError("GET " + url + ": " + last_error);
            }
            wait = res->retry_after;
        }
        if (attempt < m_config.attempts) {
            m_sleep(wait ? std::max(*wait, backoff) : backoff);
            backoff *= 2.0;
        }
    }
    throw NetworkError("gave up after " + std::to_string(m_config.attempts) + " attempts: " + last_error);
}

std::optional<MonthlyCounts> Client::fetch_metric(const MetricRequest& request, const EraWindow& window)
{
    window.validate();
    if (m_cache) {
        const fs::path base = cache_base(request, window);
        fs::path raw_path   = base;
        raw_path += ".raw.json";
        fs::path csv_path = base;
        csv_path += ".csv";
        if (fs::exists(raw_path) && fs::exists(csv_path)) {
            MonthlyCounts cached = parse_counts_csv(text::read_file(csv_path));
            const MonthlyCounts reparsed = parse_payload(text::read_file(raw_path), request, window);
            if (cached.months != reparsed.months || cached.values != reparsed.values) {
                throw SchemaError("cache entry " + base.string() + " does not match its raw payload");
            }
            cached.provenance.source = m_mode == Mode::Fixture ? DataSource::Fixture : DataSource::Cache;
            return cached;
        }
        fs::path missing = base;
        missing += ".unavailable";
        if (fs::exists(missing)) {
            return std::nullopt;
        }
        if (m_mode != Mode::Live) {
            throw IoError("no " + std::string(m_mode == Mode::Fixture ? "fixture" : "cache") + " entry for " +
                          request.metric + " " + window_key(window) + " under " + m_cache->string());
        }
    }

    std::string start = window.start.compact();
    std::string end;
    if (request.hourly_timestamps) {
        start += "00";
        end = window.end.plus(1).compact() + "00";
    }
    else {
        end = window.end.plus(1).compact();
    }
    std::string url = m_config.base_url;
    if (!url.empty() && url.back() != '/') {
        url += '/';
    }
    url += request.path + "/" + start + "/" + end;

    const auto body = download(url);
    if (!body) {
        if (m_cache) {
            fs::path missing = cache_base(request, window);
            missing += ".unavailable";
            text::write_file_atomic(missing, url + "\n");
        }
        return std::nullopt;
    }
    MonthlyCounts counts         = parse_payload(*body, request, window);
    counts.provenance.source     = DataSource::Api;
    counts.provenance.fetched_at = utc_now();
    if (m_cache) {
        const fs::path base = cache_base(request, window);
        fs::path raw_path   = base;
        raw_path += ".raw.json";
        fs::path csv_path = base;
        csv_path += ".csv";
        text::write_file_atomic(raw_path, *body);
        text::write_file_atomic(csv_path, format_counts_csv(counts));
    }
    return counts;
}

MonthlyCounts Client::fetch_new_pages(const EraWindow& window)
{
    window.validate();
    if (auto content = fetch_metric(new_pages_request(m_config, "content"), window)) {
        return *content;
    }
    auto all = fetch_metric(new_pages_request(m_config, "all-page-types"), window);
    if (!all) {
        throw IoError("new pages unavailable for " + window_key(window));
    }
    all->provenance.notes.push_back("content page type unavailable; used all-page-types");
    return *all;
}

MonthlyCounts Client::fetch_active_editors(const EraWindow& window)
{
    window.validate();
    std::vector<std::optional<MonthlyCounts>> buckets;
    for (const char* level : editor_buckets) {
        buckets.push_back(fetch_metric(editors_request(m_config, level), window));
    }
    std::optional<MonthlyCounts> fallback;
    bool fallback_loaded = false;

    MonthlyCounts out;
    std::string fetched_at;
    DataSource source = DataSource::Api;
    for (const auto& b : buckets) {
        if (b) {
            fetched_at = std::max(fetched_at, b->provenance.fetched_at);
            source     = b->provenance.source;
        }
    }
    for (const YearMonth m : window.month_list()) {
        double sum    = 0.0;
        bool complete = true;
        for (const auto& b : buckets) {
            const auto v = b ? b->at(m) : std::nullopt;
            if (!v) {
                complete = false;
                break;
            }
            sum += *v;
        }
        if (complete) {
            out.months.push_back(m);
            out.values.push_back(sum);
            continue;
        }
        if (!fallback_loaded) {
            fallback        = fetch_metric(editors_request(m_config, "all-activity-levels"), window);
            fallback_loaded = true;
            if (fallback) {
                fetched_at = std::max(fetched_at, fallback->provenance.fetched_at);
                source     = fallback->provenance.source;
            }
        }
        if (const auto v = fallback ? fallback->at(m) : std::nullopt) {
            out.months.push_back(m);
            out.values.push_back(*v);
            out.provenance.notes.push_back(m.str() + ": activity bucket missing; used >=1 edit level");
        }
    }
    if (out.months.empty()) {
        throw SchemaError("editors: no usable months for " + window_key(window));
    }
    out.provenance.source     = source;
    out.provenance.fetched_at = fetched_at;
    return out;
}

MonthlyCounts Client::fetch_pageviews(const EraWindow& window)
{
    window.validate();
    auto views = fetch_metric(pageviews_request(m_config), window);
    if (!views) {
        throw IoError("pageviews unavailable for " + window_key(window));
    }
    return *views;
}

MonthlySeries assemble_series(const MonthlyCounts& new_pages, const MonthlyCounts& editors,
                              const MonthlyCounts& pageviews, bool permissive)
{
    MonthlySeries s;
    std::vector<std::string> gaps;
    std::set<YearMonth> all_months(new_pages.months.begin(), new_pages.months.end());
    all_months.insert(editors.months.begin(), editors.months.end());
    all_months.insert(pageviews.months.begin(), pageviews.months.end());
    for (const YearMonth m : all_months) {
        const auto dk = new_pages.at(m), h = editors.at(m), q = pageviews.at(m);
        if (dk && h && q) {
            s.months.push_back(m);
            s.delta_K.push_back(*dk);
            s.H.push_back(*h);
            s.Q_millions.push_back(*q / 1e6);
        }
        else {
            gaps.push_back(m.str());
        }
    }
    if (s.size() < 12) {
        throw InsufficientDataError("inner join kept " + std::to_string(s.size()) + " months; at least 12 needed");
    }
    // Months absent from every source still break contiguity.
    for (std::size_t i = 1; i < s.size(); ++i) {
        for (int o = s.months[i - 1].ordinal() + 1; o < s.months[i].ordinal(); ++o) {
            const auto m = YearMonth::from_ordinal(o).str();
            if (std::find(gaps.begin(), gaps.end(), m) == gaps.end()) {
                gaps.push_back(m);
            }
        }
    }
    std::sort(gaps.begin(), gaps.end());
    s.provenance["new_pages"] = new_pages.provenance;
    s.provenance["editors"]   = editors.provenance;
    s.provenance["pageviews"] = pageviews.provenance;
    if (!s.contiguous()) {
        std::string list;
        for (const auto& g : gaps) {
            list += (list.empty() ? "" : " ") + g;
        }
        if (!permissive) {
            throw ValidationError("months", "inner join is not contiguous; missing " + list);
        }
        for (auto& [name, prov] : s.provenance) {
            prov.notes.push_back("join gap dropped: " + list);
        }
    }
    s.validate();
    return s;
}

MonthlySeries assemble_series(Client& client, const EraWindow& window, bool permissive)
{
    window.validate();
    const auto new_pages = client.fetch_new_pages(window);
    const auto editors   = client.fetch_active_editors(window);
    const auto views     = client.fetch_pageviews(window);
    return assemble_series(new_pages, editors, views, permissive);
}

double build_initial_stock(YearMonth era_start, const MonthlyCounts& history)
{
    double sum = 0.0;
    for (int o = history_start.ordinal(); o < era_start.ordinal(); ++o) {
        const auto m = YearMonth::from_ordinal(o);
        const auto v = history.at(m);
        if (!v) {
            throw InsufficientDataError("new-pages history is missing " + m.str());
        }
        sum += *v;
    }
    return sum;
}

double build_kmax(double multiplier, const MonthlyCounts& history)
{
    if (multiplier != 1.25 && multiplier != 1.50) {
        throw ValidationError("kmax_multiplier", "must be 1.25 or 1.50");
    }
    return multiplier * build_initial_stock(kmax_through.plus(1), history);
}

EraDataset load_era(Client& client, const EraWindow& window, bool permissive)
{
    EraDataset era;
    era.window  = window;
    era.series  = assemble_series(client, window, permissive);
    const auto history = client.fetch_new_pages({history_start, kmax_through, "history"});
    era.K0      = build_initial_stock(window.start, history);
    era.K_max   = build_kmax(1.25, history);
    era.series.provenance["history"] = history.provenance;
    return era;
}

std::string format_era_file(const EraDataset& era)
{
    json doc;
    doc["label"] = era.window.label;
    doc["start"] = era.window.start.str();
    doc["end"]   = era.window.end.str();
    doc["K0"]    = era.K0;
    doc["K_max"] = era.K_max;
    json months  = json::array();
    for (const auto& m : era.series.months) {
        months.push_back(m.str());
    }
    doc["months"]     = months;
    doc["delta_K"]    = era.series.delta_K;
    doc["H"]          = era.series.H;
    doc["Q_millions"] = era.series.Q_millions;
    json prov         = json::object();
    for (const auto& [name, p] : era.series.provenance) {
        prov[name] = {{"source", std::string(to_string(p.source))}, {"fetched_at", p.fetched_at}, {"notes", p.notes}};
    }
    doc["provenance"] = prov;
    return doc.dump(2) + "\n";
}

EraDataset parse_era_file(const std::string& content)
{
    json doc;
    try {
        doc = json::parse(content);
    }
    catch (const json::parse_error& e) {
        throw SchemaError(std::string("era file is not JSON: ") + e.what());
    }
    EraDataset era;
    try {
        era.window.label = require(doc, "label", "era file").get<std::string>();
        era.window.start = YearMonth::parse(require(doc, "start", "era file").get<std::string>(), "start");
        era.window.end   = YearMonth::parse(require(doc, "end", "era file").get<std::string>(), "end");
        era.K0           = require(doc, "K0", "era file").get<double>();
        era.K_max        = require(doc, "K_max", "era file").get<double>();
        for (const auto& m : require(doc, "months", "era file")) {
            era.series.months.push_back(YearMonth::parse(m.get<std::string>(), "months"));
        }
        era.series.delta_K    = require(doc, "delta_K", "era file").get<std::vector<double>>();
        era.series.H          = require(doc, "H", "era file").get<std::vector<double>>();
        era.series.Q_millions = require(doc, "Q_millions", "era file").get<std::vector<double>>();
        if (doc.contains("provenance")) {
            for (const auto& [name, p] : doc.at("provenance").items()) {
                Provenance prov;
                prov.source     = data_source_from_string(p.at("source").get<std::string>());
                prov.fetched_at = p.value("fetched_at", "");
                prov.notes      = p.value("notes", std::vector<std::string>{});
                era.series.provenance[name] = prov;
            }
        }
    }
    catch (const json::exception& e) {
        throw SchemaError(std::string("era file: ") + e.what());
    }
    era.window.validate();
    era.series.validate();
    if (!(era.K0 >= 0.0) || !(era.K_max > era.K0)) {
        throw ValidationError("K_max", "era file needs 0 <= K0 < K_max");
    }
    return era;
}

void write_fixture(const fs::path& cache_dir, const fs::path& fixture_dir, const ClientConfig& config)
{
    Client source(config, cache_dir, Mode::Offline);
    const std::vector<EraWindow> windows{EraWindow::pre_chatgpt(), EraWindow::post_chatgpt(),
                                         {history_start, kmax_through, "history"}};
    const fs::path src_root = cache_dir / config.project;
    const fs::path dst_root = fixture_dir / config.project;
    json entries = json::array();
    for (const auto& w : windows) {
        // Reading through the client checks every entry against its raw payload.
        if (w.label == "history") {
            source.fetch_new_pages(w);
        }
        else {
            assemble_series(source, w, false);
        }
        const std::string key = window_key(w);
        for (const auto& dir : fs::directory_iterator(src_root)) {
            for (const char* ext : {".raw.json", ".csv", ".unavailable"}) {
                const fs::path from = dir.path() / (key + ext);
                if (fs::exists(from)) {
                    const fs::path to = dst_root / dir.path().filename() / from.filename();
                    text::write_file_atomic(to, text::read_file(from));
                    entries.push_back((dir.path().filename() / from.filename()).generic_string());
                }
            }
        }
    }
    std::sort(entries.begin(), entries.end());
    json manifest{{"version", 1},
                  {"project", config.project},
                  {"base_url", config.base_url},
                  {"created", utc_now()},
                  {"windows", {window_key(windows[0]), window_key(windows[1]), window_key(windows[2])}},
                  {"files", entries}};
    text::write_file_atomic(fixture_dir / "manifest.json", manifest.dump(2) + "\n");
}

fs::path default_fixture_dir()
{
#ifdef KDYN_SOURCE_DIR
    return fs::path(KDYN_SOURCE_DIR) / "data" / "fixtures" / "wikipedia";
#else
    return fs::path("data") / "fixtures" / "wikipedia";
#endif
}

} // namespace kdyn::wikimedia
