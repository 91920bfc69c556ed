#include "sentiflow/ingestion/sources.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <unordered_set>

#include "sentiflow/common/error.hpp"
#include "sentiflow/common/text.hpp"

namespace sentiflow::ingestion {

using nlohmann::json;

namespace {

std::string range_text(const std::string& ticker, Date start, Date end) {
    return ticker + " [" + start.to_string() + ", " + end.to_string() + "]";
}

std::string compact(Date d, const char* hhmm) {
    auto s = d.to_string();
    s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
    return s + "T" + hhmm;
}

// First day of the month after d.
Date next_month(Date d) {
    using namespace std::chrono;
    const auto ymd = d.ymd();
    const auto first = year_month_day{ymd.year() / ymd.month() / 1} + months{1};
    return Date{sys_days{first}};
}

}  // namespace

YahooChartSource::YahooChartSource(std::shared_ptr<http::Transport> transport, std::string base_url)
    : transport_(std::move(transport)), base_url_(std::move(base_url)) {}

std::vector<PriceBar> YahooChartSource::prices(const std::string& ticker, Date start, Date end) {
    using namespace std::chrono;
    const auto p1 = sys_seconds{start.sys_days()}.time_since_epoch().count();
    const auto p2 = sys_seconds{end.plus_days(1).sys_days()}.time_since_epoch().count();
    const std::string url = base_url_ + "/v8/finance/chart/" + http::url_encode(ticker) +
                            "?interval=1d&period1=" + std::to_string(p1) + "&period2=" + std::to_string(p2);
    const auto resp = transport_->get(url);
    if (resp.status == 401 || resp.status == 403) throw TransportError(name(), "authorization failed for " + ticker);
    if (resp.status == 404) return {};
    if (resp.status != 200)
        throw TransportError(name(), "HTTP " + std::to_string(resp.status) + " for " + range_text(ticker, start, end));
    std::vector<PriceBar> bars;
    try {
        const auto doc = json::parse(resp.body);
        const auto& result = doc.at("chart").at("result");
        if (!result.is_array() || result.empty()) return {};
        const auto& r = result.at(0);
        if (!r.contains("timestamp")) return {};
        const std::int64_t offset = r.value(json::json_pointer("/meta/gmtoffset"), std::int64_t{0});
        const auto& ts = r.at("timestamp");
        const auto& quote = r.at("indicators").at("quote").at(0);
        const auto& close = quote.at("close");
        const auto& volume = quote.at("volume");
        for (std::size_t i = 0; i < ts.size(); ++i) {
            if (close.at(i).is_null()) continue;
            const auto local = sys_seconds{seconds{ts.at(i).get<std::int64_t>() + offset}};
            const std::int64_t vol = volume.at(i).is_null() ? 0 : volume.at(i).get<std::int64_t>();
            bars.push_back({ticker, Date{floor<days>(local)}, close.at(i).get<double>(), vol});
        }
    } catch (const json::exception& e) {
        throw TransportError(name(), std::string("malformed chart response: ") + e.what());
    }
    return bars;
}

std::vector<PriceBar> StorePriceSource::prices(const std::string& ticker, Date, Date) {
    if (!std::filesystem::exists(store_.prices_path(ticker))) return {};
    return store_.load_prices(ticker);
}

AlphaVantageNewsSource::AlphaVantageNewsSource(std::shared_ptr<http::Transport> transport, std::string api_key,
                                               RateLimit limit, http::Sleeper sleeper, std::string base_url)
    : transport_(std::move(transport)),
      api_key_(std::move(api_key)),
      limit_(limit),
      sleeper_(std::move(sleeper)),
      base_url_(std::move(base_url)) {
    if (api_key_.empty()) throw ValidationError("AlphaVantage API key is empty");
}

std::string AlphaVantageNewsSource::api_key_from_env() {
    const char* key = std::getenv("ALPHAVANTAGE_API_KEY");
    if (!key || !*key) throw ValidationError("ALPHAVANTAGE_API_KEY is not set");
    return key;
}

std::string AlphaVantageNewsSource::request_page(const std::string& url) {
    for (int attempt = 0;; ++attempt) {
        if (has_requested_) {
            const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - last_request_);
            if (elapsed < limit_.min_interval) sleeper_(limit_.min_interval - elapsed);
        }
        last_request_ = std::chrono::steady_clock::now();
        has_requested_ = true;
        const auto resp = transport_->get(url);

        bool throttled = resp.status == 429;
        if (resp.status == 200) {
            const auto doc = json::parse(resp.body, nullptr, false);
            if (doc.is_discarded()) throw TransportError(name(), "response is not JSON");
            if (doc.contains("Error Message"))
                throw TransportError(name(), "request rejected: " + doc["Error Message"].get<std::string>());
            if (!doc.contains("feed") && (doc.contains("Note") || doc.contains("Information"))) throttled = true;
            if (!throttled) return resp.body;
        } else if (!throttled) {
            throw TransportError(name(), "HTTP " + std::to_string(resp.status));
        }
        if (attempt >= limit_.max_retries)
            throw TransportError(name(), "still rate limited after " + std::to_string(limit_.max_retries) + " retries");
        sleeper_(limit_.backoff_base * (1LL << attempt));
    }
}

NewsBatch AlphaVantageNewsSource::news(const std::string& ticker, Date start, Date end) {
    NewsBatch batch;
    for (Date page_start = start; page_start <= end;) {
        const Date next = next_month(page_start);
        const Date page_end = std::min(end, next.plus_days(-1));
        const std::string url = base_url_ + "/query?function=NEWS_SENTIMENT&tickers=" + http::url_encode(ticker) +
                                "&time_from=" + compact(page_start, "0000") + "&time_to=" +
                                compact(page_end, "2359") + "&sort=EARLIEST&limit=1000&apikey=" +
                                http::url_encode(api_key_);
        const auto doc = json::parse(request_page(url));
        for (const auto& entry : doc["feed"]) {
            try {
                const auto title = entry.value("title", std::string{});
                const auto when = entry.value("time_published", std::string{});
                if (trim(title).empty() || when.empty()) {
                    ++batch.skipped;
                    continue;
                }
                auto published = Timestamp::parse(when);
                std::string id = entry.value("url", std::string{});
                if (id.empty()) id = hex64(fnv1a(when + "\n" + title));
                batch.items.push_back({std::move(id), ticker, published, title});
            } catch (const std::exception&) {
                ++batch.skipped;
            }
        }
        page_start = next;
    }
    return batch;
}

NewsBatch StoreNewsSource::news(const std::string& ticker, Date, Date) {
    if (!std::filesystem::exists(store_.news_path(ticker))) return {};
    return {store_.load_news(ticker), 0};
}

std::vector<PriceBar> fetch_prices(const std::string& ticker, Date start, Date end, PriceSource& source,
                                   const RawStore* store) {
    if (end < start) throw ValidationError("fetch_prices: start after end for " + range_text(ticker, start, end));
    auto raw = source.prices(ticker, start, end);
    std::vector<PriceBar> bars;
    for (auto& b : raw) {
        if (b.date < start || end < b.date) continue;
        b.ticker = ticker;
        bars.push_back(std::move(b));
    }
    std::sort(bars.begin(), bars.end(), [](const PriceBar& a, const PriceBar& b) { return a.date < b.date; });
    if (bars.empty()) throw NoDataError("no price data for " + range_text(ticker, start, end) + " from " + source.name());
    validate_bars(bars);
    if (store) store->save_prices(ticker, bars);
    return bars;
}

NewsFetchResult fetch_news(const std::string& ticker, Date start, Date end, NewsSource& source,
                           const RawStore* store) {
    if (end < start) throw ValidationError("fetch_news: start after end for " + range_text(ticker, start, end));
    auto batch = source.news(ticker, start, end);
    NewsFetchResult result;
    result.skipped = batch.skipped;
    std::unordered_set<std::string> seen;
    for (auto& item : batch.items) {
        const Date d = item.published_at.date();
        if (d < start || end < d) continue;
        if (item.headline.empty()) {
            ++result.skipped;
            continue;
        }
        if (!seen.insert(item.id).second) {
            ++result.duplicates;
            continue;
        }
        result.items.push_back(std::move(item));
    }
    std::stable_sort(result.items.begin(), result.items.end(), [](const NewsItem& a, const NewsItem& b) {
        return a.published_at < b.published_at;
    });
    if (result.skipped > 0)
        std::cerr << "warning: " << source.name() << ": skipped " << result.skipped << " malformed news record(s) for "
                  << ticker << '\n';
    if (store) store->save_news(ticker, result.items);
    return result;
}

}  // namespace sentiflow::ingestion
