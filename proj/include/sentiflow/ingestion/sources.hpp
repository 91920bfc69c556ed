#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "sentiflow/common/http.hpp"
#include "sentiflow/ingestion/store.hpp"
#include "sentiflow/ingestion/types.hpp"

namespace sentiflow::ingestion {

// A daily price provider. Implementations return whatever bars the upstream
// has for the range; fetch_prices() does the filtering and validation.
class PriceSource {
public:
    virtual ~PriceSource() = default;
    virtual std::string name() const = 0;
    virtual std::vector<PriceBar> prices(const std::string& ticker, Date start, Date end) = 0;
};

struct NewsBatch {
    std::vector<NewsItem> items;  // may contain duplicates across pages
    std::size_t skipped = 0;      // malformed records dropped
};

class NewsSource {
public:
    virtual ~NewsSource() = default;
    virtual std::string name() const = 0;
    virtual NewsBatch news(const std::string& ticker, Date start, Date end) = 0;
};

// Fixed-interval throttle plus exponential backoff on throttling responses.
struct RateLimit {
    std::chrono::milliseconds min_interval{12000};
    std::chrono::milliseconds backoff_base{2000};
    int max_retries = 5;
};

// Yahoo Finance v8 chart endpoint (daily interval).
class YahooChartSource final : public PriceSource {
public:
    YahooChartSource(std::shared_ptr<http::Transport> transport,
                     std::string base_url = "https://query1.finance.yahoo.com");
    std::string name() const override { return "yahoo"; }
    std::vector<PriceBar> prices(const std::string& ticker, Date start, Date end) override;

private:
    std::shared_ptr<http::Transport> transport_;
    std::string base_url_;
};

// Reads bars from a directory laid out like RawStore (used for offline runs).
class StorePriceSource final : public PriceSource {
public:
    explicit StorePriceSource(std::filesystem::path root) : store_(std::move(root)) {}
    std::string name() const override { return "store:" + store_.root().string(); }
    std::vector<PriceBar> prices(const std::string& ticker, Date start, Date end) override;

private:
    RawStore store_;
};

// AlphaVantage NEWS_SENTIMENT client. The window is requested in monthly
// pages; each page is throttled and retried on rate-limit responses.
class AlphaVantageNewsSource final : public NewsSource {
public:
    AlphaVantageNewsSource(std::shared_ptr<http::Transport> transport, std::string api_key, RateLimit limit = {},
                           http::Sleeper sleeper = http::real_sleeper(),
                           std::string base_url = "https://www.alphavantage.co");

    // Reads ALPHAVANTAGE_API_KEY; throws ValidationError if unset.
    static std::string api_key_from_env();

    std::string name() const override { return "alphavantage"; }
    NewsBatch news(const std::string& ticker, Date start, Date end) override;

private:
    std::string request_page(const std::string& url);

    std::shared_ptr<http::Transport> transport_;
    std::string api_key_;
    RateLimit limit_;
    http::Sleeper sleeper_;
    std::string base_url_;
    std::chrono::steady_clock::time_point last_request_{};
    bool has_requested_ = false;
};

class StoreNewsSource final : public NewsSource {
public:
    explicit StoreNewsSource(std::filesystem::path root) : store_(std::move(root)) {}
    std::string name() const override { return "store:" + store_.root().string(); }
    NewsBatch news(const std::string& ticker, Date start, Date end) override;

private:
    RawStore store_;
};

// Fetches bars in [start, end], sorted and validated; persists them when a
// store is given. Throws NoDataError naming ticker and range when empty.
std::vector<PriceBar> fetch_prices(const std::string& ticker, Date start, Date end, PriceSource& source,
                                   const RawStore* store = nullptr);

struct NewsFetchResult {
    std::vector<NewsItem> items;
    std::size_t skipped = 0;
    std::size_t duplicates = 0;
};

// Fetches, deduplicates by id and persists news for [start, end].
NewsFetchResult fetch_news(const std::string& ticker, Date start, Date end, NewsSource& source,
                           const RawStore* store = nullptr);

}  // namespace sentiflow::ingestion
