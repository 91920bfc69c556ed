#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sentiflow/ingestion/types.hpp"

namespace sentiflow::ingestion {

// Prices: CSV with header ticker,date,close,volume.
void write_prices(const std::filesystem::path& path, std::span<const PriceBar> bars);
std::vector<PriceBar> read_prices(const std::filesystem::path& path);

// News: JSON Lines, one {"id","ticker","published_at","headline"} object per line.
void write_news(const std::filesystem::path& path, std::span<const NewsItem> items);
std::vector<NewsItem> read_news(const std::filesystem::path& path);

// Directory layout for raw data: <root>/prices/<TICKER>.csv and
// <root>/news/<TICKER>.jsonl.
class RawStore {
public:
    explicit RawStore(std::filesystem::path root) : root_(std::move(root)) {}

    std::filesystem::path prices_path(const std::string& ticker) const;
    std::filesystem::path news_path(const std::string& ticker) const;

    void save_prices(const std::string& ticker, std::span<const PriceBar> bars) const;
    void save_news(const std::string& ticker, std::span<const NewsItem> items) const;
    std::vector<PriceBar> load_prices(const std::string& ticker) const;
    std::vector<NewsItem> load_news(const std::string& ticker) const;

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
};

}  // namespace sentiflow::ingestion
