#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sentiflow/common/date.hpp"

namespace sentiflow::ingestion {

struct PriceBar {
    std::string ticker;
    Date date;
    double close = 0.0;
    std::int64_t volume = 0;

    friend bool operator==(const PriceBar&, const PriceBar&) = default;
};

struct NewsItem {
    std::string id;
    std::string ticker;
    Timestamp published_at;
    std::string headline;

    friend bool operator==(const NewsItem&, const NewsItem&) = default;
};

// Throws ValidationError if close <= 0, volume < 0, or dates are not strictly
// increasing within a ticker.
void validate_bars(std::span<const PriceBar> bars);

// Ordered trading dates for a study window. Built from price bars: the set
// of dates on which at least one ticker has a bar.
class TradingCalendar {
public:
    TradingCalendar() = default;
    explicit TradingCalendar(std::vector<Date> dates);

    static TradingCalendar from_bars(std::span<const PriceBar> bars);

    const std::vector<Date>& dates() const { return dates_; }
    std::size_t size() const { return dates_.size(); }
    bool empty() const { return dates_.empty(); }
    bool contains(Date d) const;
    // Index of d, or std::nullopt if d is not a trading date.
    std::optional<std::size_t> index_of(Date d) const;

private:
    std::vector<Date> dates_;
};

}  // namespace sentiflow::ingestion
