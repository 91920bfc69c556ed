#include "sentiflow/ingestion/types.hpp"

#include <algorithm>
#include <map>

#include "sentiflow/common/error.hpp"

namespace sentiflow::ingestion {

void validate_bars(std::span<const PriceBar> bars) {
    std::map<std::string, Date> last;
    for (const auto& b : bars) {
        if (!(b.close > 0.0))
            throw ValidationError(b.ticker + " " + b.date.to_string() + ": close must be > 0");
        if (b.volume < 0) throw ValidationError(b.ticker + " " + b.date.to_string() + ": volume must be >= 0");
        auto it = last.find(b.ticker);
        if (it != last.end() && !(it->second < b.date))
            throw ValidationError(b.ticker + ": dates must strictly increase (" + it->second.to_string() + " then " +
                                  b.date.to_string() + ")");
        last[b.ticker] = b.date;
    }
}

TradingCalendar::TradingCalendar(std::vector<Date> dates) : dates_(std::move(dates)) {
    for (std::size_t i = 0; i < dates_.size(); ++i) {
        if (dates_[i].is_weekend())
            throw ValidationError("trading calendar contains weekend date " + dates_[i].to_string());
        if (i > 0 && !(dates_[i - 1] < dates_[i]))
            throw ValidationError("trading calendar must be strictly increasing at " + dates_[i].to_string());
    }
}

TradingCalendar TradingCalendar::from_bars(std::span<const PriceBar> bars) {
    std::vector<Date> dates;
    dates.reserve(bars.size());
    for (const auto& b : bars) dates.push_back(b.date);
    std::sort(dates.begin(), dates.end());
    dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
    return TradingCalendar(std::move(dates));
}

bool TradingCalendar::contains(Date d) const { return std::binary_search(dates_.begin(), dates_.end(), d); }

std::optional<std::size_t> TradingCalendar::index_of(Date d) const {
    auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
    if (it == dates_.end() || *it != d) return std::nullopt;
    return static_cast<std::size_t>(it - dates_.begin());
}

}  // namespace sentiflow::ingestion
