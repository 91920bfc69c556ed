#include "sentiflow/ingestion/align.hpp"

#include <algorithm>

#include "sentiflow/common/error.hpp"

namespace sentiflow::ingestion {

std::vector<FilledValue> forward_fill(std::span<const DatedValue> series) {
    std::vector<FilledValue> out;
    out.reserve(series.size());
    if (series.empty()) return out;
    if (!series.front().value)
        throw ValidationError("forward_fill: first entry (" + series.front().date.to_string() +
                              ") is missing; nothing to fill from");
    double last = *series.front().value;
    for (const auto& p : series) {
        if (p.value) last = *p.value;
        out.push_back({p.date, last});
    }
    return out;
}

Date align_to_trading_day(const Timestamp& ts, const TradingCalendar& cal, const AlignOptions& opts) {
    if (cal.empty()) throw ValidationError("align_to_trading_day: empty calendar");
    const Date day = ts.date();
    const auto& dates = cal.dates();
    auto it = std::lower_bound(dates.begin(), dates.end(), day);
    if (it != dates.end() && *it == day && opts.close_cutoff && ts.seconds_of_day() >= opts.cutoff_seconds) ++it;
    if (it == dates.end())
        throw ValidationError("timestamp " + ts.to_string() + " is beyond calendar (last trading date " +
                              dates.back().to_string() + ")");
    return *it;
}

std::vector<PriceBar> reindex_prices(std::span<const PriceBar> bars, const TradingCalendar& cal) {
    if (bars.empty()) throw ValidationError("reindex_prices: no bars");
    const std::string& ticker = bars.front().ticker;
    std::vector<DatedValue> closes, volumes;
    closes.reserve(cal.size());
    volumes.reserve(cal.size());
    std::size_t j = 0;
    for (const Date d : cal.dates()) {
        while (j < bars.size() && bars[j].date < d) ++j;
        if (j < bars.size() && bars[j].date == d) {
            closes.push_back({d, bars[j].close});
            volumes.push_back({d, static_cast<double>(bars[j].volume)});
        } else {
            closes.push_back({d, std::nullopt});
            volumes.push_back({d, std::nullopt});
        }
    }
    const auto fc = forward_fill(closes);
    const auto fv = forward_fill(volumes);
    std::vector<PriceBar> out;
    out.reserve(cal.size());
    for (std::size_t i = 0; i < fc.size(); ++i)
        out.push_back({ticker, fc[i].date, fc[i].value, static_cast<std::int64_t>(fv[i].value)});
    return out;
}

}  // namespace sentiflow::ingestion
