#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sentiflow/common/date.hpp"
#include "sentiflow/ingestion/types.hpp"

namespace sentiflow::ingestion {

struct DatedValue {
    Date date;
    std::optional<double> value;
};

struct FilledValue {
    Date date;
    double value = 0.0;
    friend bool operator==(const FilledValue&, const FilledValue&) = default;
};

// Replaces each missing value by the nearest preceding one. Throws
// ValidationError when the first entry is missing.
std::vector<FilledValue> forward_fill(std::span<const DatedValue> series);

struct AlignOptions {
    // When set, timestamps at or after cutoff_seconds (UTC seconds of day) on a
    // trading date roll to the next trading date.
    bool close_cutoff = false;
    int cutoff_seconds = 20 * 3600;
};

// Maps a publication timestamp to the trading date it is attributed to: the
// same date if it trades, otherwise the next calendar trading date.
// Throws ValidationError("beyond calendar") past the last trading date.
Date align_to_trading_day(const Timestamp& ts, const TradingCalendar& cal, const AlignOptions& opts = {});

// Reindexes one ticker's bars onto the calendar, forward-filling close and
// volume on dates the ticker has no bar. Throws if the calendar starts before
// the ticker's first bar.
std::vector<PriceBar> reindex_prices(std::span<const PriceBar> bars, const TradingCalendar& cal);

}  // namespace sentiflow::ingestion
