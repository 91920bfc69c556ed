#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sentiflow/aggregation/daily.hpp"
#include "sentiflow/common/date.hpp"
#include "sentiflow/ingestion/types.hpp"

namespace sentiflow::dataset {

inline constexpr std::size_t kDefaultWindow = 30;

// Per-date feature rows for one ticker, columns named by feature_names.
struct FusedFrame {
    std::string ticker;
    std::vector<std::string> feature_names;
    std::vector<Date> dates;
    std::vector<std::vector<double>> rows;  // [T][F]
    std::vector<double> closes;             // raw closes, used for targets

    std::size_t size() const { return dates.size(); }
};

// Joins calendar-aligned prices with daily sentiment rows and keeps the named
// columns. Dates without a sentiment row use the empty-day encoding.
// `daily` may be empty when only market columns are requested.
FusedFrame fuse(std::span<const ingestion::PriceBar> prices, std::span<const aggregation::DailyRow> daily,
                const std::vector<std::string>& feature_names);

struct Targets {
    std::vector<double> factor;  // close[t+1] / close[t]
    std::vector<int> binary;     // 1 iff close[t+1] > close[t]
};

// Throws ValidationError on fewer than 2 prices or any non-positive price.
Targets compute_targets(std::span<const double> closes);

struct Range {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    friend bool operator==(const Range&, const Range&) = default;
};

struct SplitFractions {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;
};

struct SplitRanges {
    Range train, val, test;
    friend bool operator==(const SplitRanges&, const SplitRanges&) = default;
};

// Contiguous chronological split at floor(train*T) and floor((train+val)*T).
SplitRanges temporal_split(std::size_t t, const SplitFractions& fractions = {});

struct ScalerParams {
    std::vector<std::string> feature_names;
    std::vector<double> min, max;
    std::vector<bool> degenerate;  // max == min
};

ScalerParams fit_minmax(std::span<const std::vector<double>> rows, const std::vector<std::string>& feature_names);
// (x - min) / (max - min), no clamping; degenerate features map to 0.
std::vector<std::vector<double>> apply_minmax(std::span<const std::vector<double>> rows,
                                              const std::vector<std::string>& feature_names,
                                              const ScalerParams& params);
std::vector<std::vector<double>> invert_minmax(std::span<const std::vector<double>> rows, const ScalerParams& params);

// Windows of `length` consecutive rows and the target of each window's last row.
struct SampleSet {
    std::size_t length = 0;
    std::size_t features = 0;
    std::vector<double> inputs;  // [N][length][features], row-major
    std::vector<double> factor;
    std::vector<int> binary;
    std::vector<Date> window_start;
    std::vector<Date> window_end;
    std::vector<Date> predicted;  // date whose close the target refers to

    std::size_t size() const { return factor.size(); }
    std::span<const double> sample(std::size_t i) const {
        return {inputs.data() + i * length * features, length * features};
    }
};

// Window k covers rows [k, k+length) and carries the target of row
// k+length-1. Needs at least length+1 rows; yields rows - length samples.
SampleSet make_windows(const FusedFrame& frame, const Targets& targets, std::size_t length = kDefaultWindow);

struct WindowedDataset {
    std::string ticker;
    std::vector<std::string> feature_names;
    std::size_t length = kDefaultWindow;
    SplitRanges rows;
    ScalerParams scaler;
    SampleSet train, val, test;
};

// Split rows, fit the scaler on train rows only, scale, then window each split
// on its own so no window straddles a split boundary.
WindowedDataset build_dataset(const FusedFrame& frame, std::size_t length = kDefaultWindow,
                              const SplitFractions& fractions = {});

// Directory layout: schema.json, <split>.bin (magic "SFWD", u32 version,
// u64 N, L, F, then N*L*F inputs and N factors as little-endian float64),
// <split>_samples.csv (window_start,window_end,predicted,factor,binary).
void save_dataset(const std::filesystem::path& dir, const WindowedDataset& ds, const std::string& provenance_hash);
WindowedDataset load_dataset(const std::filesystem::path& dir);
std::string dataset_provenance(const std::filesystem::path& dir);

}  // namespace sentiflow::dataset
