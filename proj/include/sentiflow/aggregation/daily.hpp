#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sentiflow/common/date.hpp"
#include "sentiflow/ingestion/align.hpp"
#include "sentiflow/ingestion/types.hpp"
#include "sentiflow/sentiment/label.hpp"

namespace sentiflow::aggregation {

using sentiment::Label;
using sentiment::SentimentPrediction;

struct DailySentimentFeatures {
    std::size_t count_neg = 0;
    std::size_t count_neu = 0;
    std::size_t count_pos = 0;
    double score_sum = 0.0;
    double score_min = 0.0;
    double score_max = 0.0;
    Label majority = Label::neutral;

    std::size_t total() const { return count_neg + count_neu + count_pos; }
    std::array<double, 3> majority_one_hot() const;
    // Values in the order of sentiment_feature_names().
    std::array<double, 9> values() const;

    friend bool operator==(const DailySentimentFeatures&, const DailySentimentFeatures&) = default;
};

// negative -> -confidence, neutral -> 0, positive -> +confidence.
double signed_score(const SentimentPrediction& p);

// Counts per label, sum/min/max of signed scores, majority vote with ties
// resolved to neutral. An empty day is all zeros with a neutral majority.
DailySentimentFeatures aggregate_day(std::span<const SentimentPrediction> preds);

enum class AblationVariant { full, wo_count, wo_sum, wo_count_sum, wo_majority };

inline constexpr std::array<AblationVariant, 5> kAllVariants{AblationVariant::full, AblationVariant::wo_count,
                                                             AblationVariant::wo_sum, AblationVariant::wo_count_sum,
                                                             AblationVariant::wo_majority};

std::string to_string(AblationVariant v);
AblationVariant parse_variant(const std::string& s);

struct FeatureOptions {
    // When set, wo_sum and wo_count_sum also drop score_min and score_max.
    bool wo_sum_drops_minmax = false;
};

const std::vector<std::string>& sentiment_feature_names();
const std::vector<std::string>& market_feature_names();

// Sentiment names kept by the variant followed by the market names.
std::vector<std::string> select_features(AblationVariant variant, const FeatureOptions& opts = {});

struct DailyRow {
    std::string ticker;
    Date date;
    DailySentimentFeatures features;
    friend bool operator==(const DailyRow&, const DailyRow&) = default;
};

struct DatedPrediction {
    Timestamp published_at;
    SentimentPrediction prediction;
};

// One row per calendar date; each prediction lands on the trading date its
// timestamp aligns to. Predictions past the calendar end are dropped.
std::vector<DailyRow> daily_features(const std::string& ticker, const ingestion::TradingCalendar& cal,
                                     std::span<const DatedPrediction> preds,
                                     const ingestion::AlignOptions& align = {});

// CSV: ticker,date,count_neg,count_neu,count_pos,score_sum,score_min,score_max,maj_neg,maj_neu,maj_pos
void write_daily(const std::filesystem::path& path, std::span<const DailyRow> rows);
std::vector<DailyRow> read_daily(const std::filesystem::path& path);

}  // namespace sentiflow::aggregation
