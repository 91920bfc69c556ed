#include "sentiflow/aggregation/daily.hpp"

#include <algorithm>
#include <fstream>

#include "sentiflow/common/csv.hpp"
#include "sentiflow/common/error.hpp"
#include "sentiflow/common/text.hpp"

namespace sentiflow::aggregation {

std::array<double, 3> DailySentimentFeatures::majority_one_hot() const {
    std::array<double, 3> v{};
    v[sentiment::index(majority)] = 1.0;
    return v;
}

std::array<double, 9> DailySentimentFeatures::values() const {
    const auto m = majority_one_hot();
    return {static_cast<double>(count_neg), static_cast<double>(count_neu), static_cast<double>(count_pos),
            score_sum, score_min, score_max, m[0], m[1], m[2]};
}

double signed_score(const SentimentPrediction& p) {
    switch (p.label) {
        case Label::negative: return -p.confidence;
        case Label::neutral: return 0.0;
        case Label::positive: return p.confidence;
    }
    return 0.0;
}

DailySentimentFeatures aggregate_day(std::span<const SentimentPrediction> preds) {
    DailySentimentFeatures f;
    if (preds.empty()) return f;
    f.score_min = 1.0;
    f.score_max = -1.0;
    for (const auto& p : preds) {
        switch (p.label) {
            case Label::negative: ++f.count_neg; break;
            case Label::neutral: ++f.count_neu; break;
            case Label::positive: ++f.count_pos; break;
        }
        const double s = signed_score(p);
        f.score_sum += s;
        f.score_min = std::min(f.score_min, s);
        f.score_max = std::max(f.score_max, s);
    }
    const std::array<std::size_t, 3> counts{f.count_neg, f.count_neu, f.count_pos};
    const auto top = *std::max_element(counts.begin(), counts.end());
    const auto winners = std::count(counts.begin(), counts.end(), top);
    f.majority = winners > 1 ? Label::neutral
                             : sentiment::label_from_index(static_cast<int>(
                                   std::find(counts.begin(), counts.end(), top) - counts.begin()));
    return f;
}

std::string to_string(AblationVariant v) {
    switch (v) {
        case AblationVariant::full: return "full";
        case AblationVariant::wo_count: return "wo_count";
        case AblationVariant::wo_sum: return "wo_sum";
        case AblationVariant::wo_count_sum: return "wo_count_sum";
        case AblationVariant::wo_majority: return "wo_majority";
    }
    return "full";
}

AblationVariant parse_variant(const std::string& s) {
    for (auto v : kAllVariants)
        if (to_string(v) == s) return v;
    throw ValidationError("unknown ablation variant '" + s + "'");
}

const std::vector<std::string>& sentiment_feature_names() {
    static const std::vector<std::string> names{"count_neg", "count_neu", "count_pos", "score_sum", "score_min",
                                                "score_max", "maj_neg",   "maj_neu",   "maj_pos"};
    return names;
}

const std::vector<std::string>& market_feature_names() {
    static const std::vector<std::string> names{"close", "volume"};
    return names;
}

std::vector<std::string> select_features(AblationVariant variant, const FeatureOptions& opts) {
    const bool drop_counts = variant == AblationVariant::wo_count || variant == AblationVariant::wo_count_sum;
    const bool drop_sum = variant == AblationVariant::wo_sum || variant == AblationVariant::wo_count_sum;
    const bool drop_majority = variant == AblationVariant::wo_majority;
    std::vector<std::string> out;
    for (const auto& name : sentiment_feature_names()) {
        if (drop_counts && name.starts_with("count_")) continue;
        if (drop_sum && name == "score_sum") continue;
        if (drop_sum && opts.wo_sum_drops_minmax && (name == "score_min" || name == "score_max")) continue;
        if (drop_majority && name.starts_with("maj_")) continue;
        out.push_back(name);
    }
    for (const auto& name : market_feature_names()) out.push_back(name);
    return out;
}

std::vector<DailyRow> daily_features(const std::string& ticker, const ingestion::TradingCalendar& cal,
                                     std::span<const DatedPrediction> preds, const ingestion::AlignOptions& align) {
    std::vector<std::vector<SentimentPrediction>> buckets(cal.size());
    for (const auto& dp : preds) {
        if (cal.empty() || cal.dates().back() < dp.published_at.date()) continue;
        Date d;
        try {
            d = ingestion::align_to_trading_day(dp.published_at, cal, align);
        } catch (const ValidationError&) {
            continue;  // after the cutoff on the last calendar date
        }
        buckets[*cal.index_of(d)].push_back(dp.prediction);
    }
    std::vector<DailyRow> rows;
    rows.reserve(cal.size());
    for (std::size_t i = 0; i < cal.size(); ++i) rows.push_back({ticker, cal.dates()[i], aggregate_day(buckets[i])});
    return rows;
}

void write_daily(const std::filesystem::path& path, std::span<const DailyRow> rows) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "ticker,date";
    for (const auto& n : sentiment_feature_names()) out << ',' << n;
    out << '\n';
    for (const auto& r : rows) {
        const auto& f = r.features;
        const auto m = f.majority_one_hot();
        csv::write_row(out, {r.ticker, r.date.to_string(), std::to_string(f.count_neg), std::to_string(f.count_neu),
                             std::to_string(f.count_pos), format_double(f.score_sum), format_double(f.score_min),
                             format_double(f.score_max), format_double(m[0]), format_double(m[1]),
                             format_double(m[2])});
    }
}

std::vector<DailyRow> read_daily(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw FormatError(path.string() + ": empty daily feature file");
    std::vector<std::string> cols{"ticker", "date"};
    for (const auto& n : sentiment_feature_names()) cols.push_back(n);
    const auto idx = csv::require_columns(*header, cols);
    std::vector<DailyRow> rows;
    while (auto row = reader.next()) {
        if (row->size() == 1 && row->front().empty()) continue;
        if (row->size() < cols.size()) throw FormatError(path.string() + ": short row " + std::to_string(reader.line()));
        const auto& r = *row;
        DailySentimentFeatures f;
        f.count_neg = static_cast<std::size_t>(parse_int(r[idx[2]]));
        f.count_neu = static_cast<std::size_t>(parse_int(r[idx[3]]));
        f.count_pos = static_cast<std::size_t>(parse_int(r[idx[4]]));
        f.score_sum = parse_double(r[idx[5]]);
        f.score_min = parse_double(r[idx[6]]);
        f.score_max = parse_double(r[idx[7]]);
        const double m[3] = {parse_double(r[idx[8]]), parse_double(r[idx[9]]), parse_double(r[idx[10]])};
        if (m[0] + m[1] + m[2] != 1.0) throw FormatError(path.string() + ": majority one-hot must sum to 1");
        f.majority = m[0] == 1.0 ? Label::negative : (m[2] == 1.0 ? Label::positive : Label::neutral);
        rows.push_back({r[idx[0]], Date::parse(r[idx[1]]), f});
    }
    return rows;
}

}  // namespace sentiflow::aggregation
