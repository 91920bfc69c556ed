#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sentiflow/aggregation/daily.hpp"

namespace testutil {

// The nine (label, confidence) predictions used for exhaustive checks.
inline std::vector<sentiflow::sentiment::SentimentPrediction> prediction_alphabet() {
    std::vector<sentiflow::sentiment::SentimentPrediction> out;
    for (auto l : sentiflow::sentiment::kLabels)
        for (double c : {0.5, 0.75, 1.0}) out.push_back({l, c, "oracle"});
    return out;
}

// Direct enumeration of the daily feature definition.
inline sentiflow::aggregation::DailySentimentFeatures enumerate_day(
    const std::vector<sentiflow::sentiment::SentimentPrediction>& preds) {
    using sentiflow::sentiment::Label;
    sentiflow::aggregation::DailySentimentFeatures f;
    std::vector<double> scores;
    for (const auto& p : preds) {
        double s = 0.0;
        if (p.label == Label::negative) {
            ++f.count_neg;
            s = -p.confidence;
        } else if (p.label == Label::positive) {
            ++f.count_pos;
            s = p.confidence;
        } else {
            ++f.count_neu;
        }
        scores.push_back(s);
    }
    for (double s : scores) f.score_sum += s;
    if (!scores.empty()) {
        f.score_min = *std::min_element(scores.begin(), scores.end());
        f.score_max = *std::max_element(scores.begin(), scores.end());
    }
    const std::size_t counts[3] = {f.count_neg, f.count_neu, f.count_pos};
    const std::size_t top = std::max({counts[0], counts[1], counts[2]});
    int winners = 0, winner = 1;
    for (int i = 0; i < 3; ++i)
        if (counts[i] == top) {
            ++winners;
            winner = i;
        }
    f.majority = winners == 1 ? sentiflow::sentiment::label_from_index(winner) : Label::neutral;
    return f;
}

inline bool same_features(const sentiflow::aggregation::DailySentimentFeatures& a,
                          const sentiflow::aggregation::DailySentimentFeatures& b, double tol = 1e-12) {
    return a.count_neg == b.count_neg && a.count_neu == b.count_neu && a.count_pos == b.count_pos &&
           std::abs(a.score_sum - b.score_sum) <= tol && a.score_min == b.score_min && a.score_max == b.score_max &&
           a.majority == b.majority;
}

// Calls fn on every list of length <= max_len over the alphabet, in order.
template <typename Fn>
void for_each_news_list(std::size_t max_len, Fn&& fn) {
    const auto alphabet = prediction_alphabet();
    std::vector<sentiflow::sentiment::SentimentPrediction> list;
    for (std::size_t len = 0; len <= max_len; ++len) {
        std::vector<std::size_t> idx(len, 0);
        while (true) {
            list.clear();
            for (auto i : idx) list.push_back(alphabet[i]);
            fn(list);
            std::size_t k = 0;
            while (k < len && ++idx[k] == alphabet.size()) idx[k++] = 0;
            if (k == len) break;
        }
    }
}

}  // namespace testutil
