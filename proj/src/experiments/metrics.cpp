#include "sentiflow/experiments/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sentiflow/common/error.hpp"

namespace sentiflow::experiments {

namespace {

template <typename A, typename B>
void check_aligned(std::span<A> a, std::span<B> b, const char* what) {
    if (a.empty()) throw ValidationError(std::string(what) + ": empty input");
    if (a.size() != b.size())
        throw ValidationError(std::string(what) + ": length mismatch " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
}

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_from(double tp, double fp, double fn) { return ratio(2.0 * tp, 2.0 * tp + fp + fn); }

}  // namespace

BinaryCounts binary_counts(std::span<const int> pred, std::span<const int> gold) {
    check_aligned(pred, gold, "binary metrics");
    BinaryCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if ((pred[i] != 0 && pred[i] != 1) || (gold[i] != 0 && gold[i] != 1))
            throw ValidationError("binary metrics: values must be 0 or 1");
        if (pred[i] == 1)
            ++(gold[i] == 1 ? c.tp : c.fp);
        else
            ++(gold[i] == 1 ? c.fn : c.tn);
    }
    return c;
}

double metric_accuracy(std::span<const int> pred, std::span<const int> gold) {
    const auto c = binary_counts(pred, gold);
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(pred.size());
}

double metric_precision(std::span<const int> pred, std::span<const int> gold) {
    const auto c = binary_counts(pred, gold);
    return ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
}

double metric_recall(std::span<const int> pred, std::span<const int> gold) {
    const auto c = binary_counts(pred, gold);
    return ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
}

double metric_f1(std::span<const int> pred, std::span<const int> gold) {
    const auto c = binary_counts(pred, gold);
    return f1_from(static_cast<double>(c.tp), static_cast<double>(c.fp), static_cast<double>(c.fn));
}

double metric_weighted_f1(std::span<const int> pred, std::span<const int> gold) {
    const auto c = binary_counts(pred, gold);
    const double pos = static_cast<double>(c.tp + c.fn);
    const double neg = static_cast<double>(c.tn + c.fp);
    // For the negative class the roles of tp/tn and fp/fn swap.
    const double f_pos = f1_from(static_cast<double>(c.tp), static_cast<double>(c.fp), static_cast<double>(c.fn));
    const double f_neg = f1_from(static_cast<double>(c.tn), static_cast<double>(c.fn), static_cast<double>(c.fp));
    return (pos * f_pos + neg * f_neg) / (pos + neg);
}

double metric_auc(std::span<const double> scores, std::span<const int> gold) {
    check_aligned(scores, gold, "metric_auc");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Mann-Whitney: sum of positive ranks with average ranks on ties.
    double rank_sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            const int g = gold[order[k]];
            if (g != 0 && g != 1) throw ValidationError("metric_auc: gold values must be 0 or 1");
            if (g == 1) {
                rank_sum += avg_rank;
                ++positives;
            }
        }
        i = j;
    }
    const std::size_t negatives = scores.size() - positives;
    if (positives == 0 || negatives == 0) throw ValidationError("AUC undefined: gold labels contain a single class");
    const double p = static_cast<double>(positives);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

double metric_mae(std::span<const double> pred, std::span<const double> gold) {
    check_aligned(pred, gold, "metric_mae");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - gold[i]);
    return s / static_cast<double>(pred.size());
}

double metric_rmse(std::span<const double> pred, std::span<const double> gold) {
    check_aligned(pred, gold, "metric_rmse");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - gold[i]) * (pred[i] - gold[i]);
    return std::sqrt(s / static_cast<double>(pred.size()));
}

double metric_rse(std::span<const double> pred, std::span<const double> gold) {
    check_aligned(pred, gold, "metric_rse");
    if (gold.size() < 2) throw ValidationError("metric_rse: needs at least 2 values");
    const double mean = std::accumulate(gold.begin(), gold.end(), 0.0) / static_cast<double>(gold.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        num += (pred[i] - gold[i]) * (pred[i] - gold[i]);
        den += (gold[i] - mean) * (gold[i] - mean);
    }
    if (den == 0.0) throw ValidationError("metric_rse: gold has zero variance");
    return num / den;
}

std::vector<int> threshold(std::span<const double> probs, double cut) {
    std::vector<int> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] >= cut ? 1 : 0;
    return out;
}

MetricMap classification_metrics(std::span<const double> probs, std::span<const int> gold) {
    const auto pred = threshold(probs);
    return {{"f1", metric_f1(pred, gold)},
            {"f1_weighted", metric_weighted_f1(pred, gold)},
            {"precision", metric_precision(pred, gold)},
            {"recall", metric_recall(pred, gold)},
            {"accuracy", metric_accuracy(pred, gold)},
            {"auc", metric_auc(probs, gold)}};
}

MetricMap regression_metrics(std::span<const double> pred, std::span<const double> gold) {
    return {{"mae", metric_mae(pred, gold)}, {"rmse", metric_rmse(pred, gold)}, {"rse", metric_rse(pred, gold)}};
}

}  // namespace sentiflow::experiments
