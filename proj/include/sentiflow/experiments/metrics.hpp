#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace sentiflow::experiments {

struct BinaryCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// Inputs are 0/1 vectors of equal, nonzero length.
BinaryCounts binary_counts(std::span<const int> pred, std::span<const int> gold);

// Positive-class scores; a zero denominator yields 0.
double metric_accuracy(std::span<const int> pred, std::span<const int> gold);
double metric_precision(std::span<const int> pred, std::span<const int> gold);
double metric_recall(std::span<const int> pred, std::span<const int> gold);
double metric_f1(std::span<const int> pred, std::span<const int> gold);
// Support-weighted F1 over both classes.
double metric_weighted_f1(std::span<const int> pred, std::span<const int> gold);

// Probability that a random positive outscores a random negative, ties 0.5.
// Throws ValidationError("AUC undefined ...") when gold holds one class.
double metric_auc(std::span<const double> scores, std::span<const int> gold);

double metric_mae(std::span<const double> pred, std::span<const double> gold);
double metric_rmse(std::span<const double> pred, std::span<const double> gold);
// sum (pred - gold)^2 / sum (gold - mean(gold))^2; needs n >= 2 and nonzero variance.
double metric_rse(std::span<const double> pred, std::span<const double> gold);

std::vector<int> threshold(std::span<const double> probs, double cut = 0.5);

using MetricMap = std::map<std::string, double>;

// f1, f1_weighted, precision, recall, accuracy, auc
MetricMap classification_metrics(std::span<const double> probs, std::span<const int> gold);
// mae, rmse, rse
MetricMap regression_metrics(std::span<const double> pred, std::span<const double> gold);

}  // namespace sentiflow::experiments
