#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sentiflow/sentiment/label.hpp"

namespace sentiflow::sentiment {

// confusion[gold][predicted]
using ConfusionMatrix = std::array<std::array<std::size_t, kNumLabels>, kNumLabels>;

struct ClassificationReport {
    double accuracy = 0.0;
    // Support-weighted averages.
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    ConfusionMatrix confusion{};
};

ConfusionMatrix confusion_matrix(std::span<const Label> predicted, std::span<const Label> gold);

// Throws ValidationError on length mismatch or empty input.
ClassificationReport evaluate_backend(std::span<const Label> predicted, std::span<const Label> gold);
ClassificationReport evaluate_backend(std::span<const SentimentPrediction> predicted, std::span<const Label> gold);

struct NamedPredictions {
    std::string backend_id;
    std::vector<Label> labels;
};

// For each gold class, counts of items correctly classified by exactly the
// backends in each subset. Subset masks use bit i for backends[i].
struct AgreementRegions {
    std::vector<std::string> backends;
    std::array<std::vector<std::size_t>, kNumLabels> counts;  // counts[class][mask]
    std::array<std::size_t, kNumLabels> class_size{};
};

AgreementRegions agreement_regions(std::span<const Label> gold, std::span<const NamedPredictions> by_backend);

}  // namespace sentiflow::sentiment
