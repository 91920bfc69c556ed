#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sentiflow/sentiment/label.hpp"

namespace sentiflow::ensemble {

// Column layout of stacked features: for each backend in `backend_order`, a
// one-hot label block (negative, neutral, positive) and, optionally, the
// backend's confidence.
struct StackSchema {
    std::vector<std::string> backend_order{"finbert", "roberta", "deberta"};
    bool include_confidence = true;

    std::size_t width() const { return backend_order.size() * (include_confidence ? 4 : 3); }
    friend bool operator==(const StackSchema&, const StackSchema&) = default;
};

using StackedFeatures = std::vector<double>;

// Throws ValidationError when predictions are missing, extra or out of order.
StackedFeatures encode_stack(std::span<const sentiment::SentimentPrediction> preds, const StackSchema& schema);

}  // namespace sentiflow::ensemble
