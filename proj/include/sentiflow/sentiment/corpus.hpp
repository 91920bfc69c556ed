#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentiflow/sentiment/label.hpp"

namespace sentiflow::sentiment {

// Labeled corpus CSV with columns text,label. A label cell holding several
// entity-level labels (e.g. {"Apple": "positive", "Samsung": "negative"}) is
// reduced by majority; ties resolve to neutral.
std::vector<LabeledHeadline> load_labeled_csv(const std::filesystem::path& path);
void write_labeled_csv(const std::filesystem::path& path, std::span<const LabeledHeadline> rows);
Label reduce_entity_labels(std::string_view cell);

struct PredictionRecord {
    std::string id;
    SentimentPrediction prediction;
    friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

// JSON Lines: {"id","backend_id","label","confidence"} per line.
void write_predictions(const std::filesystem::path& path, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

}  // namespace sentiflow::sentiment
