#pragma once

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sentiflow/ensemble/stack.hpp"
#include "sentiflow/sentiment/evaluation.hpp"
#include "sentiflow/sentiment/label.hpp"

namespace sentiflow::ensemble {

enum class StackerKind { logistic_regression, random_forest, svm };

std::string to_string(StackerKind k);      // "lr", "rf", "svm"
StackerKind parse_stacker_kind(const std::string& s);

using ClassScores = std::array<double, sentiment::kNumLabels>;

// A fitted multi-class classifier over dense feature rows.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual StackerKind kind() const = 0;
    virtual std::size_t input_dim() const = 0;
    // Class probabilities when has_probabilities(), otherwise vote shares.
    virtual ClassScores scores(std::span<const double> x) const = 0;
    virtual bool has_probabilities() const = 0;
    virtual nlohmann::json to_json() const = 0;
};

struct LogisticParams {
    double c = 1.0;  // inverse L2 strength, objective sum(CE) + ||W||^2 / (2C)
    int max_iter = 5000;
    double tolerance = 1e-7;
};

struct ForestParams {
    int n_trees = 200;
    int max_depth = 0;          // 0 = unlimited
    int max_features = 0;       // 0 = floor(sqrt(d))
    int min_samples_split = 2;
};

struct SvmParams {
    double c = 1.0;
    double gamma = 0.0;  // 0 = 1 / (d * var(X))
    double tolerance = 1e-3;
};

struct StackerParams {
    LogisticParams logistic;
    ForestParams forest;
    SvmParams svm;
    std::uint64_t seed = 42;
};

using Matrix = std::vector<std::vector<double>>;

std::unique_ptr<Classifier> fit_classifier(StackerKind kind, const Matrix& x, std::span<const sentiment::Label> y,
                                           const StackerParams& params);

inline constexpr int kStackerSchemaVersion = 1;

// Trained stacker bound to the backend order and feature layout it was fit on.
class TrainedStacker {
public:
    TrainedStacker(StackSchema schema, std::shared_ptr<const Classifier> model)
        : schema_(std::move(schema)), model_(std::move(model)) {}

    const StackSchema& schema() const { return schema_; }
    StackerKind kind() const { return model_->kind(); }
    const Classifier& model() const { return *model_; }

    void save(const std::filesystem::path& path) const;
    // Refuses artifacts whose schema version, backend order or feature layout
    // differ from `expected`.
    static TrainedStacker load(const std::filesystem::path& path, const StackSchema& expected);

private:
    StackSchema schema_;
    std::shared_ptr<const Classifier> model_;
};

struct StackerTrainResult {
    TrainedStacker stacker;
    sentiment::ClassificationReport held_out;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

// Seeded shuffle, split at floor(train_fraction * n), fit on the train part,
// evaluate on the rest. Throws ValidationError("degenerate training labels")
// when y has a single class.
StackerTrainResult train_stacker(const std::vector<StackedFeatures>& x, std::span<const sentiment::Label> y,
                                 StackerKind kind, double train_fraction, const StackSchema& schema,
                                 const StackerParams& params = {});

// Seeded shuffle split used by train_stacker; exposed for tests.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> shuffle_split(std::size_t n, double train_fraction,
                                                                            std::uint64_t seed);

// Label = argmax of class scores; confidence = probability for learners that
// provide one, else 1.0. backend_id is the stacker kind ("lr", "rf", "svm").
sentiment::SentimentPrediction predict_stacker(const TrainedStacker& model, std::span<const double> x);

}  // namespace sentiflow::ensemble
