#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sentiflow/dataset/dataset.hpp"
#include "sentiflow/models/model.hpp"

namespace sentiflow::models {

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;  // mean over batches during the epoch
    double val_loss = 0.0;
};

struct TrainedModel {
    std::shared_ptr<Model> model;
    std::vector<std::string> feature_names;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double initial_train_loss = 0.0;  // full train pass before the first update
    double final_train_loss = 0.0;    // full train pass with the restored parameters

    const ModelConfig& config() const { return model->config(); }
};

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Fixed-epoch loop with Adam. Parameters are restored from the epoch with the
// lowest validation loss. Throws Error naming epoch and batch on a non-finite loss.
TrainedModel train(std::unique_ptr<Model> model, const dataset::SampleSet& train_set,
                   const dataset::SampleSet& val_set, const std::vector<std::string>& feature_names = {},
                   const AdamParams& adam = {});

// Mean task loss over a sample set without building a graph.
double evaluate_loss(const Model& model, const dataset::SampleSet& set);

// inputs: [N, L, F] row-major. Probabilities for classification.
std::vector<double> predict(const Model& model, std::span<const double> inputs, std::size_t n);
std::vector<double> predict(const TrainedModel& trained, const dataset::SampleSet& set);

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& trained);
TrainedModel load_checkpoint(const std::filesystem::path& path);
void write_history_csv(const std::filesystem::path& path, const TrainedModel& trained);

}  // namespace sentiflow::models
