#pragma once

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sentiflow/models/layers.hpp"

namespace sentiflow::models {

enum class Arch { lstm, patchtst, timesnet, tpatchgnn };
enum class Task { classification, regression };

inline constexpr Arch kAllArchs[] = {Arch::lstm, Arch::patchtst, Arch::timesnet, Arch::tpatchgnn};

std::string to_string(Arch a);  // "lstm", "patchtst", "timesnet", "tpatchgnn"
std::string to_string(Task t);  // "classification", "regression"
Arch parse_arch(const std::string& s);
Task parse_task(const std::string& s);
bool uses_patches(Arch a);

struct ModelConfig {
    Arch arch = Arch::lstm;
    Task task = Task::classification;
    std::size_t hidden_dim = 64;
    std::size_t num_layers = 2;
    std::size_t patch_len = 8;
    std::size_t patch_stride = 4;
    std::size_t top_k_periods = 2;
    std::size_t num_heads = 4;
    std::size_t epochs = 50;
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    std::uint64_t seed = 42;

    // Throws ValidationError listing every non-positive field the arch uses.
    void validate() const;
    // Only the fields the arch uses are written.
    nlohmann::json to_json() const;
    // Unknown keys, and patch/period keys on archs that do not use them, are rejected.
    static ModelConfig from_json(const nlohmann::json& j);
};

// Patches per channel: floor((L - patch_len) / stride) + 1.
std::size_t patch_count(std::size_t length, std::size_t patch_len, std::size_t stride);

class Model {
public:
    Model(ModelConfig config, std::size_t features, std::size_t length)
        : config_(std::move(config)), features_(features), length_(length) {}
    virtual ~Model() = default;

    const ModelConfig& config() const { return config_; }
    std::size_t input_features() const { return features_; }
    std::size_t window_length() const { return length_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // x: [B, L, F] -> [B]. Logits for classification, values for regression.
    virtual Var forward(const Var& x) const = 0;
    // Probabilities for classification, values for regression.
    Var output(const Var& x) const;

protected:
    ModelConfig config_;
    std::size_t features_, length_;
    ParamStore params_;
};

// Parameters are initialised from config.seed.
std::unique_ptr<Model> build_model(const ModelConfig& config, std::size_t features, std::size_t length = 30);

struct Period {
    std::size_t frequency;
    std::size_t period;  // length / frequency
};

// Top-k frequencies (excluding 0) of the DFT amplitude of x [B, L, D] averaged
// over batch and channels, in descending amplitude order.
std::vector<Period> timesnet_periods(std::span<const double> x, std::size_t batch, std::size_t length,
                                     std::size_t channels, std::size_t k);

}  // namespace sentiflow::models
