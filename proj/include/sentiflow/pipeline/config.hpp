#pragma once

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sentiflow/aggregation/daily.hpp"
#include "sentiflow/common/date.hpp"
#include "sentiflow/dataset/dataset.hpp"
#include "sentiflow/ensemble/stacker.hpp"
#include "sentiflow/ingestion/align.hpp"
#include "sentiflow/ingestion/sources.hpp"
#include "sentiflow/models/model.hpp"

namespace sentiflow::pipeline {

struct PriceSourceConfig {
    std::string kind = "store";  // store | yahoo
    std::filesystem::path path;  // store root
    std::string base_url;        // yahoo endpoint override
};

struct NewsSourceConfig {
    std::string kind = "store";  // store | alphavantage
    std::filesystem::path path;
    std::string base_url;
    ingestion::RateLimit rate_limit;
};

struct BackendConfig {
    std::string id;
    std::string kind;  // lexicon | remote
    std::vector<std::string> positive, negative;  // lexicon; empty = built-in lists
    std::string url;                              // remote
    std::size_t max_in_flight = 4;
};

struct StackingConfig {
    std::vector<ensemble::StackerKind> kinds;
    std::vector<std::string> backend_order;  // defaults to the backend ids in config order
    bool include_confidence = true;
    double train_fraction = 0.8;
};

struct ExperimentConfig {
    std::vector<std::string> sources;
    std::vector<models::Arch> archs;
    std::vector<models::Task> tasks;
    std::vector<std::uint64_t> seeds;
};

struct RunConfig {
    std::filesystem::path base_dir;  // relative paths resolve against this
    std::vector<std::string> tickers;
    Date start, end;
    std::uint64_t seed = 42;
    std::size_t workers = 1;
    std::filesystem::path output_dir;
    PriceSourceConfig prices;
    NewsSourceConfig news;
    std::vector<BackendConfig> backends;
    std::optional<std::filesystem::path> labeled_corpus;
    StackingConfig stacking;
    ingestion::AlignOptions align;
    aggregation::FeatureOptions features;
    std::size_t window = dataset::kDefaultWindow;
    dataset::SplitFractions split;
    std::map<models::Arch, models::ModelConfig> models;
    ExperimentConfig experiment;
    std::optional<ExperimentConfig> ablation;

    // Canonical form of the settings that determine artifacts (workers and
    // output_dir excluded).
    nlohmann::json canonical;
    std::string hash() const;

    std::vector<std::string> backend_ids() const;
    std::vector<std::string> stacker_ids() const;
};

// Parses and validates; every problem is reported in a single ValidationError,
// one line per offending key path.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
// `seed` replaces the file's global seed before validation.
RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace sentiflow::pipeline
