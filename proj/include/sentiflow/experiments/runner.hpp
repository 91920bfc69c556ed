#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sentiflow/aggregation/daily.hpp"
#include "sentiflow/dataset/dataset.hpp"
#include "sentiflow/experiments/metrics.hpp"
#include "sentiflow/models/model.hpp"

namespace sentiflow::experiments {

// Source id for the market-only baseline.
inline constexpr const char* kNoSentiment = "NS";

// Known sentiment sources in report row order (after NS).
const std::vector<std::string>& default_sources();
// "NS" (any case) normalises to kNoSentiment; other ids are lower-cased.
std::string normalise_source(const std::string& s);

struct ExperimentSpec {
    std::vector<std::string> tickers;
    std::vector<std::string> sources;
    std::vector<models::Arch> archs;
    models::Task task = models::Task::classification;
    aggregation::AblationVariant variant = aggregation::AblationVariant::full;
    std::vector<std::uint64_t> seeds;
    // Per-arch settings; the run seed and task override the stored ones.
    std::map<models::Arch, models::ModelConfig> model_configs;

    void validate() const;
};

std::vector<std::uint64_t> default_seeds(std::size_t n = 10);

struct DatasetKey {
    std::string ticker;
    std::string source;
    aggregation::AblationVariant variant = aggregation::AblationVariant::full;
    std::string to_string() const;
};

// Returns the dataset for a key or throws NoDataError naming it.
using DatasetResolver = std::function<std::shared_ptr<const dataset::WindowedDataset>(const DatasetKey&)>;

// Loads <root>/<ticker>/<source>/<variant>, caching each directory once.
// NS ignores the variant and always reads <root>/<ticker>/NS/full.
DatasetResolver directory_resolver(const std::filesystem::path& root);
std::filesystem::path dataset_dir(const std::filesystem::path& root, const DatasetKey& key);

struct RunRecord {
    std::string ticker;
    std::string source;
    models::Arch arch = models::Arch::lstm;
    models::Task task = models::Task::classification;
    aggregation::AblationVariant variant = aggregation::AblationVariant::full;
    std::uint64_t seed = 0;
    std::string run_hash;     // hash of the run key and its model config
    std::string config_hash;  // provenance of the producing configuration
    std::size_t feature_dim = 0;
    std::size_t best_epoch = 0;
    MetricMap metrics;
};

std::vector<RunRecord> read_records(const std::filesystem::path& path);
void append_record(const std::filesystem::path& path, const RunRecord& r);

struct RunOptions {
    std::filesystem::path records_path;  // JSONL, appended as runs finish
    std::filesystem::path artifacts_dir;  // checkpoints and histories when non-empty
    std::size_t workers = 1;
    std::string config_hash;
    std::function<void(const RunRecord&)> on_record;
};

struct RunSummary {
    std::vector<RunRecord> records;  // one per run in spec order
    std::size_t trained = 0;
    std::size_t resumed = 0;
};

// Trains one model per (ticker, source, arch, seed); records already in
// records_path with matching run and config hashes are reused instead of
// retrained.
RunSummary run_experiment(const ExperimentSpec& spec, const DatasetResolver& resolve, const RunOptions& opts);

// The base spec rerun for every ablation variant; NS is dropped because the
// variants differ only in sentiment columns.
RunSummary ablation_suite(const ExperimentSpec& base, const DatasetResolver& resolve, const RunOptions& opts);

}  // namespace sentiflow::experiments
