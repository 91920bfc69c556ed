#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "sentiflow/common/http.hpp"
#include "sentiflow/pipeline/config.hpp"

namespace sentiflow::pipeline {

// Artifact locations under the output directory.
class Layout {
public:
    explicit Layout(std::filesystem::path out) : out_(std::move(out)) {}

    const std::filesystem::path& root() const { return out_; }
    std::filesystem::path stamp(const std::string& stage) const { return out_ / "stamps" / (stage + ".json"); }
    std::filesystem::path raw() const { return out_ / "raw"; }
    std::filesystem::path news_predictions(const std::string& source, const std::string& ticker) const {
        return out_ / "sentiment" / "news" / source / (ticker + ".jsonl");
    }
    std::filesystem::path corpus_predictions(const std::string& backend) const {
        return out_ / "sentiment" / "corpus" / (backend + ".jsonl");
    }
    std::filesystem::path sentiment_dir() const { return out_ / "sentiment"; }
    std::filesystem::path agreement() const { return out_ / "sentiment" / "agreement.json"; }
    std::filesystem::path stack_dir() const { return out_ / "stack"; }
    std::filesystem::path stacker(const std::string& kind) const { return out_ / "stack" / (kind + ".json"); }
    std::filesystem::path daily(const std::string& source, const std::string& ticker) const {
        return out_ / "daily" / source / (ticker + ".csv");
    }
    std::filesystem::path datasets() const { return out_ / "datasets"; }
    std::filesystem::path records() const { return out_ / "runs" / "records.jsonl"; }
    std::filesystem::path ablation_records() const { return out_ / "runs" / "ablation.jsonl"; }
    std::filesystem::path run_artifacts() const { return out_ / "runs" / "models"; }
    std::filesystem::path report_dir() const { return out_ / "report"; }

private:
    std::filesystem::path out_;
};

struct StageOptions {
    bool force = false;        // rerun completed stages; let report mix config hashes
    std::size_t workers = 0;   // 0 = take the config value
    std::ostream* log = nullptr;
    // Network access for live sources and remote backends; defaults to httplib.
    std::shared_ptr<http::Transport> transport;
};

struct StageResult {
    std::string stage;
    bool skipped = false;  // up to date, nothing done
    std::vector<std::filesystem::path> outputs;
};

inline const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> s = {"ingest", "sentiment", "stack", "build", "run", "ablate", "report"};
    return s;
}

StageResult cmd_ingest(const RunConfig& cfg, const StageOptions& opts);
StageResult cmd_sentiment(const RunConfig& cfg, const StageOptions& opts);
StageResult cmd_stack(const RunConfig& cfg, const StageOptions& opts);
StageResult cmd_build(const RunConfig& cfg, const StageOptions& opts);
StageResult cmd_run(const RunConfig& cfg, const StageOptions& opts);
StageResult cmd_ablate(const RunConfig& cfg, const StageOptions& opts);
StageResult cmd_report(const RunConfig& cfg, const StageOptions& opts);

// Runs a stage by name. Errors are rethrown prefixed with the stage name.
StageResult run_stage(const std::string& name, const RunConfig& cfg, const StageOptions& opts);

}  // namespace sentiflow::pipeline
