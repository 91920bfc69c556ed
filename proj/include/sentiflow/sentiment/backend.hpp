#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "sentiflow/common/http.hpp"
#include "sentiflow/sentiment/label.hpp"

namespace sentiflow::sentiment {

// A headline classifier. Backends are immutable after construction and
// classify() may be called from several threads at once.
class Backend {
public:
    virtual ~Backend() = default;
    virtual const std::string& id() const = 0;
    virtual SentimentPrediction classify(std::string_view text) const = 0;
    // Upper bound on concurrent classify() calls for this backend.
    virtual std::size_t max_in_flight() const { return 1; }
};

// Rejects empty text, then delegates to the backend.
SentimentPrediction classify(std::string_view text, const Backend& backend);

struct ClassifyFailure {
    std::size_t index = 0;
    std::string message;
};

struct CorpusResult {
    std::vector<std::optional<SentimentPrediction>> predictions;  // aligned with the input
    std::vector<ClassifyFailure> failures;
    std::size_t succeeded() const;
};

// Order-preserving batch classification; per-item errors are collected in
// `failures` and never abort the batch.
CorpusResult classify_corpus(std::span<const std::string> items, const Backend& backend);

// Keyword-lexicon scorer. label = sign(positive hits - negative hits);
// confidence = |net| / hits, or 1.0 when nothing matches.
class LexiconBackend final : public Backend {
public:
    LexiconBackend(std::string id, std::vector<std::string> positive, std::vector<std::string> negative);
    // Built-in financial word lists.
    explicit LexiconBackend(std::string id = "lexicon");

    const std::string& id() const override { return id_; }
    SentimentPrediction classify(std::string_view text) const override;
    std::size_t max_in_flight() const override { return 8; }

    static const std::vector<std::string>& default_positive();
    static const std::vector<std::string>& default_negative();

private:
    std::string id_;
    std::unordered_set<std::string> positive_;
    std::unordered_set<std::string> negative_;
};

// Client for a model server speaking POST {"text": ...} -> {"label", "score"}.
class RemoteBackend final : public Backend {
public:
    RemoteBackend(std::string id, std::string url, std::shared_ptr<http::Transport> transport,
                  std::size_t max_in_flight = 4);

    const std::string& id() const override { return id_; }
    SentimentPrediction classify(std::string_view text) const override;
    std::size_t max_in_flight() const override { return max_in_flight_; }

private:
    std::string id_;
    std::string url_;
    std::shared_ptr<http::Transport> transport_;
    std::size_t max_in_flight_;
};

}  // namespace sentiflow::sentiment
