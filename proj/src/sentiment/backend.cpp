#include "sentiflow/sentiment/backend.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <thread>

#include "sentiflow/common/error.hpp"
#include "sentiflow/common/text.hpp"

namespace sentiflow::sentiment {

SentimentPrediction classify(std::string_view text, const Backend& backend) {
    if (trim(text).empty()) throw ValidationError("classify: empty text");
    auto p = backend.classify(text);
    validate(p);
    return p;
}

std::size_t CorpusResult::succeeded() const {
    return static_cast<std::size_t>(
        std::count_if(predictions.begin(), predictions.end(), [](const auto& p) { return p.has_value(); }));
}

CorpusResult classify_corpus(std::span<const std::string> items, const Backend& backend) {
    CorpusResult result;
    result.predictions.resize(items.size());
    std::vector<std::string> errors(items.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < items.size(); i = next++) {
            try {
                result.predictions[i] = classify(items[i], backend);
            } catch (const std::exception& e) {
                errors[i] = e.what();
                if (errors[i].empty()) errors[i] = "unknown error";
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(backend.max_in_flight(), 1, std::max<std::size_t>(items.size(), 1));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < items.size(); ++i)
        if (!result.predictions[i]) result.failures.push_back({i, errors[i]});
    return result;
}

const std::vector<std::string>& LexiconBackend::default_positive() {
    static const std::vector<std::string> words{
        "beat",     "beats",    "boost",   "boosts",   "bullish",  "gain",      "gains",     "growth",
        "higher",   "jump",     "jumps",   "outperform", "profit", "profits",   "rally",     "rallies",
        "record",   "rise",     "rises",   "soar",     "soars",    "strong",    "surge",     "surges",
        "tops",     "upgrade",  "upgraded", "upbeat",  "expands",  "expansion", "wins",      "optimism"};
    return words;
}

const std::vector<std::string>& LexiconBackend::default_negative() {
    static const std::vector<std::string> words{
        "bearish", "crash",    "cut",      "cuts",     "decline",  "declines", "downgrade", "downgraded",
        "drop",    "drops",    "fall",     "falls",    "fraud",    "lawsuit",  "layoffs",   "loss",
        "losses",  "lower",    "miss",     "misses",   "plunge",   "plunges",  "probe",     "recall",
        "sinks",   "slump",    "slumps",   "weak",     "warning",  "tumbles",  "fears",     "pessimism"};
    return words;
}

LexiconBackend::LexiconBackend(std::string id, std::vector<std::string> positive, std::vector<std::string> negative)
    : id_(std::move(id)) {
    for (auto& w : positive) positive_.insert(to_lower(w));
    for (auto& w : negative) negative_.insert(to_lower(w));
    for (const auto& w : positive_)
        if (negative_.count(w)) throw ValidationError("lexicon '" + id_ + "': word '" + w + "' is in both lists");
}

LexiconBackend::LexiconBackend(std::string id)
    : LexiconBackend(std::move(id), default_positive(), default_negative()) {}

SentimentPrediction LexiconBackend::classify(std::string_view text) const {
    int pos = 0, neg = 0;
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        if (positive_.count(token)) ++pos;
        else if (negative_.count(token)) ++neg;
        token.clear();
    };
    for (char c : text) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) token.push_back(static_cast<char>(std::tolower(u)));
        else flush();
    }
    flush();
    const int net = pos - neg;
    const int hits = pos + neg;
    SentimentPrediction p;
    p.backend_id = id_;
    p.label = net > 0 ? Label::positive : (net < 0 ? Label::negative : Label::neutral);
    p.confidence = hits == 0 ? 1.0 : static_cast<double>(std::abs(net)) / hits;
    return p;
}

RemoteBackend::RemoteBackend(std::string id, std::string url, std::shared_ptr<http::Transport> transport,
                             std::size_t max_in_flight)
    : id_(std::move(id)), url_(std::move(url)), transport_(std::move(transport)), max_in_flight_(max_in_flight) {}

SentimentPrediction RemoteBackend::classify(std::string_view text) const {
    const nlohmann::json req{{"text", std::string(text)}};
    const auto resp = transport_->post_json(url_, req.dump());
    if (resp.status != 200) throw TransportError(id_, "HTTP " + std::to_string(resp.status) + " from " + url_);
    const auto doc = nlohmann::json::parse(resp.body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("label") || !doc.contains("score") ||
        !doc["label"].is_string() || !doc["score"].is_number())
        throw FormatError(id_ + ": expected {\"label\", \"score\"} from " + url_);
    SentimentPrediction p{parse_label(doc["label"].get<std::string>()), doc["score"].get<double>(), id_};
    validate(p);
    return p;
}

}  // namespace sentiflow::sentiment
