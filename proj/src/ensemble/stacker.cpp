#include "sentiflow/ensemble/stacker.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "classifiers.hpp"
#include "sentiflow/common/error.hpp"
#include "sentiflow/common/rng.hpp"

namespace sentiflow::ensemble {

std::string to_string(StackerKind k) {
    switch (k) {
        case StackerKind::logistic_regression: return "lr";
        case StackerKind::random_forest: return "rf";
        case StackerKind::svm: return "svm";
    }
    return "lr";
}

StackerKind parse_stacker_kind(const std::string& s) {
    if (s == "lr" || s == "logistic_regression") return StackerKind::logistic_regression;
    if (s == "rf" || s == "random_forest") return StackerKind::random_forest;
    if (s == "svm") return StackerKind::svm;
    throw ValidationError("unknown stacker kind '" + s + "'");
}

std::unique_ptr<Classifier> fit_classifier(StackerKind kind, const Matrix& x, std::span<const sentiment::Label> y,
                                           const StackerParams& params) {
    if (x.empty() || x.size() != y.size()) throw ValidationError("fit_classifier: empty or misaligned data");
    const std::size_t d = x.front().size();
    for (const auto& row : x)
        if (row.size() != d) throw ValidationError("fit_classifier: ragged feature rows");
    std::set<sentiment::Label> classes(y.begin(), y.end());
    if (classes.size() < 2) throw ValidationError("degenerate training labels");
    switch (kind) {
        case StackerKind::logistic_regression: return detail::fit_logistic(x, y, params.logistic);
        case StackerKind::random_forest: return detail::fit_forest(x, y, params.forest, params.seed);
        case StackerKind::svm: return detail::fit_svm(x, y, params.svm);
    }
    throw ValidationError("unknown stacker kind");
}

void TrainedStacker::save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["schema_version"] = kStackerSchemaVersion;
    j["kind"] = to_string(model_->kind());
    j["backend_order"] = schema_.backend_order;
    j["include_confidence"] = schema_.include_confidence;
    j["model"] = model_->to_json();
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump() << '\n';
}

TrainedStacker TrainedStacker::load(const std::filesystem::path& path, const StackSchema& expected) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    const int version = j.value("schema_version", -1);
    if (version != kStackerSchemaVersion)
        throw FormatError(path.string() + ": stacker schema version " + std::to_string(version) + ", expected " +
                          std::to_string(kStackerSchemaVersion));
    StackSchema schema;
    schema.backend_order = j.at("backend_order").get<std::vector<std::string>>();
    schema.include_confidence = j.at("include_confidence").get<bool>();
    if (!(schema == expected)) throw FormatError(path.string() + ": backend order or feature layout mismatch");
    const auto kind = parse_stacker_kind(j.at("kind").get<std::string>());
    std::shared_ptr<const Classifier> model;
    switch (kind) {
        case StackerKind::logistic_regression: model = detail::logistic_from_json(j.at("model")); break;
        case StackerKind::random_forest: model = detail::forest_from_json(j.at("model")); break;
        case StackerKind::svm: model = detail::svm_from_json(j.at("model")); break;
    }
    if (model->input_dim() != schema.width()) throw FormatError(path.string() + ": model input width mismatch");
    return TrainedStacker(std::move(schema), std::move(model));
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> shuffle_split(std::size_t n, double train_fraction,
                                                                            std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ValidationError("train fraction must lie in (0, 1)");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train == n) throw ValidationError("split leaves an empty train or test part");
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return {std::move(train), std::move(test)};
}

StackerTrainResult train_stacker(const std::vector<StackedFeatures>& x, std::span<const sentiment::Label> y,
                                 StackerKind kind, double train_fraction, const StackSchema& schema,
                                 const StackerParams& params) {
    if (x.size() != y.size()) throw ValidationError("train_stacker: |X| != |y|");
    if (x.size() < 10) throw ValidationError("train_stacker: need at least 10 samples");
    for (const auto& row : x)
        if (row.size() != schema.width())
            throw ValidationError("train_stacker: feature width " + std::to_string(row.size()) + ", schema expects " +
                                  std::to_string(schema.width()));
    if (std::set<sentiment::Label>(y.begin(), y.end()).size() < 2)
        throw ValidationError("degenerate training labels");

    auto [train_idx, test_idx] = shuffle_split(x.size(), train_fraction, params.seed);
    Matrix xtr;
    std::vector<sentiment::Label> ytr;
    for (auto i : train_idx) xtr.push_back(x[i]), ytr.push_back(y[i]);
    TrainedStacker stacker(schema, fit_classifier(kind, xtr, ytr, params));

    std::vector<sentiment::Label> predicted, gold;
    for (auto i : test_idx) {
        predicted.push_back(predict_stacker(stacker, x[i]).label);
        gold.push_back(y[i]);
    }
    auto report = sentiment::evaluate_backend(predicted, gold);
    return {std::move(stacker), report, std::move(train_idx), std::move(test_idx)};
}

sentiment::SentimentPrediction predict_stacker(const TrainedStacker& model, std::span<const double> x) {
    if (x.size() != model.model().input_dim())
        throw ValidationError("predict_stacker: expected " + std::to_string(model.model().input_dim()) +
                              "-dim input, got " + std::to_string(x.size()));
    const auto s = model.model().scores(x);
    const int best = static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
    sentiment::SentimentPrediction p;
    p.label = sentiment::label_from_index(best);
    p.confidence = model.model().has_probabilities() ? std::clamp(s[best], 0.0, 1.0) : 1.0;
    p.backend_id = to_string(model.kind());
    return p;
}

}  // namespace sentiflow::ensemble
