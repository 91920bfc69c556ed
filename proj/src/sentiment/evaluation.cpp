#include "sentiflow/sentiment/evaluation.hpp"

#include "sentiflow/common/error.hpp"

namespace sentiflow::sentiment {

ConfusionMatrix confusion_matrix(std::span<const Label> predicted, std::span<const Label> gold) {
    if (predicted.size() != gold.size())
        throw ValidationError("prediction/gold length mismatch: " + std::to_string(predicted.size()) + " vs " +
                              std::to_string(gold.size()));
    ConfusionMatrix cm{};
    for (std::size_t i = 0; i < gold.size(); ++i) ++cm[index(gold[i])][index(predicted[i])];
    return cm;
}

ClassificationReport evaluate_backend(std::span<const Label> predicted, std::span<const Label> gold) {
    if (gold.empty()) throw ValidationError("evaluate_backend: empty input");
    ClassificationReport r;
    r.confusion = confusion_matrix(predicted, gold);
    const auto& cm = r.confusion;
    const double n = static_cast<double>(gold.size());
    std::size_t trace = 0;
    for (int c = 0; c < kNumLabels; ++c) trace += cm[c][c];
    r.accuracy = static_cast<double>(trace) / n;

    int present = 0;
    for (int c = 0; c < kNumLabels; ++c) {
        std::size_t support = 0, predicted_c = 0;
        for (int k = 0; k < kNumLabels; ++k) {
            support += cm[c][k];
            predicted_c += cm[k][c];
        }
        const double tp = static_cast<double>(cm[c][c]);
        const double p = predicted_c ? tp / static_cast<double>(predicted_c) : 0.0;
        const double rc = support ? tp / static_cast<double>(support) : 0.0;
        const double f = (p + rc) > 0.0 ? 2.0 * p * rc / (p + rc) : 0.0;
        const double w = static_cast<double>(support) / n;
        r.precision += w * p;
        r.recall += w * rc;
        r.f1 += w * f;
        // Macro averages cover classes that occur in gold or predictions.
        if (support || predicted_c) {
            ++present;
            r.macro_precision += p;
            r.macro_recall += rc;
            r.macro_f1 += f;
        }
    }
    r.macro_precision /= present;
    r.macro_recall /= present;
    r.macro_f1 /= present;
    return r;
}

ClassificationReport evaluate_backend(std::span<const SentimentPrediction> predicted, std::span<const Label> gold) {
    std::vector<Label> labels;
    labels.reserve(predicted.size());
    for (const auto& p : predicted) labels.push_back(p.label);
    return evaluate_backend(labels, gold);
}

AgreementRegions agreement_regions(std::span<const Label> gold, std::span<const NamedPredictions> by_backend) {
    if (by_backend.empty()) throw ValidationError("agreement_regions: no backends");
    if (by_backend.size() > 16) throw ValidationError("agreement_regions: too many backends");
    AgreementRegions out;
    for (const auto& b : by_backend) {
        if (b.labels.size() != gold.size())
            throw ValidationError("agreement_regions: predictions of '" + b.backend_id + "' are misaligned with gold (" +
                                  std::to_string(b.labels.size()) + " vs " + std::to_string(gold.size()) + ")");
        out.backends.push_back(b.backend_id);
    }
    const std::size_t regions = std::size_t{1} << by_backend.size();
    for (auto& c : out.counts) c.assign(regions, 0);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        std::size_t mask = 0;
        for (std::size_t b = 0; b < by_backend.size(); ++b)
            if (by_backend[b].labels[i] == gold[i]) mask |= std::size_t{1} << b;
        ++out.counts[index(gold[i])][mask];
        ++out.class_size[index(gold[i])];
    }
    return out;
}

}  // namespace sentiflow::sentiment
