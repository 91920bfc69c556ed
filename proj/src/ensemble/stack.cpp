#include "sentiflow/ensemble/stack.hpp"

#include "sentiflow/common/error.hpp"

namespace sentiflow::ensemble {

StackedFeatures encode_stack(std::span<const sentiment::SentimentPrediction> preds, const StackSchema& schema) {
    if (preds.size() != schema.backend_order.size())
        throw ValidationError("encode_stack: expected " + std::to_string(schema.backend_order.size()) +
                              " predictions, got " + std::to_string(preds.size()));
    StackedFeatures out;
    out.reserve(schema.width());
    for (std::size_t b = 0; b < preds.size(); ++b) {
        const auto& p = preds[b];
        if (p.backend_id != schema.backend_order[b])
            throw ValidationError("encode_stack: position " + std::to_string(b) + " expects backend '" +
                                  schema.backend_order[b] + "', got '" + p.backend_id + "'");
        sentiment::validate(p);
        for (auto l : sentiment::kLabels) out.push_back(l == p.label ? 1.0 : 0.0);
        if (schema.include_confidence) out.push_back(p.confidence);
    }
    return out;
}

}  // namespace sentiflow::ensemble
