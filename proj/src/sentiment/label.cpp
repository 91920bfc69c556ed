#include "sentiflow/sentiment/label.hpp"

#include "sentiflow/common/error.hpp"
#include "sentiflow/common/text.hpp"

namespace sentiflow::sentiment {

std::string to_string(Label l) {
    switch (l) {
        case Label::negative: return "negative";
        case Label::neutral: return "neutral";
        case Label::positive: return "positive";
    }
    return "neutral";
}

Label parse_label(std::string_view s) {
    const auto t = to_lower(trim(s));
    if (t == "negative" || t == "neg") return Label::negative;
    if (t == "neutral" || t == "neu") return Label::neutral;
    if (t == "positive" || t == "pos") return Label::positive;
    throw FormatError("unknown sentiment label '" + std::string(s) + "'");
}

void validate(const SentimentPrediction& p) {
    if (!(p.confidence >= 0.0 && p.confidence <= 1.0))
        throw ValidationError("confidence out of [0,1] from backend '" + p.backend_id + "': " +
                              format_double(p.confidence));
}

}  // namespace sentiflow::sentiment
