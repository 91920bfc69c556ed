#pragma once

#include <array>
#include <string>
#include <string_view>

namespace sentiflow::sentiment {

enum class Label : int { negative = 0, neutral = 1, positive = 2 };

inline constexpr std::array<Label, 3> kLabels{Label::negative, Label::neutral, Label::positive};
inline constexpr int kNumLabels = 3;

constexpr int index(Label l) { return static_cast<int>(l); }
constexpr Label label_from_index(int i) { return static_cast<Label>(i); }

std::string to_string(Label l);

// Case-insensitive; accepts negative/neutral/positive and neg/neu/pos.
// Throws FormatError on anything else.
Label parse_label(std::string_view s);

struct SentimentPrediction {
    Label label = Label::neutral;
    double confidence = 1.0;  // in [0, 1]
    std::string backend_id;

    friend bool operator==(const SentimentPrediction&, const SentimentPrediction&) = default;
};

// Throws ValidationError unless 0 <= confidence <= 1.
void validate(const SentimentPrediction& p);

struct LabeledHeadline {
    std::string text;
    Label gold = Label::neutral;
};

}  // namespace sentiflow::sentiment
