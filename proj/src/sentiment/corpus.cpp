#include "sentiflow/sentiment/corpus.hpp"

#include <json.hpp>

#include <array>
#include <fstream>
#include <regex>

#include "sentiflow/common/csv.hpp"
#include "sentiflow/common/error.hpp"
#include "sentiflow/common/text.hpp"

namespace sentiflow::sentiment {

namespace fs = std::filesystem;

Label reduce_entity_labels(std::string_view cell) {
    const auto lower = to_lower(cell);
    static const std::regex word(R"(\b(negative|neutral|positive|neg|neu|pos)\b)");
    std::array<int, kNumLabels> votes{};
    int total = 0;
    for (std::sregex_iterator it(lower.begin(), lower.end(), word), end; it != end; ++it) {
        ++votes[index(parse_label(it->str()))];
        ++total;
    }
    if (total == 0) throw FormatError("no sentiment label in '" + std::string(cell) + "'");
    int best = 0;
    for (int c = 1; c < kNumLabels; ++c)
        if (votes[c] > votes[best]) best = c;
    for (int c = 0; c < kNumLabels; ++c)
        if (c != best && votes[c] == votes[best]) return Label::neutral;
    return label_from_index(best);
}

std::vector<LabeledHeadline> load_labeled_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw FormatError(path.string() + ": empty corpus");
    const auto idx = csv::require_columns(*header, {"text", "label"});
    std::vector<LabeledHeadline> rows;
    while (auto row = reader.next()) {
        if (row->size() == 1 && row->front().empty()) continue;
        if (row->size() <= std::max(idx[0], idx[1]))
            throw FormatError(path.string() + ":" + std::to_string(reader.line()) + ": short row");
        auto text = trim((*row)[idx[0]]);
        if (text.empty()) throw FormatError(path.string() + ":" + std::to_string(reader.line()) + ": empty text");
        rows.push_back({std::move(text), reduce_entity_labels((*row)[idx[1]])});
    }
    return rows;
}

void write_labeled_csv(const fs::path& path, std::span<const LabeledHeadline> rows) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "text,label\n";
    for (const auto& r : rows) csv::write_row(out, {r.text, to_string(r.gold)});
}

void write_predictions(const fs::path& path, std::span<const PredictionRecord> records) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["id"] = r.id;
        j["backend_id"] = r.prediction.backend_id;
        j["label"] = to_string(r.prediction.label);
        j["confidence"] = r.prediction.confidence;
        out << j.dump() << '\n';
    }
}

std::vector<PredictionRecord> read_predictions(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::vector<PredictionRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            PredictionRecord r{j.at("id").get<std::string>(),
                               {parse_label(j.at("label").get<std::string>()), j.at("confidence").get<double>(),
                                j.at("backend_id").get<std::string>()}};
            validate(r.prediction);
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace sentiflow::sentiment
