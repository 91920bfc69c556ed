#include "sentiflow/experiments/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "sentiflow/common/csv.hpp"
#include "sentiflow/common/error.hpp"
#include "sentiflow/common/text.hpp"

namespace sentiflow::experiments {

CellStats cell_stats(std::span<const double> values) {
    if (values.size() < 2)
        throw ValidationError("report cell needs at least 2 seeds, got " + std::to_string(values.size()));
    CellStats c;
    c.n = values.size();
    // Sort first so the sums do not depend on record order.
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    c.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(c.n);
    double ss = 0.0;
    for (double x : v) ss += (x - c.mean) * (x - c.mean);
    c.sd = std::sqrt(ss / static_cast<double>(c.n - 1));
    return c;
}

std::string format_cell(const CellStats& c, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f ± %.*f", decimals, c.mean, decimals, c.sd);
    return buf;
}

std::string source_label(const std::string& source) {
    const std::string s = normalise_source(source);
    if (s == kNoSentiment) return "NS";
    if (s == "finbert") return "FinBERT";
    if (s == "deberta") return "DeBERTa";
    if (s == "roberta") return "RoBERTa";
    if (s == "lr" || s == "rf" || s == "svm") {
        std::string up = s;
        for (auto& ch : up) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        return up;
    }
    return source;
}

std::string arch_label(models::Arch a) {
    switch (a) {
        case models::Arch::lstm: return "LSTM";
        case models::Arch::patchtst: return "PatchTST";
        case models::Arch::timesnet: return "TimesNET";
        case models::Arch::tpatchgnn: return "tPatchGNN";
    }
    return "";
}

namespace {

struct MetricColumn {
    std::string key;
    std::string label;
};

std::vector<MetricColumn> metric_columns(models::Task task) {
    if (task == models::Task::classification) return {{"f1", "F1"}, {"auc", "AUC"}};
    return {{"mae", "MAE"}, {"rse", "RSE"}};
}

template <typename RowOf>
ReportTable build_table(std::span<const RunRecord> records, models::Task task, std::vector<std::string> row_ids,
                        std::vector<std::string> row_labels, std::vector<models::Arch> archs, RowOf row_of) {
    ReportTable t;
    t.rows = std::move(row_labels);
    for (auto a : archs) t.groups.push_back(arch_label(a));
    const auto cols = metric_columns(task);
    for (const auto& c : cols) t.metrics.push_back(c.label);
    // values[row][arch][metric]
    std::vector<std::vector<std::vector<std::vector<double>>>> values(
        row_ids.size(), std::vector<std::vector<std::vector<double>>>(archs.size(),
                                                                        std::vector<std::vector<double>>(cols.size())));
    for (const auto& r : records) {
        if (r.task != task) continue;
        const auto row_id = row_of(r);
        if (!row_id) continue;
        const auto ri = std::find(row_ids.begin(), row_ids.end(), *row_id) - row_ids.begin();
        const auto ai = std::find(archs.begin(), archs.end(), r.arch) - archs.begin();
        if (ri == static_cast<std::ptrdiff_t>(row_ids.size()) || ai == static_cast<std::ptrdiff_t>(archs.size()))
            continue;
        for (std::size_t m = 0; m < cols.size(); ++m) {
            auto it = r.metrics.find(cols[m].key);
            if (it != r.metrics.end()) values[ri][ai][m].push_back(it->second);
        }
    }
    t.cells.resize(row_ids.size());
    for (std::size_t ri = 0; ri < row_ids.size(); ++ri) {
        t.cells[ri].resize(archs.size());
        for (std::size_t ai = 0; ai < archs.size(); ++ai)
            for (std::size_t m = 0; m < cols.size(); ++m) {
                const auto& v = values[ri][ai][m];
                if (v.empty()) {
                    t.cells[ri][ai].push_back(std::nullopt);
                    t.warnings.push_back("no records for " + t.rows[ri] + " / " + t.groups[ai] + " / " +
                                         t.metrics[m]);
                    continue;
                }
                if (v.size() < 2)
                    throw ValidationError("report cell " + t.rows[ri] + " / " + t.groups[ai] + " / " + t.metrics[m] +
                                          " has a single seed; at least 2 are needed for a standard deviation");
                t.cells[ri][ai].push_back(cell_stats(v));
            }
    }
    return t;
}

std::vector<models::Arch> all_archs() { return {std::begin(models::kAllArchs), std::end(models::kAllArchs)}; }

}  // namespace

ReportTable aggregate_report(std::span<const RunRecord> records, models::Task task) {
    std::vector<std::string> ids = {kNoSentiment};
    ids.insert(ids.end(), default_sources().begin(), default_sources().end());
    std::vector<std::string> labels;
    for (const auto& id : ids) labels.push_back(source_label(id));
    auto t = build_table(records, task, ids, labels, all_archs(), [](const RunRecord& r) -> std::optional<std::string> {
        if (r.variant != aggregation::AblationVariant::full) return std::nullopt;
        return normalise_source(r.source);
    });
    t.title = task == models::Task::classification ? "Stock movement classification" : "Price factor regression";
    t.row_header = "Model";
    return t;
}

ReportTable ablation_report(std::span<const RunRecord> records, models::Task task) {
    std::vector<models::Arch> archs;
    for (const auto& r : records)
        if (r.task == task && std::find(archs.begin(), archs.end(), r.arch) == archs.end()) archs.push_back(r.arch);
    std::sort(archs.begin(), archs.end());
    std::vector<std::string> ids, labels;
    for (auto v : aggregation::kAllVariants) {
        ids.push_back(aggregation::to_string(v));
        labels.push_back(v == aggregation::AblationVariant::full ? "BASE" : "BASE_" + aggregation::to_string(v));
    }
    auto t = build_table(records, task, ids, labels, archs, [](const RunRecord& r) -> std::optional<std::string> {
        if (normalise_source(r.source) == kNoSentiment) return std::nullopt;
        return aggregation::to_string(r.variant);
    });
    // Single-arch ablations read like "LSTM_wo_count".
    if (archs.size() == 1)
        for (auto& l : t.rows) l = arch_label(archs.front()) + l.substr(4);
    t.title = "Ablation";
    t.row_header = "Variant";
    return t;
}

namespace {

// Display width in code points (the cells contain a two-byte "±").
std::size_t display_width(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

std::string pad(const std::string& s, std::size_t w, bool left) {
    const std::size_t d = display_width(s);
    if (d >= w) return s;
    return left ? s + std::string(w - d, ' ') : std::string(w - d, ' ') + s;
}

}  // namespace

std::string to_text(const ReportTable& t) {
    const std::size_t g = t.groups.size(), m = t.metrics.size();
    std::vector<std::vector<std::string>> body(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        body[r].push_back(t.rows[r]);
        for (std::size_t a = 0; a < g; ++a)
            for (std::size_t k = 0; k < m; ++k) body[r].push_back(t.cells[r][a][k] ? format_cell(*t.cells[r][a][k]) : "");
    }
    std::vector<std::size_t> width(1 + g * m, 0);
    width[0] = std::max(display_width(t.row_header), std::size_t{4});
    for (std::size_t k = 0; k < g * m; ++k) width[1 + k] = std::max<std::size_t>(display_width(t.metrics[k % m]), 13);
    for (const auto& row : body)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], display_width(row[c]));
    const std::string sep = "  ";

    std::ostringstream out;
    if (!t.title.empty()) out << t.title << '\n';
    // group header spans its metric columns
    out << pad("", width[0], true);
    for (std::size_t a = 0; a < g; ++a) {
        std::size_t span = 0;
        for (std::size_t k = 0; k < m; ++k) span += width[1 + a * m + k] + sep.size();
        out << sep << pad(t.groups[a], span - sep.size(), true);
    }
    out << '\n' << pad(t.row_header, width[0], true);
    for (std::size_t c = 0; c < g * m; ++c) out << sep << pad(t.metrics[c % m], width[1 + c], true);
    out << '\n';
    std::size_t total = width[0];
    for (std::size_t c = 1; c < width.size(); ++c) total += sep.size() + width[c];
    out << std::string(total, '-') << '\n';
    for (const auto& row : body) {
        out << pad(row[0], width[0], true);
        for (std::size_t c = 1; c < row.size(); ++c) out << sep << pad(row[c], width[c], false);
        out << '\n';
    }
    return out.str();
}

std::string to_csv(const ReportTable& t) {
    std::ostringstream out;
    std::vector<std::string> header = {t.row_header};
    for (const auto& grp : t.groups)
        for (const auto& met : t.metrics) {
            header.push_back(grp + " " + met + " avg");
            header.push_back(grp + " " + met + " sd");
            header.push_back(grp + " " + met + " n");
        }
    csv::write_row(out, header);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::vector<std::string> row = {t.rows[r]};
        for (std::size_t a = 0; a < t.groups.size(); ++a)
            for (std::size_t k = 0; k < t.metrics.size(); ++k) {
                const auto& c = t.cells[r][a][k];
                if (c) {
                    row.push_back(format_double(c->mean));
                    row.push_back(format_double(c->sd));
                    row.push_back(std::to_string(c->n));
                } else {
                    row.insert(row.end(), {"", "", ""});
                }
            }
        csv::write_row(out, row);
    }
    return out.str();
}

}  // namespace sentiflow::experiments
