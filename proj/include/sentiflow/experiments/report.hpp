#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "sentiflow/experiments/runner.hpp"

namespace sentiflow::experiments {

struct CellStats {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;  // sample sd, n - 1 denominator
};

// Throws ValidationError when fewer than 2 values are given.
CellStats cell_stats(std::span<const double> values);
// "0.600 ± 0.141"
std::string format_cell(const CellStats& c, int decimals = 3);

struct ReportTable {
    std::string title;
    std::string row_header;               // e.g. "Model"
    std::vector<std::string> rows;        // display labels
    std::vector<std::string> groups;      // column groups (archs)
    std::vector<std::string> metrics;     // display labels per group
    // cells[row][group][metric]; nullopt renders blank.
    std::vector<std::vector<std::vector<std::optional<CellStats>>>> cells;
    std::vector<std::string> warnings;
};

// Display label for a source id: NS, FinBERT, DeBERTa, RoBERTa, LR, RF, SVM.
std::string source_label(const std::string& source);
// LSTM, PatchTST, TimesNET, tPatchGNN
std::string arch_label(models::Arch a);

// Rows NS plus the six sentiment sources, groups the four archs. Cells pool
// every (ticker, seed) record of the task with the full variant. F1 and AUC
// for classification, MAE and RSE for regression.
ReportTable aggregate_report(std::span<const RunRecord> records, models::Task task);

// Rows are <ARCH> and <ARCH>_<variant> for each ablation variant present.
ReportTable ablation_report(std::span<const RunRecord> records, models::Task task);

std::string to_text(const ReportTable& t);
std::string to_csv(const ReportTable& t);

}  // namespace sentiflow::experiments
