#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sentiflow/experiments/report.hpp"
#include "sentiflow/sentiment/evaluation.hpp"

namespace sentiflow::experiments {

struct VennArea {
    unsigned mask = 0;  // bit i set = backend i correct; 0 = none correct
    std::size_t count = 0;
    double x = 0.0, y = 0.0;  // label position
};

struct VennCircle {
    std::string label;
    double cx = 0.0, cy = 0.0, r = 0.0;
};

struct VennLayout {
    std::string title;
    std::size_t class_size = 0;
    std::vector<VennCircle> circles;
    std::vector<VennArea> areas;  // every non-empty mask, then the none-correct area
};

// One to three backends; more throws ValidationError (use pairwise_svg).
VennLayout venn_layout(const sentiment::AgreementRegions& regions, sentiment::Label cls);
std::string venn_svg(const VennLayout& layout);
std::string venn_png(const VennLayout& layout);

// Matrix of items both backends got right, for any number of backends.
std::string pairwise_svg(const sentiment::AgreementRegions& regions, sentiment::Label cls);

// Grouped bars of each row's mean per column group for one metric, with sd whiskers.
std::string bar_chart_svg(const ReportTable& table, std::size_t metric);
std::string bar_chart_png(const ReportTable& table, std::size_t metric);

// Writes venn_<class>.{svg,png} (or pairwise_<class>.svg for more than three
// backends) and bars_<table>_<metric>.{svg,png}. Returns the written paths.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& dir, std::span<const ReportTable> tables,
                                              const sentiment::AgreementRegions* regions);

}  // namespace sentiflow::experiments
