#include "sentiflow/experiments/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "raster.hpp"
#include "sentiflow/common/error.hpp"

namespace sentiflow::experiments {

namespace {

constexpr int kWidth = 500;
constexpr int kHeight = 420;

const raster::Rgb kPalette[] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40},
                                {148, 103, 189}, {140, 86, 75}, {227, 119, 194}};
const char* kSvgPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

void write_file(const std::filesystem::path& p, const std::string& data) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << data;
}

}  // namespace

VennLayout venn_layout(const sentiment::AgreementRegions& regions, sentiment::Label cls) {
    const std::size_t k = regions.backends.size();
    if (k == 0) throw ValidationError("venn diagram needs at least one backend");
    if (k > 3)
        throw ValidationError("venn diagram supports at most 3 backends, got " + std::to_string(k) +
                              "; render the pairwise matrix instead");
    const auto& counts = regions.counts[sentiment::index(cls)];
    if (counts.size() != (std::size_t{1} << k)) throw ValidationError("agreement regions do not match backend count");

    VennLayout v;
    v.title = "Original labels (" + sentiment::to_string(cls) + ")";
    v.class_size = regions.class_size[sentiment::index(cls)];
    const double r = 95;
    std::vector<std::pair<double, double>> centres;
    std::vector<std::pair<double, double>> label_at(8);
    if (k == 1) {
        centres = {{250, 200}};
        label_at[1] = {250, 200};
    } else if (k == 2) {
        centres = {{200, 200}, {300, 200}};
        label_at[1] = {160, 200};
        label_at[2] = {340, 200};
        label_at[3] = {250, 200};
    } else {
        centres = {{200, 170}, {300, 170}, {250, 255}};
        label_at[1] = {160, 145};
        label_at[2] = {340, 145};
        label_at[4] = {250, 310};
        label_at[3] = {250, 130};
        label_at[5] = {195, 235};
        label_at[6] = {305, 235};
        label_at[7] = {250, 200};
    }
    for (std::size_t i = 0; i < k; ++i) v.circles.push_back({regions.backends[i], centres[i].first, centres[i].second, r});
    for (unsigned mask = 1; mask < (1u << k); ++mask)
        v.areas.push_back({mask, counts[mask], label_at[mask].first, label_at[mask].second});
    v.areas.push_back({0, counts[0], 70, 390});
    return v;
}

std::string venn_svg(const VennLayout& v) {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
    s << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    s << "<rect x=\"20\" y=\"40\" width=\"460\" height=\"370\" fill=\"none\" stroke=\"#444\"/>\n";
    s << "<text x=\"30\" y=\"30\" font-family=\"sans-serif\" font-size=\"16\">" << xml_escape(v.title) << ": "
      << v.class_size << "</text>\n";
    for (std::size_t i = 0; i < v.circles.size(); ++i) {
        const auto& c = v.circles[i];
        s << "<circle cx=\"" << num(c.cx) << "\" cy=\"" << num(c.cy) << "\" r=\"" << num(c.r) << "\" fill=\""
          << kSvgPalette[i] << "\" fill-opacity=\"0.3\" stroke=\"" << kSvgPalette[i] << "\"/>\n";
        const double ly = c.cy < 200 ? c.cy - c.r - 8 : c.cy + c.r + 16;
        s << "<text x=\"" << num(c.cx) << "\" y=\"" << num(std::max(ly, 58.0))
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(c.label)
          << "</text>\n";
    }
    for (const auto& a : v.areas) {
        const std::string label = a.mask == 0 ? "none: " + std::to_string(a.count) : std::to_string(a.count);
        s << "<text x=\"" << num(a.x) << "\" y=\"" << num(a.y) << "\" text-anchor=\""
          << (a.mask == 0 ? "start" : "middle") << "\" font-family=\"sans-serif\" font-size=\"14\" data-mask=\""
          << a.mask << "\">" << label << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

std::string venn_png(const VennLayout& v) {
    raster::Canvas c(kWidth, kHeight);
    const raster::Rgb ink{30, 30, 30};
    c.rect(20, 40, 480, 410, {68, 68, 68});
    c.text(30, 16, v.title + ": " + std::to_string(v.class_size), ink, 2);
    for (std::size_t i = 0; i < v.circles.size(); ++i) {
        const auto& ci = v.circles[i];
        c.fill_circle(ci.cx, ci.cy, ci.r, kPalette[i], 0.3);
        c.circle(ci.cx, ci.cy, ci.r, kPalette[i]);
        const double ly = ci.cy < 200 ? ci.cy - ci.r - 16 : ci.cy + ci.r + 6;
        c.text_centered(static_cast<int>(ci.cx), static_cast<int>(std::max(ly, 48.0)), ci.label, ink);
    }
    for (const auto& a : v.areas) {
        const std::string label = a.mask == 0 ? "none: " + std::to_string(a.count) : std::to_string(a.count);
        if (a.mask == 0)
            c.text(static_cast<int>(a.x), static_cast<int>(a.y) - 7, label, ink);
        else
            c.text_centered(static_cast<int>(a.x), static_cast<int>(a.y) - 7, label, ink, 2);
    }
    return c.encode_png();
}

std::string pairwise_svg(const sentiment::AgreementRegions& regions, sentiment::Label cls) {
    const std::size_t k = regions.backends.size();
    const auto& counts = regions.counts[sentiment::index(cls)];
    const int cell = 60, margin = 120;
    const int size = margin + cell * static_cast<int>(k) + 20;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
    s << "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">Both correct ("
      << sentiment::to_string(cls) << "), class size " << regions.class_size[sentiment::index(cls)] << "</text>\n";
    for (std::size_t i = 0; i < k; ++i) {
        s << "<text x=\"10\" y=\"" << margin + cell * static_cast<int>(i) + cell / 2
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(regions.backends[i]) << "</text>\n";
        s << "<text x=\"" << margin + cell * static_cast<int>(i) + cell / 2 << "\" y=\"" << margin - 10
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(regions.backends[i])
          << "</text>\n";
        for (std::size_t j = 0; j < k; ++j) {
            std::size_t both = 0;
            const unsigned need = (1u << i) | (1u << j);
            for (unsigned mask = 0; mask < counts.size(); ++mask)
                if ((mask & need) == need) both += counts[mask];
            const int x = margin + cell * static_cast<int>(j), y = margin + cell * static_cast<int>(i);
            s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
              << "\" fill=\"#dde\" stroke=\"#444\"/>\n";
            s << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 5
              << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << both << "</text>\n";
        }
    }
    s << "</svg>\n";
    return s.str();
}

namespace {

struct BarGeometry {
    double lo = 0.0, hi = 1.0;
    int left = 60, right = 480, top = 50, bottom = 330;
    double y_of(double v) const { return bottom - (v - lo) / (hi - lo) * (bottom - top); }
};

BarGeometry bar_geometry(const ReportTable& t, std::size_t metric) {
    BarGeometry g;
    double hi = 0.0;
    for (const auto& row : t.cells)
        for (const auto& grp : row)
            if (metric < grp.size() && grp[metric]) hi = std::max(hi, grp[metric]->mean + grp[metric]->sd);
    g.hi = hi > 0 ? hi * 1.1 : 1.0;
    return g;
}

}  // namespace

std::string bar_chart_svg(const ReportTable& t, std::size_t metric) {
    if (metric >= t.metrics.size()) throw ValidationError("bar chart: metric index out of range");
    const auto g = bar_geometry(t, metric);
    const std::size_t groups = t.groups.size(), rows = t.rows.size();
    const double group_w = static_cast<double>(g.right - g.left) / static_cast<double>(std::max<std::size_t>(groups, 1));
    const double bar_w = group_w * 0.8 / static_cast<double>(std::max<std::size_t>(rows, 1));
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
    s << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    s << "<text x=\"20\" y=\"25\" font-family=\"sans-serif\" font-size=\"15\">" << xml_escape(t.title) << " - "
      << xml_escape(t.metrics[metric]) << " (mean, sd)</text>\n";
    s << "<line x1=\"" << g.left << "\" y1=\"" << g.bottom << "\" x2=\"" << g.right << "\" y2=\"" << g.bottom
      << "\" stroke=\"#000\"/>\n";
    s << "<line x1=\"" << g.left << "\" y1=\"" << g.top << "\" x2=\"" << g.left << "\" y2=\"" << g.bottom
      << "\" stroke=\"#000\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = g.lo + (g.hi - g.lo) * tick / 4.0;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", v);
        s << "<text x=\"" << g.left - 5 << "\" y=\"" << num(g.y_of(v) + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << buf << "</text>\n";
    }
    for (std::size_t a = 0; a < groups; ++a) {
        const double gx = g.left + group_w * static_cast<double>(a) + group_w * 0.1;
        s << "<text x=\"" << num(g.left + group_w * (static_cast<double>(a) + 0.5)) << "\" y=\"" << g.bottom + 16
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(t.groups[a])
          << "</text>\n";
        for (std::size_t r = 0; r < rows; ++r) {
            const auto& c = t.cells[r][a][metric];
            if (!c) continue;
            const double x = gx + bar_w * static_cast<double>(r);
            s << "<rect x=\"" << num(x) << "\" y=\"" << num(g.y_of(c->mean)) << "\" width=\"" << num(bar_w * 0.9)
              << "\" height=\"" << num(g.bottom - g.y_of(c->mean)) << "\" fill=\"" << kSvgPalette[r % 7] << "\"/>\n";
            const double cx = x + bar_w * 0.45;
            s << "<line x1=\"" << num(cx) << "\" y1=\"" << num(g.y_of(std::max(g.lo, c->mean - c->sd))) << "\" x2=\""
              << num(cx) << "\" y2=\"" << num(g.y_of(c->mean + c->sd)) << "\" stroke=\"#000\"/>\n";
        }
    }
    for (std::size_t r = 0; r < rows; ++r) {
        const int y = 355 + static_cast<int>(r / 4) * 18;
        const int x = 60 + static_cast<int>(r % 4) * 110;
        s << "<rect x=\"" << x << "\" y=\"" << y - 10 << "\" width=\"10\" height=\"10\" fill=\"" << kSvgPalette[r % 7]
          << "\"/><text x=\"" << x + 14 << "\" y=\"" << y << "\" font-family=\"sans-serif\" font-size=\"11\">"
          << xml_escape(t.rows[r]) << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

std::string bar_chart_png(const ReportTable& t, std::size_t metric) {
    if (metric >= t.metrics.size()) throw ValidationError("bar chart: metric index out of range");
    const auto g = bar_geometry(t, metric);
    raster::Canvas c(kWidth, kHeight);
    const raster::Rgb ink{0, 0, 0};
    c.text(20, 12, t.title + " - " + t.metrics[metric], ink);
    c.line(g.left, g.bottom, g.right, g.bottom, ink);
    c.line(g.left, g.top, g.left, g.bottom, ink);
    const std::size_t groups = t.groups.size(), rows = t.rows.size();
    const double group_w = static_cast<double>(g.right - g.left) / static_cast<double>(std::max<std::size_t>(groups, 1));
    const double bar_w = group_w * 0.8 / static_cast<double>(std::max<std::size_t>(rows, 1));
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = g.lo + (g.hi - g.lo) * tick / 4.0;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", v);
        c.text(g.left - 4 - raster::Canvas::text_width(buf), static_cast<int>(g.y_of(v)) - 3, buf, ink);
    }
    for (std::size_t a = 0; a < groups; ++a) {
        const double gx = g.left + group_w * static_cast<double>(a) + group_w * 0.1;
        c.text_centered(static_cast<int>(g.left + group_w * (static_cast<double>(a) + 0.5)), g.bottom + 6, t.groups[a],
                        ink);
        for (std::size_t r = 0; r < rows; ++r) {
            const auto& cell = t.cells[r][a][metric];
            if (!cell) continue;
            const int x0 = static_cast<int>(gx + bar_w * static_cast<double>(r));
            const int x1 = static_cast<int>(gx + bar_w * (static_cast<double>(r) + 0.9));
            c.fill_rect(x0, static_cast<int>(g.y_of(cell->mean)), x1, g.bottom - 1, kPalette[r % 7]);
            const int cx = (x0 + x1) / 2;
            c.line(cx, static_cast<int>(g.y_of(std::max(g.lo, cell->mean - cell->sd))), cx,
                   static_cast<int>(g.y_of(cell->mean + cell->sd)), ink);
        }
    }
    for (std::size_t r = 0; r < rows; ++r) {
        const int y = 348 + static_cast<int>(r / 4) * 18;
        const int x = 60 + static_cast<int>(r % 4) * 110;
        c.fill_rect(x, y, x + 9, y + 7, kPalette[r % 7]);
        c.text(x + 14, y, t.rows[r], ink);
    }
    return c.encode_png();
}

std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& dir, std::span<const ReportTable> tables,
                                              const sentiment::AgreementRegions* regions) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto emit = [&](const std::string& name, const std::string& data) {
        write_file(dir / name, data);
        written.push_back(dir / name);
    };
    if (regions) {
        for (auto cls : sentiment::kLabels) {
            const std::string c = sentiment::to_string(cls);
            if (regions->backends.size() > 3) {
                emit("pairwise_" + c + ".svg", pairwise_svg(*regions, cls));
                continue;
            }
            const auto layout = venn_layout(*regions, cls);
            emit("venn_" + c + ".svg", venn_svg(layout));
            emit("venn_" + c + ".png", venn_png(layout));
        }
    }
    for (std::size_t i = 0; i < tables.size(); ++i) {
        std::string stem = tables[i].title;
        for (auto& ch : stem) ch = std::isalnum(static_cast<unsigned char>(ch)) ? static_cast<char>(std::tolower(ch)) : '_';
        for (std::size_t m = 0; m < tables[i].metrics.size(); ++m) {
            std::string metric = tables[i].metrics[m];
            for (auto& ch : metric) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            emit("bars_" + stem + "_" + metric + ".svg", bar_chart_svg(tables[i], m));
            emit("bars_" + stem + "_" + metric + ".png", bar_chart_png(tables[i], m));
        }
    }
    return written;
}

}  // namespace sentiflow::experiments
