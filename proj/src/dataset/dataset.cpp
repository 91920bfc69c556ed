#include "sentiflow/dataset/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "sentiflow/common/csv.hpp"
#include "sentiflow/common/error.hpp"
#include "sentiflow/common/text.hpp"

namespace sentiflow::dataset {

namespace fs = std::filesystem;

FusedFrame fuse(std::span<const ingestion::PriceBar> prices, std::span<const aggregation::DailyRow> daily,
                const std::vector<std::string>& feature_names) {
    if (prices.empty()) throw ValidationError("fuse: no price rows");
    ingestion::validate_bars(prices);
    const auto& sent_names = aggregation::sentiment_feature_names();
    std::vector<int> column;  // >= 0: sentiment index, -1: close, -2: volume
    bool needs_sentiment = false;
    for (const auto& name : feature_names) {
        if (name == "close") column.push_back(-1);
        else if (name == "volume") column.push_back(-2);
        else {
            auto it = std::find(sent_names.begin(), sent_names.end(), name);
            if (it == sent_names.end()) throw ValidationError("fuse: unknown feature '" + name + "'");
            column.push_back(static_cast<int>(it - sent_names.begin()));
            needs_sentiment = true;
        }
    }
    std::map<Date, const aggregation::DailySentimentFeatures*> by_date;
    for (const auto& r : daily) by_date[r.date] = &r.features;
    if (needs_sentiment && daily.empty())
        throw ValidationError("fuse: sentiment features requested for " + prices.front().ticker + " but none supplied");

    const aggregation::DailySentimentFeatures empty_day;
    FusedFrame f;
    f.ticker = prices.front().ticker;
    f.feature_names = feature_names;
    for (const auto& bar : prices) {
        auto it = by_date.find(bar.date);
        const auto sent = (it == by_date.end() ? empty_day : *it->second).values();
        std::vector<double> row;
        row.reserve(column.size());
        for (int c : column) {
            if (c == -1) row.push_back(bar.close);
            else if (c == -2) row.push_back(static_cast<double>(bar.volume));
            else row.push_back(sent[static_cast<std::size_t>(c)]);
        }
        f.dates.push_back(bar.date);
        f.rows.push_back(std::move(row));
        f.closes.push_back(bar.close);
    }
    return f;
}

Targets compute_targets(std::span<const double> closes) {
    if (closes.size() < 2) throw ValidationError("compute_targets: need at least 2 prices");
    for (std::size_t i = 0; i < closes.size(); ++i)
        if (!(closes[i] > 0.0))
            throw ValidationError("compute_targets: non-positive price at index " + std::to_string(i));
    Targets t;
    t.factor.reserve(closes.size() - 1);
    t.binary.reserve(closes.size() - 1);
    for (std::size_t i = 0; i + 1 < closes.size(); ++i) {
        t.factor.push_back(closes[i + 1] / closes[i]);
        t.binary.push_back(closes[i + 1] > closes[i] ? 1 : 0);
    }
    return t;
}

SplitRanges temporal_split(std::size_t t, const SplitFractions& fr) {
    if (t < 10) throw ValidationError("temporal_split: need at least 10 rows, got " + std::to_string(t));
    if (!(fr.train > 0 && fr.val > 0 && fr.test > 0) || std::abs(fr.train + fr.val + fr.test - 1.0) > 1e-9)
        throw ValidationError("temporal_split: fractions must be positive and sum to 1");
    const auto td = static_cast<double>(t);
    const auto b1 = static_cast<std::size_t>(std::floor(fr.train * td + 1e-9));
    const auto b2 = static_cast<std::size_t>(std::floor((fr.train + fr.val) * td + 1e-9));
    SplitRanges r{{0, b1}, {b1, b2}, {b2, t}};
    if (r.train.size() == 0 || r.val.size() == 0 || r.test.size() == 0)
        throw ValidationError("temporal_split: " + std::to_string(t) + " rows leave an empty split");
    return r;
}

ScalerParams fit_minmax(std::span<const std::vector<double>> rows, const std::vector<std::string>& feature_names) {
    if (rows.empty()) throw ValidationError("fit_minmax: no training rows");
    const std::size_t f = feature_names.size();
    ScalerParams p;
    p.feature_names = feature_names;
    p.min.assign(f, 0.0);
    p.max.assign(f, 0.0);
    for (std::size_t j = 0; j < f; ++j) {
        double lo = rows.front().at(j), hi = lo;
        for (const auto& r : rows) {
            if (r.size() != f) throw ValidationError("fit_minmax: ragged rows");
            lo = std::min(lo, r[j]);
            hi = std::max(hi, r[j]);
        }
        p.min[j] = lo;
        p.max[j] = hi;
        p.degenerate.push_back(hi == lo);
    }
    return p;
}

std::vector<std::vector<double>> apply_minmax(std::span<const std::vector<double>> rows,
                                              const std::vector<std::string>& feature_names,
                                              const ScalerParams& params) {
    if (feature_names != params.feature_names)
        throw ValidationError("apply_minmax: feature schema does not match scaler parameters");
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        if (r.size() != params.min.size()) throw ValidationError("apply_minmax: row width mismatch");
        std::vector<double> s(r.size());
        for (std::size_t j = 0; j < r.size(); ++j)
            s[j] = params.degenerate[j] ? 0.0 : (r[j] - params.min[j]) / (params.max[j] - params.min[j]);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<std::vector<double>> invert_minmax(std::span<const std::vector<double>> rows, const ScalerParams& params) {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        if (r.size() != params.min.size()) throw ValidationError("invert_minmax: row width mismatch");
        std::vector<double> s(r.size());
        for (std::size_t j = 0; j < r.size(); ++j)
            s[j] = params.degenerate[j] ? params.min[j] : params.min[j] + r[j] * (params.max[j] - params.min[j]);
        out.push_back(std::move(s));
    }
    return out;
}

SampleSet make_windows(const FusedFrame& frame, const Targets& targets, std::size_t length) {
    const std::size_t t = frame.size();
    if (length == 0) throw ValidationError("make_windows: window length must be positive");
    if (t < length + 1)
        throw ValidationError("make_windows: " + std::to_string(t) + " rows; need at least " +
                              std::to_string(length + 1) + " for one target-aligned window");
    if (targets.factor.size() + 1 < t) throw ValidationError("make_windows: targets shorter than frame");
    SampleSet s;
    s.length = length;
    s.features = frame.feature_names.size();
    const std::size_t n = t - length;
    s.inputs.reserve(n * length * s.features);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t r = k; r < k + length; ++r) {
            if (frame.rows[r].size() != s.features) throw ValidationError("make_windows: ragged frame");
            s.inputs.insert(s.inputs.end(), frame.rows[r].begin(), frame.rows[r].end());
        }
        const std::size_t last = k + length - 1;
        s.factor.push_back(targets.factor[last]);
        s.binary.push_back(targets.binary[last]);
        s.window_start.push_back(frame.dates[k]);
        s.window_end.push_back(frame.dates[last]);
        s.predicted.push_back(frame.dates[last + 1]);
    }
    return s;
}

namespace {

FusedFrame slice(const FusedFrame& f, Range r, const std::vector<std::vector<double>>& scaled) {
    FusedFrame out;
    out.ticker = f.ticker;
    out.feature_names = f.feature_names;
    out.dates.assign(f.dates.begin() + r.begin, f.dates.begin() + r.end);
    out.rows.assign(scaled.begin() + r.begin, scaled.begin() + r.end);
    out.closes.assign(f.closes.begin() + r.begin, f.closes.begin() + r.end);
    return out;
}

}  // namespace

WindowedDataset build_dataset(const FusedFrame& frame, std::size_t length, const SplitFractions& fractions) {
    WindowedDataset ds;
    ds.ticker = frame.ticker;
    ds.feature_names = frame.feature_names;
    ds.length = length;
    ds.rows = temporal_split(frame.size(), fractions);
    for (const Range r : {ds.rows.train, ds.rows.val, ds.rows.test})
        if (r.size() < length + 1)
            throw ValidationError("build_dataset: split [" + std::to_string(r.begin) + ", " + std::to_string(r.end) +
                                  ") of " + frame.ticker + " has " + std::to_string(r.size()) +
                                  " rows; each split needs at least " + std::to_string(length + 1));
    const std::span<const std::vector<double>> train_rows(frame.rows.data() + ds.rows.train.begin,
                                                          ds.rows.train.size());
    ds.scaler = fit_minmax(train_rows, frame.feature_names);
    const auto scaled = apply_minmax(frame.rows, frame.feature_names, ds.scaler);
    auto window_split = [&](Range r) {
        const auto part = slice(frame, r, scaled);
        return make_windows(part, compute_targets(part.closes), length);
    };
    ds.train = window_split(ds.rows.train);
    ds.val = window_split(ds.rows.val);
    ds.test = window_split(ds.rows.test);
    return ds;
}

namespace {

constexpr char kMagic[4] = {'S', 'F', 'W', 'D'};
constexpr std::uint32_t kVersion = 1;

void write_split(const fs::path& dir, const std::string& name, const SampleSet& s) {
    {
        std::ofstream out(dir / (name + ".bin"), std::ios::binary);
        if (!out) throw Error("cannot write " + (dir / (name + ".bin")).string());
        out.write(kMagic, 4);
        out.write(reinterpret_cast<const char*>(&kVersion), sizeof kVersion);
        const std::uint64_t dims[3] = {s.size(), s.length, s.features};
        out.write(reinterpret_cast<const char*>(dims), sizeof dims);
        out.write(reinterpret_cast<const char*>(s.inputs.data()),
                  static_cast<std::streamsize>(s.inputs.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(s.factor.data()),
                  static_cast<std::streamsize>(s.factor.size() * sizeof(double)));
    }
    std::ofstream csv_out(dir / (name + "_samples.csv"), std::ios::binary);
    csv_out << "window_start,window_end,predicted,factor,binary\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        csv::write_row(csv_out, {s.window_start[i].to_string(), s.window_end[i].to_string(),
                                 s.predicted[i].to_string(), format_double(s.factor[i]), std::to_string(s.binary[i])});
}

SampleSet read_split(const fs::path& dir, const std::string& name) {
    SampleSet s;
    const auto bin = dir / (name + ".bin");
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw Error("cannot read " + bin.string());
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t dims[3];
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(dims), sizeof dims);
    if (!in || std::memcmp(magic, kMagic, 4) != 0 || version != kVersion)
        throw FormatError(bin.string() + ": not a dataset tensor file (or unsupported version)");
    s.length = dims[1];
    s.features = dims[2];
    s.inputs.resize(dims[0] * dims[1] * dims[2]);
    s.factor.resize(dims[0]);
    in.read(reinterpret_cast<char*>(s.inputs.data()), static_cast<std::streamsize>(s.inputs.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(s.factor.data()), static_cast<std::streamsize>(s.factor.size() * sizeof(double)));
    if (!in) throw FormatError(bin.string() + ": truncated");

    std::ifstream cin(dir / (name + "_samples.csv"), std::ios::binary);
    if (!cin) throw Error("cannot read " + (dir / (name + "_samples.csv")).string());
    csv::Reader reader(cin);
    auto header = reader.next();
    if (!header) throw FormatError(name + "_samples.csv: empty");
    const auto idx = csv::require_columns(*header, {"window_start", "window_end", "predicted", "binary"});
    while (auto row = reader.next()) {
        if (row->size() == 1 && row->front().empty()) continue;
        s.window_start.push_back(Date::parse((*row)[idx[0]]));
        s.window_end.push_back(Date::parse((*row)[idx[1]]));
        s.predicted.push_back(Date::parse((*row)[idx[2]]));
        s.binary.push_back(static_cast<int>(parse_int((*row)[idx[3]])));
    }
    if (s.binary.size() != s.factor.size()) throw FormatError(name + ": sample table and tensor disagree on N");
    return s;
}

}  // namespace

void save_dataset(const fs::path& dir, const WindowedDataset& ds, const std::string& provenance_hash) {
    fs::create_directories(dir);
    nlohmann::ordered_json j;
    j["ticker"] = ds.ticker;
    j["provenance"] = provenance_hash;
    j["feature_names"] = ds.feature_names;
    j["window"] = ds.length;
    j["rows"] = {{"train", {ds.rows.train.begin, ds.rows.train.end}},
                 {"val", {ds.rows.val.begin, ds.rows.val.end}},
                 {"test", {ds.rows.test.begin, ds.rows.test.end}}};
    j["samples"] = {{"train", ds.train.size()}, {"val", ds.val.size()}, {"test", ds.test.size()}};
    std::vector<int> degenerate(ds.scaler.degenerate.begin(), ds.scaler.degenerate.end());
    j["scaler"] = {{"min", ds.scaler.min}, {"max", ds.scaler.max}, {"degenerate", degenerate}};
    j["layout"] = "<split>.bin: 'SFWD', u32 version, u64 N, L, F, f64 inputs[N][L][F], f64 factor[N]";
    std::ofstream out(dir / "schema.json");
    if (!out) throw Error("cannot write " + (dir / "schema.json").string());
    out << j.dump(2) << '\n';
    write_split(dir, "train", ds.train);
    write_split(dir, "val", ds.val);
    write_split(dir, "test", ds.test);
}

WindowedDataset load_dataset(const fs::path& dir) {
    std::ifstream in(dir / "schema.json");
    if (!in) throw Error("missing dataset schema " + (dir / "schema.json").string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError((dir / "schema.json").string() + ": " + e.what());
    }
    WindowedDataset ds;
    ds.ticker = j.at("ticker").get<std::string>();
    ds.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    ds.length = j.at("window").get<std::size_t>();
    auto range = [&](const char* k) {
        const auto v = j.at("rows").at(k).get<std::vector<std::size_t>>();
        return Range{v.at(0), v.at(1)};
    };
    ds.rows = {range("train"), range("val"), range("test")};
    ds.scaler.feature_names = ds.feature_names;
    ds.scaler.min = j.at("scaler").at("min").get<std::vector<double>>();
    ds.scaler.max = j.at("scaler").at("max").get<std::vector<double>>();
    for (int d : j.at("scaler").at("degenerate").get<std::vector<int>>()) ds.scaler.degenerate.push_back(d != 0);
    ds.train = read_split(dir, "train");
    ds.val = read_split(dir, "val");
    ds.test = read_split(dir, "test");
    for (const auto* s : {&ds.train, &ds.val, &ds.test})
        if (s->features != ds.feature_names.size() || s->length != ds.length)
            throw FormatError(dir.string() + ": tensor shape disagrees with schema");
    return ds;
}

std::string dataset_provenance(const fs::path& dir) {
    std::ifstream in(dir / "schema.json");
    if (!in) return {};
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) return {};
    return j.value("provenance", std::string{});
}

}  // namespace sentiflow::dataset
