#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "dataset_fixtures.hpp"
#include "metric_oracles.hpp"
#include "sentiflow/aggregation/daily.hpp"
#include "sentiflow/common/error.hpp"
#include "sentiflow/common/rng.hpp"
#include "sentiflow/common/text.hpp"
#include "sentiflow/experiments/metrics.hpp"
#include "sentiflow/experiments/plots.hpp"
#include "sentiflow/experiments/report.hpp"
#include "sentiflow/experiments/runner.hpp"

using namespace sentiflow;
using namespace sentiflow::experiments;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("sentiflow_exp_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Tiny per-source datasets: NS has the two market columns, others all eleven.
DatasetResolver tiny_resolver() {
    auto cache = std::make_shared<std::map<std::string, std::shared_ptr<const dataset::WindowedDataset>>>();
    return [cache](const DatasetKey& key) {
        auto& slot = (*cache)[key.to_string()];
        if (!slot) {
            const auto names = key.source == kNoSentiment ? aggregation::market_feature_names()
                                                          : aggregation::select_features(key.variant);
            auto frame = testutil::random_frame(120, names.size(), fnv1a(key.ticker));
            frame.feature_names = names;
            slot = std::make_shared<dataset::WindowedDataset>(dataset::build_dataset(frame, 8));
        }
        return slot;
    };
}

ExperimentSpec tiny_spec() {
    ExperimentSpec spec;
    spec.tickers = {"AAA"};
    spec.sources = {"NS", "finbert"};
    spec.archs = {models::Arch::lstm};
    spec.seeds = {1, 2, 3};
    models::ModelConfig c;
    c.hidden_dim = 4;
    c.num_layers = 1;
    c.epochs = 2;
    c.batch_size = 16;
    spec.model_configs[models::Arch::lstm] = c;
    return spec;
}

RunRecord record(const std::string& source, models::Arch arch, std::uint64_t seed, double f1, double auc) {
    RunRecord r;
    r.ticker = "T";
    r.source = source;
    r.arch = arch;
    r.seed = seed;
    r.metrics = {{"f1", f1}, {"auc", auc}};
    return r;
}

}  // namespace

TEST_CASE("binary metric examples") {
    const std::vector<int> gold = {1, 1, 0, 0};
    CHECK(metric_precision(std::vector<int>{1, 0, 0, 0}, gold) == 1.0);
    CHECK(metric_recall(std::vector<int>{1, 0, 0, 0}, gold) == 0.5);
    CHECK(metric_f1(std::vector<int>{1, 0, 0, 0}, gold) == doctest::Approx(2.0 / 3.0));
    CHECK(metric_accuracy(std::vector<int>{1, 0, 0, 0}, gold) == 0.75);
    for (auto fn : {metric_precision, metric_recall, metric_f1, metric_accuracy}) CHECK(fn(gold, gold) == 1.0);
    const std::vector<int> none = {0, 0, 0, 0};
    CHECK(metric_recall(none, gold) == 0.0);
    CHECK(metric_f1(none, gold) == 0.0);
    CHECK(metric_precision(none, gold) == 0.0);
    CHECK_THROWS_AS(metric_f1(std::vector<int>{1}, gold), ValidationError);
}

TEST_CASE("auc examples") {
    CHECK(metric_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}) == 0.75);
    CHECK(metric_auc(std::vector<double>{0.1, 0.2, 0.3, 0.9}, std::vector<int>{0, 0, 1, 1}) == 1.0);
    CHECK(metric_auc(std::vector<double>(6, 0.3), std::vector<int>{0, 1, 0, 1, 1, 0}) == 0.5);
    CHECK_THROWS_AS(metric_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), ValidationError);
}

TEST_CASE("auc equals the pairwise statistic") {
    Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        const auto inst = testutil::random_auc_instance(rng, 200);
        CHECK(metric_auc(inst.scores, inst.gold) == testutil::pairwise_auc(inst.scores, inst.gold));
    }
}

TEST_CASE("binary metrics match hand confusion counts") {
    Rng rng(78);
    for (int trial = 0; trial < 100; ++trial) {
        const auto [pred, gold] = testutil::random_binary_instance(rng, 100);
        const auto o = testutil::confusion_oracle(pred, gold);
        CHECK(metric_precision(pred, gold) == o.precision);
        CHECK(metric_recall(pred, gold) == o.recall);
        CHECK(metric_f1(pred, gold) == doctest::Approx(o.f1).epsilon(1e-12));
        CHECK(metric_accuracy(pred, gold) == o.accuracy);
    }
}

TEST_CASE("regression metric examples") {
    const std::vector<double> gold = {1, 2, 3};
    const std::vector<double> pred = {2, 2, 2};
    CHECK(metric_mae(pred, gold) == doctest::Approx(2.0 / 3.0));
    CHECK(metric_rmse(pred, gold) == doctest::Approx(std::sqrt(2.0 / 3.0)));
    CHECK(metric_rse(pred, gold) == 1.0);
    CHECK(metric_mae(gold, gold) == 0.0);
    CHECK(metric_rmse(gold, gold) == 0.0);
    CHECK(metric_rse(gold, gold) == 0.0);
    CHECK_THROWS_AS(metric_rse(std::vector<double>{1, 1}, std::vector<double>{2, 2}), ValidationError);

    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> g(20);
        for (auto& v : g) v = rng.uniform(0.9, 1.1);
        const double mean = std::accumulate(g.begin(), g.end(), 0.0) / 20.0;
        CHECK(metric_rse(std::vector<double>(20, mean), g) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("metric maps") {
    const auto c = classification_metrics(std::vector<double>{0.2, 0.5, 0.7, 0.4}, std::vector<int>{0, 1, 1, 0});
    CHECK(c.at("accuracy") == 1.0);
    CHECK(c.at("auc") == 1.0);
    for (const char* k : {"f1", "f1_weighted", "precision", "recall"}) CHECK(c.count(k) == 1);
    const auto r = regression_metrics(std::vector<double>{1, 2}, std::vector<double>{1, 3});
    CHECK(r.at("mae") == 0.5);
    CHECK(r.count("rmse") == 1);
    CHECK(r.count("rse") == 1);
    CHECK(threshold(std::vector<double>{0.49, 0.5, 0.51}) == std::vector<int>{0, 1, 1});
}

TEST_CASE("cell statistics") {
    const auto c = cell_stats(std::vector<double>{0.5, 0.7});
    CHECK(format_cell(c) == "0.600 ± 0.141");
    CHECK_THROWS_AS(cell_stats(std::vector<double>{0.5}), ValidationError);
    CHECK(format_cell(cell_stats(std::vector<double>{0.42, 0.42, 0.42})) == "0.420 ± 0.000");
}

TEST_CASE("aggregate report layout") {
    std::vector<RunRecord> recs;
    for (std::uint64_t seed : {1, 2}) {
        recs.push_back(record("NS", models::Arch::lstm, seed, seed == 1 ? 0.5 : 0.7, 0.6));
        recs.push_back(record("svm", models::Arch::tpatchgnn, seed, 0.9, seed == 1 ? 0.8 : 0.6));
    }
    const auto t = aggregate_report(recs, models::Task::classification);
    CHECK(t.rows == std::vector<std::string>{"NS", "FinBERT", "DeBERTa", "RoBERTa", "LR", "RF", "SVM"});
    CHECK(t.groups == std::vector<std::string>{"LSTM", "PatchTST", "TimesNET", "tPatchGNN"});
    CHECK(t.metrics == std::vector<std::string>{"F1", "AUC"});
    REQUIRE(t.cells[0][0][0]);
    CHECK(format_cell(*t.cells[0][0][0]) == "0.600 ± 0.141");
    CHECK(format_cell(*t.cells[6][3][1]) == "0.700 ± 0.141");
    CHECK_FALSE(t.cells[1][0][0]);
    CHECK_FALSE(t.warnings.empty());
    const auto text = to_text(t);
    CHECK(text.find("0.600 ± 0.141") != std::string::npos);
    CHECK(text.find("tPatchGNN") != std::string::npos);
    const auto csv = to_csv(t);
    CHECK(csv.find("NS,") != std::string::npos);

    std::vector<RunRecord> one = {record("NS", models::Arch::lstm, 1, 0.5, 0.5)};
    CHECK_THROWS_WITH_AS(aggregate_report(one, models::Task::classification), doctest::Contains("single seed"),
                         ValidationError);
}

TEST_CASE("report is invariant to record order") {
    Rng rng(5);
    std::vector<RunRecord> recs;
    for (const auto& s : {"NS", "finbert", "lr"})
        for (auto a : models::kAllArchs)
            for (std::uint64_t seed = 0; seed < 5; ++seed)
                recs.push_back(record(s, a, seed, rng.uniform(), rng.uniform()));
    const auto base = to_csv(aggregate_report(recs, models::Task::classification));
    for (int t = 0; t < 20; ++t) {
        rng.shuffle(std::span(recs));
        CHECK(to_csv(aggregate_report(recs, models::Task::classification)) == base);
    }
}

TEST_CASE("ablation report rows") {
    std::vector<RunRecord> recs;
    for (auto v : aggregation::kAllVariants)
        for (std::uint64_t seed : {1, 2}) {
            auto r = record("finbert", models::Arch::lstm, seed, 0.5, 0.5 + 0.1 * static_cast<double>(seed));
            r.variant = v;
            recs.push_back(r);
        }
    const auto t = ablation_report(recs, models::Task::classification);
    CHECK(t.rows == std::vector<std::string>{"LSTM", "LSTM_wo_count", "LSTM_wo_sum", "LSTM_wo_count_sum",
                                             "LSTM_wo_majority"});
    CHECK(format_cell(*t.cells[3][0][1]) == "0.650 ± 0.071");
}

TEST_CASE("run_experiment plans the cartesian product and resumes") {
    const auto dir = temp_dir("resume");
    RunOptions opts;
    opts.records_path = dir / "records.jsonl";
    opts.config_hash = "cfg";
    const auto spec = tiny_spec();
    const auto first = run_experiment(spec, tiny_resolver(), opts);
    CHECK(first.records.size() == 6);
    CHECK(first.trained == 6);
    CHECK(first.records[0].source == "NS");
    CHECK(first.records[0].feature_dim == 2);
    CHECK(first.records[3].feature_dim == 11);
    CHECK(first.records[2].seed == 3);

    // Interrupt after four runs, with a torn fifth line.
    std::vector<std::string> lines;
    {
        std::ifstream in(opts.records_path);
        for (std::string l; std::getline(in, l);) lines.push_back(l);
    }
    REQUIRE(lines.size() == 6);
    {
        std::ofstream out(opts.records_path, std::ios::trunc);
        for (int i = 0; i < 4; ++i) out << lines[i] << '\n';
        out << lines[4].substr(0, 20);
    }
    const auto second = run_experiment(spec, tiny_resolver(), opts);
    CHECK(second.trained == 2);
    CHECK(second.resumed == 4);
    for (std::size_t i = 0; i < 6; ++i) CHECK(second.records[i].metrics == first.records[i].metrics);
    CHECK(read_records(opts.records_path).size() == 6);

    // A different producing config retrains everything.
    opts.config_hash = "other";
    opts.records_path = dir / "other.jsonl";
    fs::copy_file(dir / "records.jsonl", opts.records_path);
    CHECK(run_experiment(spec, tiny_resolver(), opts).trained == 6);
    fs::remove_all(dir);
}

TEST_CASE("runs are deterministic across worker counts") {
    RunOptions one, many;
    many.workers = 3;
    const auto a = run_experiment(tiny_spec(), tiny_resolver(), one);
    const auto b = run_experiment(tiny_spec(), tiny_resolver(), many);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].run_hash == b.records[i].run_hash);
        CHECK(a.records[i].metrics == b.records[i].metrics);
    }
}

TEST_CASE("ablation suite covers every variant") {
    auto spec = tiny_spec();
    spec.seeds = {1};
    const auto s = ablation_suite(spec, tiny_resolver(), {});
    REQUIRE(s.records.size() == 5);
    std::vector<std::size_t> dims;
    for (const auto& r : s.records) {
        CHECK(r.source == "finbert");
        dims.push_back(r.feature_dim);
    }
    CHECK(dims == std::vector<std::size_t>{11, 8, 10, 7, 8});
    spec.archs = {models::Arch::patchtst};
    CHECK_THROWS_AS(ablation_suite(spec, tiny_resolver(), {}), ValidationError);
}

TEST_CASE("run failures name the run") {
    auto spec = tiny_spec();
    DatasetResolver missing = [](const DatasetKey& k) -> std::shared_ptr<const dataset::WindowedDataset> {
        throw NoDataError("missing dataset " + k.to_string());
    };
    CHECK_THROWS_WITH_AS(run_experiment(spec, missing, {}), doctest::Contains("AAA"), NoDataError);
    spec.seeds.clear();
    CHECK_THROWS_AS(run_experiment(spec, tiny_resolver(), {}), ValidationError);
}

TEST_CASE("venn layout and counts") {
    sentiment::AgreementRegions r;
    r.backends = {"finbert", "roberta", "deberta"};
    for (auto& c : r.counts) c.assign(8, 0);
    auto& pos = r.counts[sentiment::index(sentiment::Label::positive)];
    pos = {4, 10, 0, 3, 7, 2, 1, 30};
    r.class_size[sentiment::index(sentiment::Label::positive)] = 57;
    const auto v = venn_layout(r, sentiment::Label::positive);
    CHECK(v.circles.size() == 3);
    CHECK(v.areas.size() == 8);
    std::size_t total = 0, labeled = 0;
    for (const auto& a : v.areas) {
        total += a.count;
        labeled += a.mask != 0;
    }
    CHECK(labeled == 7);
    CHECK(total == 57);
    const auto svg = venn_svg(v);
    CHECK(svg.find("Original labels (positive): 57") != std::string::npos);
    CHECK(svg.find("none: 4") != std::string::npos);
    CHECK(svg.find("data-mask=\"2\">0<") != std::string::npos);
    const auto png = venn_png(v);
    CHECK(png.substr(0, 8) == std::string("\x89PNG\r\n\x1a\n", 8));

    r.backends.push_back("extra");
    for (auto& c : r.counts) c.assign(16, 0);
    CHECK_THROWS_AS(venn_layout(r, sentiment::Label::positive), ValidationError);
    CHECK(pairwise_svg(r, sentiment::Label::positive).find("<svg") != std::string::npos);
}

TEST_CASE("emit plots writes svg and png files") {
    const auto dir = temp_dir("plots");
    std::vector<RunRecord> recs;
    for (std::uint64_t seed : {1, 2}) recs.push_back(record("NS", models::Arch::lstm, seed, 0.5, 0.6));
    const std::vector<ReportTable> tables = {aggregate_report(recs, models::Task::classification)};
    sentiment::AgreementRegions r;
    r.backends = {"a", "b"};
    for (auto& c : r.counts) c.assign(4, 1);
    for (auto& s : r.class_size) s = 4;
    const auto written = emit_plots(dir, tables, &r);
    CHECK(written.size() == 3 * 2 + 2 * 2);
    for (const auto& p : written) {
        CHECK(fs::exists(p));
        CHECK(fs::file_size(p) > 100);
    }
    fs::remove_all(dir);
}
