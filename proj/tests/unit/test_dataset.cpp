#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dataset_fixtures.hpp"
#include "sentiflow/aggregation/daily.hpp"
#include "sentiflow/common/error.hpp"
#include "sentiflow/dataset/dataset.hpp"

using namespace sentiflow;
using namespace sentiflow::dataset;
namespace fs = std::filesystem;

TEST_CASE("compute_targets examples") {
    const auto t = compute_targets(std::vector<double>{100, 105, 99});
    REQUIRE(t.factor.size() == 2);
    CHECK(t.factor[0] == 1.05);
    CHECK(t.factor[1] == doctest::Approx(0.942857142857));
    CHECK(t.binary == std::vector<int>{1, 0});

    const auto flat = compute_targets(std::vector<double>{100, 100});
    CHECK(flat.factor == std::vector<double>{1.0});
    CHECK(flat.binary == std::vector<int>{0});

    const auto constant = compute_targets(std::vector<double>(20, 7.5));
    for (std::size_t i = 0; i < constant.factor.size(); ++i) {
        CHECK(constant.factor[i] == 1.0);
        CHECK(constant.binary[i] == 0);
    }
    CHECK_THROWS_AS(compute_targets(std::vector<double>{1}), ValidationError);
    CHECK_THROWS_AS(compute_targets(std::vector<double>{1, 0, 2}), ValidationError);
}

TEST_CASE("binary target agrees with the factor") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto f = testutil::random_frame(60, 1, seed);
        const auto t = compute_targets(f.closes);
        for (std::size_t i = 0; i < t.factor.size(); ++i) CHECK(t.binary[i] == (t.factor[i] > 1.0 ? 1 : 0));
    }
}

TEST_CASE("temporal split examples") {
    const auto a = temporal_split(100);
    CHECK(a.train == Range{0, 70});
    CHECK(a.val == Range{70, 80});
    CHECK(a.test == Range{80, 100});
    const auto b = temporal_split(10);
    CHECK(b.train == Range{0, 7});
    CHECK(b.val == Range{7, 8});
    CHECK(b.test == Range{8, 10});
    CHECK_THROWS_AS(temporal_split(5), ValidationError);
    for (std::size_t t = 10; t <= 1000; ++t) {
        const auto s = temporal_split(t);
        CHECK(s.train.begin == 0);
        CHECK(s.train.end == s.val.begin);
        CHECK(s.val.end == s.test.begin);
        CHECK(s.test.end == t);
    }
}

TEST_CASE("min-max scaling") {
    const std::vector<std::string> names = {"x"};
    const std::vector<std::vector<double>> rows = {{2}, {4}, {6}};
    const auto p = fit_minmax(rows, names);
    const auto s = apply_minmax(rows, names, p);
    CHECK(s[0][0] == 0.0);
    CHECK(s[1][0] == 0.5);
    CHECK(s[2][0] == 1.0);
    CHECK(apply_minmax(std::vector<std::vector<double>>{{8}}, names, p)[0][0] == 1.5);

    const std::vector<std::vector<double>> flat = {{5}, {5}, {5}};
    const auto pf = fit_minmax(flat, names);
    CHECK(pf.degenerate[0]);
    for (const auto& r : apply_minmax(flat, names, pf)) CHECK(r[0] == 0.0);

    CHECK_THROWS_AS(apply_minmax(rows, {"y"}, p), ValidationError);
}

TEST_CASE("scaling then inverting is the identity") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto f = testutil::random_frame(80, 5, seed);
        const auto p = fit_minmax(f.rows, f.feature_names);
        const auto back = invert_minmax(apply_minmax(f.rows, f.feature_names, p), p);
        for (std::size_t i = 0; i < f.rows.size(); ++i)
            for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(back[i][j] - f.rows[i][j]) <= 1e-9);
    }
}

TEST_CASE("make_windows counts and alignment") {
    for (std::size_t t : {31u, 40u, 77u}) {
        const auto f = testutil::random_frame(t, 2, t);
        const auto s = make_windows(f, compute_targets(f.closes), 30);
        CHECK(s.size() == t - 30);
        CHECK(s.inputs.size() == (t - 30) * 30 * 2);
    }
    const auto f = testutil::random_frame(31, 2, 1);
    const auto targets = compute_targets(f.closes);
    const auto s = make_windows(f, targets, 30);
    CHECK(s.window_start[0] == f.dates[0]);
    CHECK(s.window_end[0] == f.dates[29]);
    CHECK(s.predicted[0] == f.dates[30]);
    CHECK(s.factor[0] == f.closes[30] / f.closes[29]);
    CHECK(s.sample(0)[29 * 2 + 1] == f.rows[29][1]);

    const auto short_frame = testutil::random_frame(30, 2, 1);
    CHECK_THROWS_AS(make_windows(short_frame, compute_targets(short_frame.closes), 30), ValidationError);
}

TEST_CASE("build_dataset windows each split on its own") {
    for (std::size_t t : {400u, 500u, 333u}) {
        const auto f = testutil::random_frame(t, 3, t);
        const auto ds = build_dataset(f);
        CHECK(ds.train.size() == ds.rows.train.size() - 30);
        CHECK(ds.val.size() == ds.rows.val.size() - 30);
        CHECK(ds.test.size() == ds.rows.test.size() - 30);
        for (const auto* s : {&ds.train, &ds.val, &ds.test})
            for (std::size_t i = 0; i < s->size(); ++i) {
                CHECK(s->window_end[i] < s->predicted[i]);
                CHECK(s->window_start[i] < s->window_end[i]);
            }
        // no window crosses a split boundary
        CHECK(ds.train.predicted.back() <= f.dates[ds.rows.train.end - 1]);
        CHECK(f.dates[ds.rows.val.begin] <= ds.val.window_start.front());
        CHECK(f.dates[ds.rows.test.begin] <= ds.test.window_start.front());
    }
    CHECK_THROWS_AS(build_dataset(testutil::random_frame(100, 2, 1)), ValidationError);
}

TEST_CASE("scaler is fit on train rows only") {
    // Test rows are far outside the train range: a leaky fit would differ.
    auto f = testutil::random_frame(400, 2, 3);
    const auto split = temporal_split(f.size());
    for (std::size_t i = split.test.begin; i < split.test.end; ++i) f.rows[i][0] = 1000.0 + static_cast<double>(i);
    const auto ds = build_dataset(f);
    const auto train_only = fit_minmax(std::span(f.rows.data(), split.train.size()), f.feature_names);
    const auto leaky = fit_minmax(f.rows, f.feature_names);
    CHECK(ds.scaler.min == train_only.min);
    CHECK(ds.scaler.max == train_only.max);
    CHECK(ds.scaler.max != leaky.max);
    // Test inputs then exceed 1 because the scaler never saw them.
    CHECK(ds.test.sample(0).back() >= 0.0);
    double peak = 0.0;
    for (double v : ds.test.inputs) peak = std::max(peak, v);
    CHECK(peak > 1.0);
}

TEST_CASE("fuse joins prices and sentiment") {
    const auto days = testutil::trading_days(3);
    const std::vector<ingestion::PriceBar> bars = {{"X", days[0], 10, 100}, {"X", days[1], 11, 200},
                                                   {"X", days[2], 12, 300}};
    const std::vector<sentiment::SentimentPrediction> one = {{sentiment::Label::positive, 0.5, "b"}};
    const std::vector<aggregation::DailyRow> daily = {{"X", days[1], aggregation::aggregate_day(one)}};
    const auto names = aggregation::select_features(aggregation::AblationVariant::full);
    const auto f = fuse(bars, daily, names);
    REQUIRE(f.size() == 3);
    CHECK(f.rows[0].size() == 11);
    CHECK(f.rows[0][2] == 0.0);  // count_pos on an empty day
    CHECK(f.rows[1][2] == 1.0);
    CHECK(f.rows[1][3] == 0.5);   // score_sum
    CHECK(f.rows[0][7] == 1.0);   // maj_neu
    CHECK(f.rows[2][9] == 12.0);  // close
    CHECK(f.rows[2][10] == 300.0);
    CHECK(f.closes == std::vector<double>{10, 11, 12});

    const auto ns = fuse(bars, {}, aggregation::market_feature_names());
    CHECK(ns.rows[1] == std::vector<double>{11, 200});
    CHECK_THROWS_AS(fuse(bars, {}, names), ValidationError);
    CHECK_THROWS_AS(fuse(bars, daily, {"close", "bogus"}), ValidationError);
}

TEST_CASE("dataset persistence round trip") {
    const auto dir = fs::temp_directory_path() / "sentiflow_dataset";
    fs::remove_all(dir);
    const auto ds = build_dataset(testutil::random_frame(400, 3, 8));
    save_dataset(dir, ds, "abc123");
    const auto back = load_dataset(dir);
    CHECK(dataset_provenance(dir) == "abc123");
    CHECK(back.ticker == ds.ticker);
    CHECK(back.feature_names == ds.feature_names);
    CHECK(back.rows == ds.rows);
    CHECK(back.scaler.min == ds.scaler.min);
    for (auto [a, b] : {std::pair{&ds.train, &back.train}, {&ds.val, &back.val}, {&ds.test, &back.test}}) {
        CHECK(a->inputs == b->inputs);
        CHECK(a->factor == b->factor);
        CHECK(a->binary == b->binary);
        CHECK(a->predicted == b->predicted);
    }
    fs::remove(dir / "val.bin");
    CHECK_THROWS(load_dataset(dir));
    fs::remove_all(dir);
}
