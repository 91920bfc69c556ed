#include <doctest.h>

#include <json.hpp>

#include <filesystem>

#include "fake_transport.hpp"
#include "sentiflow/common/error.hpp"
#include "sentiflow/common/rng.hpp"
#include "sentiflow/ingestion/align.hpp"
#include "sentiflow/ingestion/sources.hpp"
#include "sentiflow/ingestion/store.hpp"

using namespace sentiflow;
using namespace sentiflow::ingestion;
namespace fs = std::filesystem;

namespace {

std::vector<Date> weekdays(Date from, std::size_t n) {
    std::vector<Date> out;
    for (Date d = from; out.size() < n; d = d.plus_days(1))
        if (!d.is_weekend()) out.push_back(d);
    return out;
}

class ListPrices : public PriceSource {
public:
    explicit ListPrices(std::vector<PriceBar> bars) : bars_(std::move(bars)) {}
    std::string name() const override { return "list"; }
    std::vector<PriceBar> prices(const std::string&, Date, Date) override { return bars_; }

private:
    std::vector<PriceBar> bars_;
};

fs::path temp_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("sentiflow_ingest_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string feed(const std::vector<nlohmann::json>& entries) {
    nlohmann::json doc;
    doc["feed"] = entries;
    return doc.dump();
}

}  // namespace

TEST_CASE("fetch_prices filters to the range") {
    std::vector<PriceBar> bars;
    for (auto d : weekdays(Date::parse("2022-03-07"), 10)) bars.push_back({"MSFT", d, 100.0, 10});
    ListPrices src(bars);

    const auto one = fetch_prices("MSFT", Date::parse("2022-03-10"), Date::parse("2022-03-10"), src);
    REQUIRE(one.size() == 1);
    CHECK(one[0].date == Date::parse("2022-03-10"));

    CHECK_THROWS_AS(fetch_prices("MSFT", Date::parse("2022-03-12"), Date::parse("2022-03-13"), src), NoDataError);
    try {
        fetch_prices("MSFT", Date::parse("2022-03-12"), Date::parse("2022-03-13"), src);
    } catch (const NoDataError& e) {
        CHECK(std::string(e.what()).find("MSFT") != std::string::npos);
    }
}

TEST_CASE("validate_bars rejects bad bars") {
    const Date d = Date::parse("2022-03-10");
    std::vector<PriceBar> ok = {{"A", d, 1.0, 0}, {"A", d.plus_days(1), 2.0, 5}};
    CHECK_NOTHROW(validate_bars(ok));
    std::vector<PriceBar> zero = {{"A", d, 0.0, 0}};
    CHECK_THROWS_AS(validate_bars(zero), ValidationError);
    std::vector<PriceBar> negvol = {{"A", d, 1.0, -1}};
    CHECK_THROWS_AS(validate_bars(negvol), ValidationError);
    std::vector<PriceBar> repeat = {{"A", d, 1.0, 0}, {"A", d, 1.0, 0}};
    CHECK_THROWS_AS(validate_bars(repeat), ValidationError);
}

TEST_CASE("yahoo chart parsing") {
    auto t = std::make_shared<testutil::FakeTransport>();
    // 2022-03-10 and 2022-03-11 at 13:30 UTC, exchange offset -5h; middle bar null.
    t->push(200, R"({"chart":{"result":[{"meta":{"gmtoffset":-18000},
        "timestamp":[1646919000,1646951400,1647005400],
        "indicators":{"quote":[{"close":[287.15,null,280.07],"volume":[31000000,null,27000000]}]}}]}})");
    YahooChartSource src(t, "http://fake");
    const auto bars = src.prices("MSFT", Date::parse("2022-03-10"), Date::parse("2022-03-11"));
    REQUIRE(bars.size() == 2);
    CHECK(bars[0].date == Date::parse("2022-03-10"));
    CHECK(bars[0].close == 287.15);
    CHECK(bars[1].date == Date::parse("2022-03-11"));
    CHECK(bars[1].volume == 27000000);
    CHECK(t->urls[0].find("/v8/finance/chart/MSFT?interval=1d") != std::string::npos);

    t->push(401, "");
    CHECK_THROWS_AS(src.prices("MSFT", Date::parse("2022-03-10"), Date::parse("2022-03-11")), TransportError);
}

TEST_CASE("alphavantage pages monthly, dedups ids and skips malformed items") {
    auto t = std::make_shared<testutil::FakeTransport>();
    const nlohmann::json a = {{"title", "Tesla rallies"}, {"url", "u1"}, {"time_published", "20220310T143000"}};
    const nlohmann::json b = {{"title", "Tesla slips"}, {"url", "u2"}, {"time_published", "20220402T090000"}};
    const nlohmann::json no_title = {{"url", "u3"}, {"time_published", "20220403T090000"}};
    t->push(200, feed({a}));
    t->push(200, feed({a, b, no_title}));
    std::vector<std::chrono::milliseconds> slept;
    RateLimit limit;
    limit.min_interval = std::chrono::milliseconds{0};
    AlphaVantageNewsSource src(t, "KEY", limit, [&](auto ms) { slept.push_back(ms); }, "http://fake");
    const auto res = fetch_news("TSLA", Date::parse("2022-03-10"), Date::parse("2022-04-05"), src);
    CHECK(t->urls.size() == 2);
    CHECK(t->urls[0].find("time_from=20220310T0000") != std::string::npos);
    CHECK(t->urls[0].find("time_to=20220331T2359") != std::string::npos);
    CHECK(t->urls[1].find("time_from=20220401T0000") != std::string::npos);
    REQUIRE(res.items.size() == 2);
    CHECK(res.duplicates == 1);
    CHECK(res.skipped == 1);
    CHECK(res.items[0].id == "u1");
    CHECK(res.items[0].published_at.to_string() == "2022-03-10T14:30:00Z");
}

TEST_CASE("alphavantage backs off exponentially on throttling") {
    auto t = std::make_shared<testutil::FakeTransport>();
    t->push(200, R"({"Note": "Thank you for using Alpha Vantage! call frequency"})");
    t->push(429, "");
    t->push(200, feed({}));
    std::vector<std::chrono::milliseconds> slept;
    RateLimit limit;
    limit.min_interval = std::chrono::milliseconds{0};
    limit.backoff_base = std::chrono::milliseconds{100};
    AlphaVantageNewsSource src(t, "KEY", limit, [&](auto ms) { slept.push_back(ms); }, "http://fake");
    CHECK(src.news("TSLA", Date::parse("2022-03-10"), Date::parse("2022-03-20")).items.empty());
    REQUIRE(slept.size() == 2);
    CHECK(slept[0].count() == 100);
    CHECK(slept[1].count() == 200);

    auto t2 = std::make_shared<testutil::FakeTransport>();
    for (int i = 0; i < 10; ++i) t2->push(429, "");
    limit.max_retries = 5;
    AlphaVantageNewsSource src2(t2, "KEY", limit, [](auto) {}, "http://fake");
    CHECK_THROWS_AS(src2.news("TSLA", Date::parse("2022-03-10"), Date::parse("2022-03-20")), TransportError);
    CHECK(t2->urls.size() == 6);
}

TEST_CASE("alphavantage throttles between requests") {
    auto t = std::make_shared<testutil::FakeTransport>();
    std::vector<std::chrono::milliseconds> slept;
    RateLimit limit;
    limit.min_interval = std::chrono::milliseconds{60000};
    AlphaVantageNewsSource src(t, "KEY", limit, [&](auto ms) { slept.push_back(ms); }, "http://fake");
    src.news("TSLA", Date::parse("2022-01-01"), Date::parse("2022-03-31"));
    CHECK(t->urls.size() == 3);
    REQUIRE(slept.size() == 2);
    for (auto s : slept) CHECK(s.count() > 59000);
}

TEST_CASE("forward fill") {
    const Date d = Date::parse("2022-03-07");
    std::vector<DatedValue> s = {{d, 100.0}, {d.plus_days(1), std::nullopt}, {d.plus_days(2), std::nullopt},
                                 {d.plus_days(3), 103.0}};
    const auto f = forward_fill(s);
    REQUIRE(f.size() == 4);
    CHECK(f[1].value == 100.0);
    CHECK(f[2].value == 100.0);
    CHECK(f[3].value == 103.0);

    std::vector<DatedValue> single = {{d, 5.0}};
    CHECK(forward_fill(single)[0].value == 5.0);
    std::vector<DatedValue> lead = {{d, std::nullopt}, {d.plus_days(1), 7.0}};
    CHECK_THROWS_AS(forward_fill(lead), ValidationError);
}

TEST_CASE("forward fill is idempotent") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<DatedValue> s;
        const std::size_t n = 1 + rng.index(20);
        for (std::size_t i = 0; i < n; ++i) {
            std::optional<double> v;
            if (i == 0 || rng.uniform() < 0.6) v = rng.uniform(1, 100);
            s.push_back({Date::parse("2022-01-03").plus_days(static_cast<int>(i)), v});
        }
        const auto once = forward_fill(s);
        std::vector<DatedValue> again;
        for (const auto& f : once) again.push_back({f.date, f.value});
        CHECK(forward_fill(again) == once);
    }
}

TEST_CASE("align to trading day") {
    // Friday 2022-04-15 is a market holiday.
    std::vector<Date> days;
    for (auto d : weekdays(Date::parse("2022-04-11"), 10))
        if (d != Date::parse("2022-04-15")) days.push_back(d);
    const TradingCalendar cal(days);

    CHECK(align_to_trading_day(Timestamp::parse("2022-04-16T14:00:00Z"), cal) == Date::parse("2022-04-18"));
    CHECK(align_to_trading_day(Timestamp::parse("2022-04-13T09:00:00Z"), cal) == Date::parse("2022-04-13"));
    CHECK(align_to_trading_day(Timestamp::parse("2022-04-15T12:00:00Z"), cal) == Date::parse("2022-04-18"));
    CHECK_THROWS_AS(align_to_trading_day(Timestamp::parse("2022-05-01T12:00:00Z"), cal), ValidationError);

    AlignOptions cutoff;
    cutoff.close_cutoff = true;
    CHECK(align_to_trading_day(Timestamp::parse("2022-04-13T20:30:00Z"), cal, cutoff) == Date::parse("2022-04-14"));
    CHECK(align_to_trading_day(Timestamp::parse("2022-04-13T20:30:00Z"), cal) == Date::parse("2022-04-13"));
    CHECK(align_to_trading_day(Timestamp::parse("2022-04-14T21:00:00Z"), cal, cutoff) == Date::parse("2022-04-18"));
}

TEST_CASE("aligned date is never earlier and always on the calendar") {
    Rng rng(11);
    std::vector<Date> days;
    for (auto d : weekdays(Date::parse("2022-01-03"), 120))
        if (rng.uniform() > 0.05) days.push_back(d);
    const TradingCalendar cal(days);
    for (int i = 0; i < 2000; ++i) {
        const Date d = Date::parse("2021-12-25").plus_days(static_cast<int>(rng.index(170)));
        const auto ts = Timestamp::parse(d.to_string() + "T10:00:00Z");
        if (days.back() < d) {
            CHECK_THROWS(align_to_trading_day(ts, cal));
            continue;
        }
        const Date a = align_to_trading_day(ts, cal);
        CHECK(!(a < d));
        CHECK(cal.contains(a));
    }
}

TEST_CASE("reindex prices forward fills gaps") {
    const auto days = weekdays(Date::parse("2022-03-07"), 5);
    const TradingCalendar cal(days);
    std::vector<PriceBar> bars = {{"A", days[0], 10.0, 1}, {"A", days[1], 11.0, 2}, {"A", days[4], 14.0, 5}};
    const auto r = reindex_prices(bars, cal);
    REQUIRE(r.size() == 5);
    CHECK(r[2].close == 11.0);
    CHECK(r[3].volume == 2);
    CHECK(r[4].close == 14.0);
    std::vector<PriceBar> late = {{"A", days[2], 10.0, 1}};
    CHECK_THROWS(reindex_prices(late, cal));
}

TEST_CASE("calendar from bars is the sorted union of dates") {
    const auto days = weekdays(Date::parse("2022-03-07"), 6);
    std::vector<PriceBar> bars = {{"B", days[3], 1, 0}, {"A", days[0], 1, 0}, {"A", days[3], 1, 0},
                                  {"B", days[1], 1, 0}};
    const auto cal = TradingCalendar::from_bars(bars);
    CHECK(cal.dates() == std::vector<Date>{days[0], days[1], days[3]});
    CHECK(cal.index_of(days[3]) == 2u);
    CHECK_FALSE(cal.index_of(days[2]));
    CHECK_THROWS(TradingCalendar({Date::parse("2022-03-12")}));
}

TEST_CASE("raw store round trip is exact") {
    const auto dir = temp_dir("store");
    const RawStore store(dir);
    Rng rng(9);
    std::vector<PriceBar> bars;
    for (auto d : weekdays(Date::parse("2022-03-10"), 50))
        bars.push_back({"X", d, rng.uniform(1, 500), static_cast<std::int64_t>(rng.index(1000000))});
    std::vector<NewsItem> news = {
        {"n1", "X", Timestamp::parse("2022-03-10T14:30:00Z"), "Plain headline"},
        {"n2", "X", Timestamp::parse("2022-03-11T00:00:01Z"), "Commas, \"quotes\" and unicode: caf\xc3\xa9"},
    };
    store.save_prices("X", bars);
    store.save_news("X", news);
    CHECK(store.load_prices("X") == bars);
    CHECK(store.load_news("X") == news);
    fs::remove_all(dir);
}
