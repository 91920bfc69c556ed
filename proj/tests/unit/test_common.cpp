#include <doctest.h>

#include <sstream>

#include "sentiflow/common/csv.hpp"
#include "sentiflow/common/date.hpp"
#include "sentiflow/common/error.hpp"
#include "sentiflow/common/http.hpp"
#include "sentiflow/common/rng.hpp"
#include "sentiflow/common/text.hpp"

using namespace sentiflow;

TEST_CASE("date parse, print and weekday") {
    const Date d = Date::parse("2022-03-10");
    CHECK(d.to_string() == "2022-03-10");
    CHECK_FALSE(d.is_weekend());
    CHECK(Date::parse("2022-03-12").is_weekend());
    CHECK(Date::parse("2022-03-13").is_weekend());
    CHECK(d.plus_days(23).to_string() == "2022-04-02");
    CHECK(Date(2024, 2, 29).to_string() == "2024-02-29");
    CHECK_THROWS_AS(Date::parse("2023-02-29"), FormatError);
    CHECK_THROWS_AS(Date::parse("2022/03/10"), FormatError);
}

TEST_CASE("timestamp formats") {
    const auto a = Timestamp::parse("2022-03-10T14:05:09Z");
    CHECK(a.to_string() == "2022-03-10T14:05:09Z");
    CHECK(Timestamp::parse("2022-03-10 14:05:09") == a);
    CHECK(Timestamp::parse("20220310T140509") == a);
    CHECK(Timestamp::parse("20220310T1405").to_string() == "2022-03-10T14:05:00Z");
    CHECK(a.date() == Date::parse("2022-03-10"));
    CHECK(a.seconds_of_day() == 14 * 3600 + 5 * 60 + 9);
    CHECK_THROWS(Timestamp::parse("yesterday"));
}

TEST_CASE("text helpers") {
    CHECK(to_lower("AbC") == "abc");
    CHECK(trim("  x y \t") == "x y");
    CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
    CHECK(parse_double(" 1.25") == 1.25);
    CHECK(parse_int("-42") == -42);
    CHECK_THROWS(parse_double("1.2x"));
    CHECK_THROWS(parse_int(""));
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0})
        CHECK(parse_double(format_double(v)) == v);
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hex64(255) == "00000000000000ff");
}

TEST_CASE("csv quoting round trip") {
    const csv::Row row = {"plain", "with,comma", "with \"quote\"", "multi\nline", ""};
    std::stringstream io;
    csv::write_row(io, row);
    csv::write_row(io, {"second"});
    csv::Reader reader(io);
    auto first = reader.next();
    REQUIRE(first);
    CHECK(*first == row);
    auto second = reader.next();
    REQUIRE(second);
    CHECK(second->front() == "second");
    CHECK_FALSE(reader.next());
}

TEST_CASE("csv require_columns lists every missing column") {
    try {
        csv::require_columns({"a", "b"}, {"a", "c", "d"});
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("c") != std::string::npos);
        CHECK(msg.find("d") != std::string::npos);
    }
    CHECK(csv::require_columns({"x", "a"}, {"a"}) == std::vector<std::size_t>{1});
}

TEST_CASE("rng is reproducible and in range") {
    Rng a(5), b(5), c(6);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        CHECK(x == b.next());
        differs = differs || x != c.next();
    }
    CHECK(differs);
    Rng r(1);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        ++hits[r.index(7)];
    }
    for (int h : hits) CHECK(h > 800);
}

TEST_CASE("url splitting") {
    const auto u = http::split_url("https://example.com:8443/a/b?x=1");
    CHECK(u.scheme_host_port == "https://example.com:8443");
    CHECK(u.path_and_query == "/a/b?x=1");
    CHECK(http::split_url("http://h").path_and_query == "/");
    CHECK(http::url_encode("a b&c") == "a%20b%26c");
    CHECK_THROWS(http::split_url("ftp:/nope"));
}
