#include "sentiflow/ingestion/store.hpp"

#include <json.hpp>

#include <fstream>

#include "sentiflow/common/csv.hpp"
#include "sentiflow/common/error.hpp"
#include "sentiflow/common/text.hpp"

namespace sentiflow::ingestion {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    return in;
}

}  // namespace

void write_prices(const fs::path& path, std::span<const PriceBar> bars) {
    auto out = open_out(path);
    out << "ticker,date,close,volume\n";
    for (const auto& b : bars)
        csv::write_row(out, {b.ticker, b.date.to_string(), format_double(b.close), std::to_string(b.volume)});
}

std::vector<PriceBar> read_prices(const fs::path& path) {
    auto in = open_in(path);
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw FormatError(path.string() + ": empty price file");
    const auto idx = csv::require_columns(*header, {"ticker", "date", "close", "volume"});
    std::vector<PriceBar> bars;
    while (auto row = reader.next()) {
        if (row->size() == 1 && row->front().empty()) continue;
        if (row->size() < header->size())
            throw FormatError(path.string() + ":" + std::to_string(reader.line()) + ": short row");
        bars.push_back({(*row)[idx[0]], Date::parse((*row)[idx[1]]), parse_double((*row)[idx[2]]),
                        parse_int((*row)[idx[3]])});
    }
    return bars;
}

void write_news(const fs::path& path, std::span<const NewsItem> items) {
    auto out = open_out(path);
    for (const auto& n : items) {
        nlohmann::ordered_json j;
        j["id"] = n.id;
        j["ticker"] = n.ticker;
        j["published_at"] = n.published_at.to_string();
        j["headline"] = n.headline;
        out << j.dump() << '\n';
    }
}

std::vector<NewsItem> read_news(const fs::path& path) {
    auto in = open_in(path);
    std::vector<NewsItem> items;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            items.push_back({j.at("id").get<std::string>(), j.at("ticker").get<std::string>(),
                             Timestamp::parse(j.at("published_at").get<std::string>()),
                             j.at("headline").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return items;
}

fs::path RawStore::prices_path(const std::string& ticker) const { return root_ / "prices" / (ticker + ".csv"); }
fs::path RawStore::news_path(const std::string& ticker) const { return root_ / "news" / (ticker + ".jsonl"); }

void RawStore::save_prices(const std::string& ticker, std::span<const PriceBar> bars) const {
    write_prices(prices_path(ticker), bars);
}
void RawStore::save_news(const std::string& ticker, std::span<const NewsItem> items) const {
    write_news(news_path(ticker), items);
}
std::vector<PriceBar> RawStore::load_prices(const std::string& ticker) const {
    return read_prices(prices_path(ticker));
}
std::vector<NewsItem> RawStore::load_news(const std::string& ticker) const { return read_news(news_path(ticker)); }

}  // namespace sentiflow::ingestion
