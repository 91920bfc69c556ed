#include "sentiflow/pipeline/synth.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

#include "sentiflow/common/error.hpp"
#include "sentiflow/common/rng.hpp"
#include "sentiflow/ingestion/store.hpp"
#include "sentiflow/sentiment/corpus.hpp"

namespace sentiflow::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kWords = 12;

const std::vector<std::string>& positive_words() {
    static const std::vector<std::string> w = {"surges", "beats", "upgrade", "record", "soars", "rally",
                                               "outperform", "strong", "gains", "profit", "boost", "bullish"};
    return w;
}

const std::vector<std::string>& negative_words() {
    static const std::vector<std::string> w = {"plunges", "misses", "downgrade", "lawsuit", "slumps", "selloff",
                                               "underperform", "weak", "losses", "deficit", "cut", "bearish"};
    return w;
}

const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> w = {"company", "shares", "quarter", "analysts", "report", "market",
                                               "investors", "update", "board", "chief", "outlook", "trading",
                                               "annual", "sector", "meeting", "statement"};
    return w;
}

std::string headline(Rng& rng, int direction, std::size_t polar_words) {
    std::string out;
    auto add = [&](const std::string& w) {
        if (!out.empty()) out += ' ';
        out += w;
    };
    const auto& filler = filler_words();
    add(filler[rng.index(filler.size())]);
    add(filler[rng.index(filler.size())]);
    const auto& polar = direction > 0 ? positive_words() : negative_words();
    for (std::size_t i = 0; i < polar_words; ++i) add(polar[rng.index(kWords)]);
    add(filler[rng.index(filler.size())]);
    return out;
}

// Picked on the fixture: the patch transformers overfit the regression
// target at higher rates, tPatchGNN needs more to separate the classes.
double learning_rate(models::Arch arch) {
    switch (arch) {
        case models::Arch::patchtst: return 0.001;
        case models::Arch::timesnet: return 0.002;
        default: return 0.005;
    }
}

std::string two_digits(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

}  // namespace

std::vector<SynthLexicon> synth_lexicons() {
    auto pick = [](const std::vector<std::string>& words, std::vector<std::size_t> idx) {
        std::vector<std::string> out;
        for (auto i : idx) out.push_back(words[i]);
        return out;
    };
    std::vector<std::size_t> a, b, c;
    for (std::size_t i = 0; i < 8; ++i) a.push_back(i);
    for (std::size_t i = 4; i < 12; ++i) b.push_back(i);
    for (std::size_t i : {0, 1, 2, 3, 8, 9, 10, 11}) c.push_back(i);
    return {
        {"finbert", pick(positive_words(), a), pick(negative_words(), a)},
        {"roberta", pick(positive_words(), b), pick(negative_words(), b)},
        {"deberta", pick(positive_words(), c), pick(negative_words(), c)},
    };
}

fs::path write_fixture(const fs::path& dir, const SynthOptions& opts) {
    if (opts.tickers.empty() || opts.trading_days < 60) throw ValidationError("synth: need tickers and >= 60 days");
    Rng rng(opts.seed);
    const Date start = Date::parse(opts.start);

    std::vector<Date> days;
    for (Date d = start; days.size() < opts.trading_days; d = d.plus_days(1))
        if (!d.is_weekend()) days.push_back(d);

    const ingestion::RawStore store(dir / "input");
    for (std::size_t t = 0; t < opts.tickers.size(); ++t) {
        const auto& ticker = opts.tickers[t];
        std::vector<ingestion::PriceBar> bars;
        std::vector<ingestion::NewsItem> news;
        double close = 50.0 + 50.0 * rng.uniform();
        int direction = rng.uniform() < 0.5 ? 1 : -1;
        for (std::size_t i = 0; i < days.size(); ++i) {
            // Later tickers miss the odd day, exercising forward fill.
            if (t > 0 && i > 0 && i + 1 < days.size() && rng.uniform() < 0.02) {
                direction = rng.uniform() < 0.5 ? 1 : -1;
                continue;
            }
            const auto volume = static_cast<std::int64_t>(1e6 * (1.0 + rng.uniform()));
            bars.push_back({ticker, days[i], std::round(close * 100.0) / 100.0, volume});
            // Today's news carries today's direction; tomorrow's close follows it.
            direction = rng.uniform() < 0.5 ? 1 : -1;
            const std::size_t n = 2 + rng.index(4);
            for (std::size_t k = 0; k < n; ++k) {
                const int secs = 13 * 3600 + 1800 + static_cast<int>(rng.index(5 * 3600 + 1800));
                const auto ts = Timestamp::parse(days[i].to_string() + "T" + two_digits(secs / 3600) + ":" +
                                                 two_digits(secs / 60 % 60) + ":" + two_digits(secs % 60) + "Z");
                news.push_back({ticker + "-" + std::to_string(news.size()), ticker, ts,
                                headline(rng, direction, 1 + rng.index(2))});
            }
            close *= 1.0 + direction * rng.uniform(0.005, 0.02);
        }
        store.save_prices(ticker, bars);
        store.save_news(ticker, news);
    }

    std::vector<sentiment::LabeledHeadline> corpus;
    for (std::size_t i = 0; i < opts.corpus_size; ++i) {
        const double u = rng.uniform();
        sentiment::LabeledHeadline row;
        if (u < 0.25) {
            row.gold = sentiment::Label::neutral;
            row.text = headline(rng, 1, 0);
        } else {
            const int dir = u < 0.625 ? 1 : -1;
            row.gold = dir > 0 ? sentiment::Label::positive : sentiment::Label::negative;
            row.text = headline(rng, dir, 1);
        }
        if (rng.uniform() < opts.corpus_label_noise)
            row.gold = sentiment::kLabels[rng.index(sentiment::kLabels.size())];
        corpus.push_back(std::move(row));
    }
    sentiment::write_labeled_csv(dir / "corpus.csv", corpus);

    using nlohmann::json;
    json cfg;
    cfg["tickers"] = opts.tickers;
    cfg["start"] = days.front().to_string();
    cfg["end"] = days.back().to_string();
    cfg["seed"] = opts.seed;
    cfg["workers"] = opts.workers;
    cfg["output_dir"] = "out";
    cfg["sources"]["prices"] = {{"kind", "store"}, {"path", "input"}};
    cfg["sources"]["news"] = {{"kind", "store"}, {"path", "input"}};
    cfg["backends"] = json::array();
    for (const auto& lex : synth_lexicons())
        cfg["backends"].push_back(
            {{"id", lex.id}, {"kind", "lexicon"}, {"positive", lex.positive}, {"negative", lex.negative}});
    cfg["labeled_corpus"] = "corpus.csv";
    cfg["stacking"] = {{"kinds", {"lr", "rf", "svm"}}, {"backend_order", {"finbert", "roberta", "deberta"}}};
    for (auto arch : opts.archs) {
        json m = {{"hidden_dim", opts.hidden_dim}, {"num_layers", 1}, {"epochs", opts.epochs},
                  {"learning_rate", learning_rate(arch)}, {"batch_size", 16}};
        if (models::uses_patches(arch)) {
            m["patch_len"] = 8;
            m["patch_stride"] = 4;
        }
        if (arch == models::Arch::patchtst || arch == models::Arch::tpatchgnn) m["num_heads"] = 2;
        if (arch == models::Arch::timesnet) m["top_k_periods"] = 2;
        cfg["models"][models::to_string(arch)] = m;
    }
    std::vector<std::string> archs, tasks;
    for (auto a : opts.archs) archs.push_back(models::to_string(a));
    for (auto t : opts.tasks) tasks.push_back(models::to_string(t));
    cfg["experiment"] = {{"sources", opts.sources}, {"archs", archs}, {"tasks", tasks}, {"num_seeds", opts.num_seeds}};
    if (opts.ablation)
        cfg["ablation"] = {{"sources", {"finbert"}},
                           {"archs", {"lstm"}},
                           {"tasks", {"classification"}},
                           {"num_seeds", opts.num_seeds}};

    fs::create_directories(dir);
    const auto path = dir / "config.json";
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << cfg.dump(2) << '\n';
    return path;
}

}  // namespace sentiflow::pipeline
