#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "fake_transport.hpp"
#include "sentiflow/common/error.hpp"
#include "sentiflow/common/rng.hpp"
#include "sentiflow/sentiment/backend.hpp"
#include "sentiflow/sentiment/corpus.hpp"
#include "sentiflow/sentiment/evaluation.hpp"

using namespace sentiflow;
using namespace sentiflow::sentiment;
namespace fs = std::filesystem;

namespace {

// Local model server: label from keywords, "boom" answers 500.
class ModelServer {
public:
    ModelServer() {
        server_.Post("/classify", [this](const httplib::Request& req, httplib::Response& res) {
            const int now = ++in_flight_;
            int seen = peak_.load();
            while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            const auto text = nlohmann::json::parse(req.body).at("text").get<std::string>();
            --in_flight_;
            if (text.find("boom") != std::string::npos) {
                res.status = 500;
                return;
            }
            const std::string label = text.find("up") != std::string::npos     ? "POSITIVE"
                                      : text.find("down") != std::string::npos ? "Negative"
                                                                               : "neutral";
            res.set_content(nlohmann::json{{"label", label}, {"score", 0.75}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~ModelServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/classify"; }
    int peak() const { return peak_.load(); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> in_flight_{0}, peak_{0};
};

fs::path temp_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("sentiflow_sentiment_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("label parsing") {
    CHECK(parse_label("Positive") == Label::positive);
    CHECK(parse_label("NEU") == Label::neutral);
    CHECK(parse_label("neg") == Label::negative);
    CHECK_THROWS_AS(parse_label("bullish"), FormatError);
    CHECK(to_string(Label::neutral) == "neutral");
}

TEST_CASE("lexicon backend") {
    const LexiconBackend b("lex", {"gain", "beat"}, {"loss", "miss"});
    const auto pos = classify("Shares GAIN after earnings beat", b);
    CHECK(pos.label == Label::positive);
    CHECK(pos.confidence == 1.0);
    CHECK(pos.backend_id == "lex");
    const auto none = classify("Board meets on Tuesday", b);
    CHECK(none.label == Label::neutral);
    CHECK(none.confidence == 1.0);
    const auto mixed = classify("gain gain loss", b);
    CHECK(mixed.label == Label::positive);
    CHECK(mixed.confidence == doctest::Approx(1.0 / 3.0));
    const auto tie = classify("gain, loss", b);
    CHECK(tie.label == Label::neutral);
    CHECK(tie.confidence == 0.0);
    CHECK(classify("gain loss miss", b) == classify("gain loss miss", b));
    CHECK_THROWS_AS(classify("   ", b), ValidationError);
    CHECK_THROWS_AS(LexiconBackend("x", {"a"}, {"A"}), ValidationError);

    const LexiconBackend builtin;
    const auto& p = LexiconBackend::default_positive();
    REQUIRE_FALSE(p.empty());
    CHECK(classify(p.front(), builtin).label == Label::positive);
    CHECK(classify(LexiconBackend::default_negative().front(), builtin).label == Label::negative);
}

TEST_CASE("classify_corpus preserves order") {
    const LexiconBackend b("lex", {"up"}, {"down"});
    CHECK(classify_corpus({}, b).predictions.empty());
    std::vector<std::string> items;
    Rng rng(2);
    for (int i = 0; i < 300; ++i) items.push_back(rng.uniform() < 0.5 ? "up " + std::to_string(i) : "down");
    const auto r = classify_corpus(items, b);
    REQUIRE(r.predictions.size() == items.size());
    CHECK(r.failures.empty());
    for (std::size_t i = 0; i < items.size(); ++i)
        CHECK(r.predictions[i]->label == (items[i][0] == 'u' ? Label::positive : Label::negative));
}

TEST_CASE("remote backend against a local server") {
    ModelServer server;
    auto transport = std::make_shared<http::HttplibTransport>(std::chrono::seconds{5});
    const RemoteBackend b("remote", server.url(), transport, 3);

    const auto p = classify("shares up", b);
    CHECK(p.label == Label::positive);
    CHECK(p.confidence == 0.75);
    CHECK(p.backend_id == "remote");

    const std::vector<std::string> items = {"going up", "boom", "going down"};
    const auto r = classify_corpus(items, b);
    CHECK(r.succeeded() == 2);
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0].index == 1);
    CHECK(r.failures[0].message.find("500") != std::string::npos);
    CHECK(r.predictions[2]->label == Label::negative);

    std::vector<std::string> many(24, "flat");
    const auto all = classify_corpus(many, b);
    CHECK(all.succeeded() == 24);
    CHECK(server.peak() <= 3);
}

TEST_CASE("remote backend failures") {
    auto unreachable = std::make_shared<http::HttplibTransport>(std::chrono::seconds{1});
    const RemoteBackend dead("dead", "http://127.0.0.1:1/classify", unreachable, 1);
    CHECK_THROWS_AS(dead.classify("x"), TransportError);

    auto fake = std::make_shared<testutil::FakeTransport>();
    fake->push(200, R"({"label": "positive"})");
    fake->push(200, R"({"label": "positive", "score": 1.5})");
    fake->push(200, R"({"label": "great", "score": 0.5})");
    const RemoteBackend b("fake", "http://fake/classify", fake, 1);
    CHECK_THROWS_AS(b.classify("x"), FormatError);
    CHECK_THROWS_AS(classify("x", b), ValidationError);
    CHECK_THROWS_AS(b.classify("x"), FormatError);
    CHECK(nlohmann::json::parse(fake->posted[0]) == nlohmann::json{{"text", "x"}});
}

TEST_CASE("evaluate_backend") {
    const std::vector<Label> gold = {Label::positive, Label::positive, Label::negative, Label::neutral};
    const auto perfect = evaluate_backend(gold, gold);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);

    const std::vector<Label> pred = {Label::positive, Label::negative, Label::negative, Label::neutral};
    const auto r = evaluate_backend(pred, gold);
    CHECK(r.accuracy == 0.75);
    std::size_t off = 0;
    for (int g = 0; g < 3; ++g)
        for (int p = 0; p < 3; ++p)
            if (g != p) off += r.confusion[g][p];
    CHECK(off == 1);
    CHECK(r.confusion[index(Label::positive)][index(Label::negative)] == 1);
    // Hand oracle: per-class P/R/F1 and supports (neg 1, neu 1, pos 2).
    // neg: P 1/2 R 1 F1 2/3; neu: 1 1 1; pos: P 1 R 1/2 F1 2/3.
    CHECK(r.precision == doctest::Approx((0.5 + 1 + 2 * 1) / 4));
    CHECK(r.recall == doctest::Approx((1 + 1 + 2 * 0.5) / 4));
    CHECK(r.f1 == doctest::Approx((2.0 / 3 + 1 + 2 * (2.0 / 3)) / 4));
    CHECK(r.macro_f1 == doctest::Approx((2.0 / 3 + 1 + 2.0 / 3) / 3));
    CHECK_THROWS_AS(evaluate_backend(std::vector<Label>{Label::neutral}, gold), ValidationError);
}

TEST_CASE("accuracy is the confusion trace over the total") {
    Rng rng(4);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + rng.index(60);
        std::vector<Label> g, p;
        for (std::size_t i = 0; i < n; ++i) {
            g.push_back(label_from_index(static_cast<int>(rng.index(3))));
            p.push_back(label_from_index(static_cast<int>(rng.index(3))));
        }
        const auto r = evaluate_backend(p, g);
        std::size_t trace = 0, total = 0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                total += r.confusion[a][b];
                if (a == b) trace += r.confusion[a][b];
            }
        CHECK(total == n);
        CHECK(r.accuracy == static_cast<double>(trace) / static_cast<double>(total));
    }
}

TEST_CASE("agreement regions") {
    const std::vector<Label> gold(5, Label::positive);
    {
        const std::vector<NamedPredictions> one = {{"a", gold}};
        const auto r = agreement_regions(gold, one);
        CHECK(r.counts[index(Label::positive)][1] == 5);
        CHECK(r.class_size[index(Label::positive)] == 5);
    }
    {
        const std::vector<Label> left = {Label::positive, Label::positive, Label::neutral, Label::neutral, Label::neutral};
        const std::vector<Label> right = {Label::neutral, Label::neutral, Label::positive, Label::positive,
                                          Label::neutral};
        const std::vector<NamedPredictions> two = {{"a", left}, {"b", right}};
        const auto r = agreement_regions(gold, two);
        const auto& c = r.counts[index(Label::positive)];
        CHECK(c[1] == 2);
        CHECK(c[2] == 2);
        CHECK(c[3] == 0);
        CHECK(c[0] == 1);
    }
}

TEST_CASE("agreement regions match brute-force set intersections") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 10;
        std::vector<Label> gold;
        std::vector<NamedPredictions> by(3);
        for (std::size_t b = 0; b < 3; ++b) by[b].backend_id = "b" + std::to_string(b);
        for (std::size_t i = 0; i < n; ++i) {
            gold.push_back(label_from_index(static_cast<int>(rng.index(3))));
            for (auto& b : by) b.labels.push_back(label_from_index(static_cast<int>(rng.index(3))));
        }
        const auto r = agreement_regions(gold, by);
        for (auto cls : kLabels) {
            // correct sets per backend
            std::vector<std::set<std::size_t>> correct(3);
            std::set<std::size_t> members;
            for (std::size_t i = 0; i < n; ++i) {
                if (gold[i] != cls) continue;
                members.insert(i);
                for (std::size_t b = 0; b < 3; ++b)
                    if (by[b].labels[i] == cls) correct[b].insert(i);
            }
            std::size_t total = 0;
            for (std::size_t mask = 0; mask < 8; ++mask) {
                std::size_t expect = 0;
                for (auto i : members) {
                    bool in = true;
                    for (std::size_t b = 0; b < 3; ++b) in = in && (correct[b].count(i) == ((mask >> b) & 1));
                    expect += in;
                }
                CHECK(r.counts[index(cls)][mask] == expect);
                total += r.counts[index(cls)][mask];
            }
            CHECK(total == members.size());
            CHECK(r.class_size[index(cls)] == members.size());
        }
    }
}

TEST_CASE("labeled corpus loading reduces entity labels") {
    CHECK(reduce_entity_labels("positive") == Label::positive);
    CHECK(reduce_entity_labels(R"({"Apple": "positive", "Samsung": "negative"})") == Label::neutral);
    CHECK(reduce_entity_labels(R"({"A": "negative", "B": "negative", "C": "positive"})") == Label::negative);
    CHECK_THROWS(reduce_entity_labels("{}"));

    const auto dir = temp_dir("corpus");
    {
        std::ofstream out(dir / "c.csv");
        out << "id,text,label\n1,\"Apple, Samsung clash\",\"{\"\"Apple\"\": \"\"positive\"\", \"\"Samsung\"\": "
               "\"\"negative\"\"}\"\n2,Shares rise,pos\n";
    }
    const auto rows = load_labeled_csv(dir / "c.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].text == "Apple, Samsung clash");
    CHECK(rows[0].gold == Label::neutral);
    CHECK(rows[1].gold == Label::positive);
    {
        std::ofstream out(dir / "bad.csv");
        out << "headline,sentiment\nx,pos\n";
    }
    CHECK_THROWS_AS(load_labeled_csv(dir / "bad.csv"), FormatError);
    fs::remove_all(dir);
}

TEST_CASE("prediction dumps round trip") {
    const auto dir = temp_dir("dump");
    const std::vector<PredictionRecord> recs = {{"a", {Label::positive, 0.9, "finbert"}},
                                                {"b \"quoted\"", {Label::neutral, 1.0, "finbert"}}};
    write_predictions(dir / "p.jsonl", recs);
    CHECK(read_predictions(dir / "p.jsonl") == recs);
    std::ifstream in(dir / "p.jsonl");
    std::string line;
    std::getline(in, line);
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("backend_id") == "finbert");
    CHECK(j.at("label") == "positive");
    fs::remove_all(dir);
}
