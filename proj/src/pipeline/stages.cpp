#include "sentiflow/pipeline/stages.hpp"

#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "sentiflow/aggregation/daily.hpp"
#include "sentiflow/common/csv.hpp"
#include "sentiflow/common/error.hpp"
#include "sentiflow/common/text.hpp"
#include "sentiflow/dataset/dataset.hpp"
#include "sentiflow/ensemble/stacker.hpp"
#include "sentiflow/experiments/plots.hpp"
#include "sentiflow/experiments/report.hpp"
#include "sentiflow/experiments/runner.hpp"
#include "sentiflow/ingestion/align.hpp"
#include "sentiflow/ingestion/sources.hpp"
#include "sentiflow/ingestion/store.hpp"
#include "sentiflow/sentiment/backend.hpp"
#include "sentiflow/sentiment/corpus.hpp"
#include "sentiflow/sentiment/evaluation.hpp"

namespace sentiflow::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void say(const StageOptions& opts, const std::string& msg) {
    if (opts.log) *opts.log << msg << '\n';
}

std::shared_ptr<http::Transport> transport_of(const StageOptions& opts) {
    return opts.transport ? opts.transport : std::make_shared<http::HttplibTransport>();
}

std::size_t workers_of(const RunConfig& cfg, const StageOptions& opts) {
    return opts.workers ? opts.workers : cfg.workers;
}

void write_text(const fs::path& p, const std::string& data) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << data;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw Error("cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("malformed " + p.string() + ": " + e.what());
    }
}

// Stage stamps record the config hash that produced a stage's outputs.
std::optional<std::string> stamp_hash(const Layout& layout, const std::string& stage) {
    const auto p = layout.stamp(stage);
    if (!fs::exists(p)) return std::nullopt;
    return read_json(p).at("config_hash").get<std::string>();
}

bool up_to_date(const RunConfig& cfg, const Layout& layout, const std::string& stage, const StageOptions& opts) {
    if (opts.force) return false;
    const auto h = stamp_hash(layout, stage);
    return h && *h == cfg.hash();
}

void write_stamp(const RunConfig& cfg, const Layout& layout, const std::string& stage,
                 const std::vector<fs::path>& outputs) {
    json j;
    j["stage"] = stage;
    j["config_hash"] = cfg.hash();
    std::vector<std::string> rel;
    for (const auto& p : outputs) rel.push_back(fs::relative(p, layout.root()).generic_string());
    j["outputs"] = rel;
    write_text(layout.stamp(stage), j.dump(2) + "\n");
}

void require(const RunConfig& cfg, const Layout& layout, const std::string& needed, const std::string& artifact) {
    const auto h = stamp_hash(layout, needed);
    if (!h)
        throw Error("missing " + artifact + " (" + layout.stamp(needed).string() + " not found); run the '" + needed +
                    "' stage first");
    if (*h != cfg.hash())
        throw Error(artifact + " was produced by config " + *h + " but the current config is " + cfg.hash() +
                    "; rerun the '" + needed + "' stage");
}

// Sidecar provenance for artifacts whose formats have no room for it.
fs::path write_provenance(const RunConfig& cfg, const fs::path& dir, const std::string& stage) {
    json j;
    j["stage"] = stage;
    j["config_hash"] = cfg.hash();
    const auto p = dir / "provenance.json";
    write_text(p, j.dump(2) + "\n");
    return p;
}

std::vector<std::unique_ptr<sentiment::Backend>> make_backends(const RunConfig& cfg, const StageOptions& opts) {
    std::vector<std::unique_ptr<sentiment::Backend>> out;
    for (const auto& b : cfg.backends) {
        if (b.kind == "lexicon") {
            if (b.positive.empty())
                out.push_back(std::make_unique<sentiment::LexiconBackend>(b.id));
            else
                out.push_back(std::make_unique<sentiment::LexiconBackend>(b.id, b.positive, b.negative));
        } else {
            out.push_back(std::make_unique<sentiment::RemoteBackend>(b.id, b.url, transport_of(opts), b.max_in_flight));
        }
    }
    return out;
}

json regions_to_json(const sentiment::AgreementRegions& r, const std::string& hash) {
    json j;
    j["config_hash"] = hash;
    j["backends"] = r.backends;
    for (auto cls : sentiment::kLabels) {
        const auto c = sentiment::to_string(cls);
        j["counts"][c] = r.counts[sentiment::index(cls)];
        j["class_size"][c] = r.class_size[sentiment::index(cls)];
    }
    return j;
}

sentiment::AgreementRegions regions_from_json(const json& j) {
    sentiment::AgreementRegions r;
    r.backends = j.at("backends").get<std::vector<std::string>>();
    for (auto cls : sentiment::kLabels) {
        const auto c = sentiment::to_string(cls);
        r.counts[sentiment::index(cls)] = j.at("counts").at(c).get<std::vector<std::size_t>>();
        r.class_size[sentiment::index(cls)] = j.at("class_size").at(c).get<std::size_t>();
    }
    return r;
}

struct ScoreRow {
    std::string model;
    sentiment::ClassificationReport report;
};

std::string score_table_text(const std::vector<ScoreRow>& rows, const std::string& hash) {
    std::ostringstream out;
    char buf[160];
    out << "config " << hash << '\n';
    std::snprintf(buf, sizeof buf, "%-20s %9s %10s %7s %9s\n", "Model", "Accuracy", "Precision", "Recall", "F1-Score");
    out << buf << std::string(59, '-') << '\n';
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-20s %9.3f %10.3f %7.3f %9.3f\n", r.model.c_str(), r.report.accuracy,
                      r.report.precision, r.report.recall, r.report.f1);
        out << buf;
    }
    return out.str();
}

std::string score_table_csv(const std::vector<ScoreRow>& rows) {
    std::ostringstream out;
    out << "model,accuracy,precision,recall,f1,macro_precision,macro_recall,macro_f1\n";
    for (const auto& r : rows)
        out << csv::escape(r.model) << ',' << format_double(r.report.accuracy) << ','
            << format_double(r.report.precision) << ',' << format_double(r.report.recall) << ','
            << format_double(r.report.f1) << ',' << format_double(r.report.macro_precision) << ','
            << format_double(r.report.macro_recall) << ',' << format_double(r.report.macro_f1) << '\n';
    return out.str();
}

std::string backend_label(const std::string& id) {
    if (id == "lr") return "Logistic Regression";
    if (id == "rf") return "Random Forest";
    return experiments::source_label(id);
}

std::map<std::string, sentiment::SentimentPrediction> predictions_by_id(const fs::path& p) {
    std::map<std::string, sentiment::SentimentPrediction> out;
    for (auto& r : sentiment::read_predictions(p)) out.emplace(r.id, r.prediction);
    return out;
}

std::set<std::string> needed_sources(const RunConfig& cfg) {
    std::set<std::string> s(cfg.experiment.sources.begin(), cfg.experiment.sources.end());
    if (cfg.ablation) s.insert(cfg.ablation->sources.begin(), cfg.ablation->sources.end());
    return s;
}

bool is_stacker(const RunConfig& cfg, const std::string& source) {
    const auto ids = cfg.stacker_ids();
    return std::find(ids.begin(), ids.end(), source) != ids.end();
}

}  // namespace

StageResult cmd_ingest(const RunConfig& cfg, const StageOptions& opts) {
    const Layout layout(cfg.output_dir);
    StageResult res{"ingest", false, {}};
    if (up_to_date(cfg, layout, "ingest", opts)) return {"ingest", true, {}};

    std::unique_ptr<ingestion::PriceSource> prices;
    if (cfg.prices.kind == "store")
        prices = std::make_unique<ingestion::StorePriceSource>(cfg.prices.path);
    else if (cfg.prices.base_url.empty())
        prices = std::make_unique<ingestion::YahooChartSource>(transport_of(opts));
    else
        prices = std::make_unique<ingestion::YahooChartSource>(transport_of(opts), cfg.prices.base_url);

    std::unique_ptr<ingestion::NewsSource> news;
    if (cfg.news.kind == "store") {
        news = std::make_unique<ingestion::StoreNewsSource>(cfg.news.path);
    } else {
        const auto key = ingestion::AlphaVantageNewsSource::api_key_from_env();
        if (cfg.news.base_url.empty())
            news = std::make_unique<ingestion::AlphaVantageNewsSource>(transport_of(opts), key, cfg.news.rate_limit);
        else
            news = std::make_unique<ingestion::AlphaVantageNewsSource>(transport_of(opts), key, cfg.news.rate_limit,
                                                                       http::real_sleeper(), cfg.news.base_url);
    }

    const ingestion::RawStore store(layout.raw());
    for (const auto& t : cfg.tickers) {
        const auto bars = ingestion::fetch_prices(t, cfg.start, cfg.end, *prices, &store);
        const auto items = ingestion::fetch_news(t, cfg.start, cfg.end, *news, &store);
        say(opts, "ingest: " + t + ": " + std::to_string(bars.size()) + " bars, " + std::to_string(items.items.size()) +
                      " news items (" + std::to_string(items.duplicates) + " duplicates, " +
                      std::to_string(items.skipped) + " malformed dropped)");
        res.outputs.push_back(store.prices_path(t));
        res.outputs.push_back(store.news_path(t));
    }
    res.outputs.push_back(write_provenance(cfg, layout.raw(), "ingest"));
    write_stamp(cfg, layout, "ingest", res.outputs);
    return res;
}

StageResult cmd_sentiment(const RunConfig& cfg, const StageOptions& opts) {
    const Layout layout(cfg.output_dir);
    if (up_to_date(cfg, layout, "sentiment", opts)) return {"sentiment", true, {}};
    require(cfg, layout, "ingest", "raw news store");
    StageResult res{"sentiment", false, {}};
    const auto backends = make_backends(cfg, opts);
    const ingestion::RawStore store(layout.raw());

    for (const auto& t : cfg.tickers) {
        const auto items = store.load_news(t);
        std::vector<std::string> texts;
        for (const auto& it : items) texts.push_back(it.headline);
        for (const auto& b : backends) {
            const auto result = sentiment::classify_corpus(texts, *b);
            std::vector<sentiment::PredictionRecord> recs;
            for (std::size_t i = 0; i < items.size(); ++i)
                if (result.predictions[i]) recs.push_back({items[i].id, *result.predictions[i]});
            if (!result.failures.empty())
                say(opts, "sentiment: " + b->id() + " failed on " + std::to_string(result.failures.size()) + " of " +
                              std::to_string(items.size()) + " " + t + " headlines (first: " +
                              result.failures.front().message + ")");
            const auto p = layout.news_predictions(b->id(), t);
            sentiment::write_predictions(p, recs);
            res.outputs.push_back(p);
        }
    }

    if (cfg.labeled_corpus) {
        const auto corpus = sentiment::load_labeled_csv(*cfg.labeled_corpus);
        std::vector<std::string> texts;
        std::vector<sentiment::Label> gold;
        for (const auto& row : corpus) {
            texts.push_back(row.text);
            gold.push_back(row.gold);
        }
        std::vector<std::vector<std::optional<sentiment::SentimentPrediction>>> all;
        for (const auto& b : backends) {
            auto result = sentiment::classify_corpus(texts, *b);
            std::vector<sentiment::PredictionRecord> recs;
            for (std::size_t i = 0; i < texts.size(); ++i)
                if (result.predictions[i]) recs.push_back({std::to_string(i), *result.predictions[i]});
            const auto p = layout.corpus_predictions(b->id());
            sentiment::write_predictions(p, recs);
            res.outputs.push_back(p);
            all.push_back(std::move(result.predictions));
        }
        // Evaluate on the items every backend classified.
        std::vector<std::size_t> common;
        for (std::size_t i = 0; i < texts.size(); ++i) {
            bool ok = true;
            for (const auto& preds : all) ok = ok && preds[i].has_value();
            if (ok) common.push_back(i);
        }
        if (common.empty()) throw Error("no labeled headline was classified by every backend");
        std::vector<sentiment::Label> g;
        for (auto i : common) g.push_back(gold[i]);
        std::vector<ScoreRow> rows;
        std::vector<sentiment::NamedPredictions> named;
        for (std::size_t b = 0; b < backends.size(); ++b) {
            sentiment::NamedPredictions np{backends[b]->id(), {}};
            for (auto i : common) np.labels.push_back(all[b][i]->label);
            rows.push_back({backend_label(np.backend_id), sentiment::evaluate_backend(np.labels, g)});
            named.push_back(std::move(np));
        }
        write_text(layout.sentiment_dir() / "evaluation.txt", score_table_text(rows, cfg.hash()));
        write_text(layout.sentiment_dir() / "evaluation.csv", score_table_csv(rows));
        write_text(layout.agreement(), regions_to_json(sentiment::agreement_regions(g, named), cfg.hash()).dump(2) + "\n");
        res.outputs.push_back(layout.sentiment_dir() / "evaluation.txt");
        res.outputs.push_back(layout.sentiment_dir() / "evaluation.csv");
        res.outputs.push_back(layout.agreement());
    }
    res.outputs.push_back(write_provenance(cfg, layout.sentiment_dir(), "sentiment"));
    write_stamp(cfg, layout, "sentiment", res.outputs);
    return res;
}

StageResult cmd_stack(const RunConfig& cfg, const StageOptions& opts) {
    const Layout layout(cfg.output_dir);
    if (up_to_date(cfg, layout, "stack", opts)) return {"stack", true, {}};
    require(cfg, layout, "sentiment", "sentiment prediction dumps");
    StageResult res{"stack", false, {}};
    if (cfg.stacking.kinds.empty()) {
        say(opts, "stack: no stackers configured");
        write_stamp(cfg, layout, "stack", {});
        return res;
    }
    if (!cfg.labeled_corpus) throw Error("stacking needs labeled_corpus in the config");
    const auto corpus = sentiment::load_labeled_csv(*cfg.labeled_corpus);
    const ensemble::StackSchema schema{cfg.stacking.backend_order, cfg.stacking.include_confidence};

    std::vector<std::map<std::string, sentiment::SentimentPrediction>> base;
    for (const auto& id : schema.backend_order) {
        const auto p = layout.corpus_predictions(id);
        if (!fs::exists(p)) throw Error("missing corpus predictions " + p.string() + "; rerun the 'sentiment' stage");
        base.push_back(predictions_by_id(p));
    }
    std::vector<ensemble::StackedFeatures> x;
    std::vector<sentiment::Label> y;
    std::vector<std::vector<sentiment::Label>> base_labels(base.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        std::vector<sentiment::SentimentPrediction> preds;
        for (const auto& m : base) {
            auto it = m.find(std::to_string(i));
            if (it == m.end()) break;
            preds.push_back(it->second);
        }
        if (preds.size() != base.size()) continue;
        x.push_back(ensemble::encode_stack(preds, schema));
        y.push_back(corpus[i].gold);
        for (std::size_t b = 0; b < base.size(); ++b) base_labels[b].push_back(preds[b].label);
    }

    ensemble::StackerParams params;
    params.seed = cfg.seed;
    std::vector<ScoreRow> rows;
    std::vector<ensemble::TrainedStacker> stackers;
    std::vector<std::size_t> test_idx;
    for (auto kind : cfg.stacking.kinds) {
        auto r = ensemble::train_stacker(x, y, kind, cfg.stacking.train_fraction, schema, params);
        test_idx = r.test_indices;
        const auto p = layout.stacker(ensemble::to_string(kind));
        r.stacker.save(p);
        res.outputs.push_back(p);
        rows.push_back({backend_label(ensemble::to_string(kind)), r.held_out});
        stackers.push_back(std::move(r.stacker));
    }
    // Base backends scored on the same held-out split, listed first.
    std::vector<sentiment::Label> gold_test;
    for (auto i : test_idx) gold_test.push_back(y[i]);
    std::vector<ScoreRow> base_rows;
    for (std::size_t b = 0; b < base.size(); ++b) {
        std::vector<sentiment::Label> pred;
        for (auto i : test_idx) pred.push_back(base_labels[b][i]);
        base_rows.push_back({backend_label(schema.backend_order[b]), sentiment::evaluate_backend(pred, gold_test)});
    }
    rows.insert(rows.begin(), base_rows.begin(), base_rows.end());
    write_text(layout.stack_dir() / "table1.txt", score_table_text(rows, cfg.hash()));
    write_text(layout.stack_dir() / "table1.csv", score_table_csv(rows));
    res.outputs.push_back(layout.stack_dir() / "table1.txt");
    res.outputs.push_back(layout.stack_dir() / "table1.csv");
    for (const auto& r : rows) say(opts, "stack: " + r.model + " held-out accuracy " + format_double(r.report.accuracy));

    // Stacked predictions on the news of every ticker.
    for (const auto& t : cfg.tickers) {
        std::vector<std::map<std::string, sentiment::SentimentPrediction>> news;
        for (const auto& id : schema.backend_order) news.push_back(predictions_by_id(layout.news_predictions(id, t)));
        std::vector<std::vector<sentiment::PredictionRecord>> out(stackers.size());
        for (const auto& [id, first] : news.front()) {
            std::vector<sentiment::SentimentPrediction> preds = {first};
            for (std::size_t b = 1; b < news.size(); ++b) {
                auto it = news[b].find(id);
                if (it == news[b].end()) break;
                preds.push_back(it->second);
            }
            if (preds.size() != news.size()) continue;
            const auto feats = ensemble::encode_stack(preds, schema);
            for (std::size_t s = 0; s < stackers.size(); ++s)
                out[s].push_back({id, ensemble::predict_stacker(stackers[s], feats)});
        }
        for (std::size_t s = 0; s < stackers.size(); ++s) {
            const auto p = layout.news_predictions(ensemble::to_string(stackers[s].kind()), t);
            sentiment::write_predictions(p, out[s]);
            res.outputs.push_back(p);
        }
    }
    res.outputs.push_back(write_provenance(cfg, layout.stack_dir(), "stack"));
    write_stamp(cfg, layout, "stack", res.outputs);
    return res;
}

StageResult cmd_build(const RunConfig& cfg, const StageOptions& opts) {
    const Layout layout(cfg.output_dir);
    if (up_to_date(cfg, layout, "build", opts)) return {"build", true, {}};
    require(cfg, layout, "ingest", "raw price store");
    require(cfg, layout, "sentiment", "sentiment prediction dumps");
    const auto sources = needed_sources(cfg);
    for (const auto& s : sources)
        if (is_stacker(cfg, s)) {
            require(cfg, layout, "stack", "stacker predictions for '" + s + "'");
            break;
        }
    StageResult res{"build", false, {}};
    const ingestion::RawStore store(layout.raw());

    std::vector<ingestion::PriceBar> all_bars;
    std::map<std::string, std::vector<ingestion::PriceBar>> bars;
    for (const auto& t : cfg.tickers) {
        bars[t] = store.load_prices(t);
        if (bars[t].empty()) throw Error("no stored prices for " + t + "; rerun the 'ingest' stage");
        all_bars.insert(all_bars.end(), bars[t].begin(), bars[t].end());
    }
    const auto calendar = ingestion::TradingCalendar::from_bars(all_bars);

    std::map<std::string, std::set<aggregation::AblationVariant>> variants;
    for (const auto& s : cfg.experiment.sources) variants[s].insert(aggregation::AblationVariant::full);
    if (cfg.ablation)
        for (const auto& s : cfg.ablation->sources)
            if (s != experiments::kNoSentiment)
                variants[s].insert(aggregation::kAllVariants.begin(), aggregation::kAllVariants.end());

    for (const auto& t : cfg.tickers) {
        std::vector<Date> dates;
        for (const auto& d : calendar.dates())
            if (!(d < bars[t].front().date)) dates.push_back(d);
        const ingestion::TradingCalendar cal(dates);
        const auto prices = ingestion::reindex_prices(bars[t], cal);
        std::unordered_map<std::string, Timestamp> published;
        for (const auto& item : store.load_news(t)) published.emplace(item.id, item.published_at);

        for (const auto& [source, vars] : variants) {
            std::vector<aggregation::DailyRow> daily;
            if (source != experiments::kNoSentiment) {
                const auto p = layout.news_predictions(source, t);
                if (!fs::exists(p)) throw Error("missing sentiment predictions " + p.string());
                std::vector<aggregation::DatedPrediction> dated;
                for (const auto& r : sentiment::read_predictions(p)) {
                    auto it = published.find(r.id);
                    if (it == published.end())
                        throw Error("prediction for unknown news item '" + r.id + "' in " + p.string());
                    dated.push_back({it->second, r.prediction});
                }
                daily = aggregation::daily_features(t, cal, dated, cfg.align);
                aggregation::write_daily(layout.daily(source, t), daily);
                res.outputs.push_back(layout.daily(source, t));
            }
            for (auto v : vars) {
                const auto names = source == experiments::kNoSentiment
                                       ? aggregation::market_feature_names()
                                       : aggregation::select_features(v, cfg.features);
                const auto frame = dataset::fuse(prices, daily, names);
                const auto ds = dataset::build_dataset(frame, cfg.window, cfg.split);
                const auto dir = experiments::dataset_dir(layout.datasets(), {t, source, v});
                dataset::save_dataset(dir, ds, cfg.hash());
                res.outputs.push_back(dir);
            }
        }
        say(opts, "build: " + t + ": " + std::to_string(cal.size()) + " trading days");
    }
    write_stamp(cfg, layout, "build", res.outputs);
    return res;
}

namespace {

experiments::ExperimentSpec make_spec(const RunConfig& cfg, const ExperimentConfig& e, models::Task task) {
    experiments::ExperimentSpec spec;
    spec.tickers = cfg.tickers;
    spec.sources = e.sources;
    spec.archs = e.archs;
    spec.task = task;
    spec.seeds = e.seeds;
    spec.model_configs = cfg.models;
    return spec;
}

// Keeps only records produced by the current config so a changed config
// starts from a clean file.
void drop_stale_records(const fs::path& path, const std::string& hash) {
    if (!fs::exists(path)) return;
    const auto records = experiments::read_records(path);
    std::vector<experiments::RunRecord> keep;
    for (const auto& r : records)
        if (r.config_hash == hash) keep.push_back(r);
    if (keep.size() == records.size()) return;
    fs::remove(path);
    for (const auto& r : keep) experiments::append_record(path, r);
}

StageResult run_matrix(const RunConfig& cfg, const StageOptions& opts, const std::string& stage,
                       const ExperimentConfig& e, const fs::path& records, bool ablation) {
    const Layout layout(cfg.output_dir);
    if (up_to_date(cfg, layout, stage, opts)) return {stage, true, {}};
    require(cfg, layout, "build", "windowed datasets");
    if (opts.force)
        fs::remove(records);
    else
        drop_stale_records(records, cfg.hash());
    experiments::RunOptions ro;
    ro.records_path = records;
    ro.artifacts_dir = layout.run_artifacts();
    ro.workers = workers_of(cfg, opts);
    ro.config_hash = cfg.hash();
    std::size_t done = 0;
    ro.on_record = [&](const experiments::RunRecord& r) {
        ++done;
        say(opts, stage + ": " + r.ticker + "/" + r.source + "/" + models::to_string(r.arch) + "/" +
                      aggregation::to_string(r.variant) + " seed " + std::to_string(r.seed) + " done (" +
                      std::to_string(done) + ")");
    };
    const auto resolver = experiments::directory_resolver(layout.datasets());
    for (auto task : e.tasks) {
        const auto spec = make_spec(cfg, e, task);
        const auto summary = ablation ? experiments::ablation_suite(spec, resolver, ro)
                                      : experiments::run_experiment(spec, resolver, ro);
        say(opts, stage + ": " + models::to_string(task) + ": " + std::to_string(summary.trained) + " trained, " +
                      std::to_string(summary.resumed) + " resumed");
    }
    write_stamp(cfg, layout, stage, {records});
    return {stage, false, {records}};
}

}  // namespace

StageResult cmd_run(const RunConfig& cfg, const StageOptions& opts) {
    return run_matrix(cfg, opts, "run", cfg.experiment, Layout(cfg.output_dir).records(), false);
}

StageResult cmd_ablate(const RunConfig& cfg, const StageOptions& opts) {
    if (!cfg.ablation) throw Error("no ablation section in the config");
    return run_matrix(cfg, opts, "ablate", *cfg.ablation, Layout(cfg.output_dir).ablation_records(), true);
}

StageResult cmd_report(const RunConfig& cfg, const StageOptions& opts) {
    const Layout layout(cfg.output_dir);
    if (!fs::exists(layout.records()))
        throw Error("missing run records " + layout.records().string() + "; run the 'run' stage first");
    if (up_to_date(cfg, layout, "report", opts)) return {"report", true, {}};

    const auto records = experiments::read_records(layout.records());
    std::vector<experiments::RunRecord> ablation;
    if (fs::exists(layout.ablation_records())) ablation = experiments::read_records(layout.ablation_records());

    // Refuse to mix artifacts from different configurations.
    std::set<std::string> hashes;
    for (const auto& r : records) hashes.insert(r.config_hash);
    for (const auto& r : ablation) hashes.insert(r.config_hash);
    for (const auto& stage : {"ingest", "sentiment", "build", "run"})
        if (auto h = stamp_hash(layout, stage)) hashes.insert(*h);
    if (fs::exists(layout.agreement())) hashes.insert(read_json(layout.agreement()).at("config_hash").get<std::string>());
    hashes.insert(cfg.hash());
    if (hashes.size() > 1) {
        std::string list;
        for (const auto& h : hashes) list += " " + h;
        if (!opts.force)
            throw Error("artifacts come from different configs:" + list + " (current " + cfg.hash() +
                        "); rerun the stale stages or pass --force");
        say(opts, "report: warning: mixing artifacts from configs" + list);
    }

    StageResult res{"report", false, {}};
    std::vector<experiments::ReportTable> tables;
    std::vector<std::string> warnings;
    auto emit_table = [&](const experiments::ReportTable& t, const std::string& stem) {
        const std::string header = "config " + cfg.hash() + "\n";
        write_text(layout.report_dir() / (stem + ".txt"), header + experiments::to_text(t));
        write_text(layout.report_dir() / (stem + ".csv"), experiments::to_csv(t));
        res.outputs.push_back(layout.report_dir() / (stem + ".txt"));
        res.outputs.push_back(layout.report_dir() / (stem + ".csv"));
        for (const auto& w : t.warnings) warnings.push_back(stem + ": " + w);
        tables.push_back(t);
    };
    for (auto task : {models::Task::classification, models::Task::regression}) {
        const bool present = std::any_of(records.begin(), records.end(), [&](const auto& r) { return r.task == task; });
        if (present) emit_table(experiments::aggregate_report(records, task), "table_" + models::to_string(task));
        const bool abl = std::any_of(ablation.begin(), ablation.end(), [&](const auto& r) { return r.task == task; });
        if (abl) emit_table(experiments::ablation_report(ablation, task), "ablation_" + models::to_string(task));
    }

    std::optional<sentiment::AgreementRegions> regions;
    if (fs::exists(layout.agreement())) regions = regions_from_json(read_json(layout.agreement()));
    for (const auto& p : experiments::emit_plots(layout.report_dir() / "plots", tables, regions ? &*regions : nullptr))
        res.outputs.push_back(p);

    std::string wtext;
    for (const auto& w : warnings) wtext += w + "\n";
    write_text(layout.report_dir() / "warnings.txt", wtext);
    res.outputs.push_back(layout.report_dir() / "warnings.txt");
    if (!warnings.empty()) say(opts, "report: " + std::to_string(warnings.size()) + " blank cells (see warnings.txt)");
    res.outputs.push_back(write_provenance(cfg, layout.report_dir(), "report"));
    write_stamp(cfg, layout, "report", res.outputs);
    return res;
}

StageResult run_stage(const std::string& name, const RunConfig& cfg, const StageOptions& opts) {
    try {
        if (name == "ingest") return cmd_ingest(cfg, opts);
        if (name == "sentiment") return cmd_sentiment(cfg, opts);
        if (name == "stack") return cmd_stack(cfg, opts);
        if (name == "build") return cmd_build(cfg, opts);
        if (name == "run") return cmd_run(cfg, opts);
        if (name == "ablate") return cmd_ablate(cfg, opts);
        if (name == "report") return cmd_report(cfg, opts);
    } catch (const std::exception& e) {
        throw Error(name + ": " + e.what());
    }
    throw ValidationError("unknown stage '" + name + "'");
}

}  // namespace sentiflow::pipeline
