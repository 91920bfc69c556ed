#include "sentiflow/experiments/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include "sentiflow/common/error.hpp"
#include "sentiflow/common/text.hpp"
#include "sentiflow/models/train.hpp"

namespace sentiflow::experiments {

using nlohmann::json;

const std::vector<std::string>& default_sources() {
    static const std::vector<std::string> s = {"finbert", "deberta", "roberta", "lr", "rf", "svm"};
    return s;
}

std::string normalise_source(const std::string& s) {
    const std::string lower = to_lower(s);
    return lower == "ns" ? kNoSentiment : lower;
}

void ExperimentSpec::validate() const {
    std::vector<std::string> errors;
    if (tickers.empty()) errors.emplace_back("no tickers");
    if (sources.empty()) errors.emplace_back("no sources");
    if (archs.empty()) errors.emplace_back("no archs");
    if (seeds.empty()) errors.emplace_back("no seeds");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        errors.emplace_back("duplicate seeds");
    for (models::Arch a : archs)
        if (!model_configs.count(a)) errors.push_back("no model config for " + models::to_string(a));
    if (!errors.empty()) {
        std::string msg = "experiment spec:";
        for (const auto& e : errors) msg += " " + e + ";";
        throw ValidationError(msg);
    }
}

std::vector<std::uint64_t> default_seeds(std::size_t n) {
    std::vector<std::uint64_t> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = i + 1;
    return s;
}

std::string DatasetKey::to_string() const {
    return ticker + "/" + source + "/" + aggregation::to_string(variant);
}

std::filesystem::path dataset_dir(const std::filesystem::path& root, const DatasetKey& key) {
    const bool ns = key.source == kNoSentiment;
    return root / key.ticker / key.source / (ns ? "full" : aggregation::to_string(key.variant));
}

DatasetResolver directory_resolver(const std::filesystem::path& root) {
    struct Cache {
        std::mutex mu;
        std::unordered_map<std::string, std::shared_ptr<const dataset::WindowedDataset>> loaded;
    };
    auto cache = std::make_shared<Cache>();
    return [root, cache](const DatasetKey& key) {
        const auto dir = dataset_dir(root, key);
        std::lock_guard lock(cache->mu);
        auto it = cache->loaded.find(dir.string());
        if (it != cache->loaded.end()) return it->second;
        if (!std::filesystem::exists(dir / "schema.json"))
            throw NoDataError("missing dataset " + key.to_string() + " (expected " + dir.string() + ")");
        auto ds = std::make_shared<const dataset::WindowedDataset>(dataset::load_dataset(dir));
        cache->loaded.emplace(dir.string(), ds);
        return ds;
    };
}

namespace {

json record_to_json(const RunRecord& r) {
    nlohmann::ordered_json j;
    j["ticker"] = r.ticker;
    j["source"] = r.source;
    j["arch"] = models::to_string(r.arch);
    j["task"] = models::to_string(r.task);
    j["variant"] = aggregation::to_string(r.variant);
    j["seed"] = r.seed;
    j["run_hash"] = r.run_hash;
    j["config_hash"] = r.config_hash;
    j["feature_dim"] = r.feature_dim;
    j["best_epoch"] = r.best_epoch;
    j["metrics"] = r.metrics;
    return json::parse(j.dump());
}

RunRecord record_from_json(const json& j) {
    RunRecord r;
    r.ticker = j.at("ticker").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.arch = models::parse_arch(j.at("arch").get<std::string>());
    r.task = models::parse_task(j.at("task").get<std::string>());
    r.variant = aggregation::parse_variant(j.at("variant").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.run_hash = j.at("run_hash").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.feature_dim = j.at("feature_dim").get<std::size_t>();
    r.best_epoch = j.at("best_epoch").get<std::size_t>();
    r.metrics = j.at("metrics").get<MetricMap>();
    return r;
}

struct PlannedRun {
    RunRecord key;
    models::ModelConfig config;
    std::shared_ptr<const dataset::WindowedDataset> data;
};

std::string run_hash(const PlannedRun& p) {
    json j;
    j["ticker"] = p.key.ticker;
    j["source"] = p.key.source;
    j["variant"] = aggregation::to_string(p.key.variant);
    j["model"] = p.config.to_json();
    j["features"] = p.data->feature_names;
    j["length"] = p.data->length;
    j["samples"] = {p.data->train.size(), p.data->val.size(), p.data->test.size()};
    return hex64(fnv1a(j.dump()));
}

RunRecord execute(const PlannedRun& p, const RunOptions& opts) {
    const auto& ds = *p.data;
    auto trained = models::train(models::build_model(p.config, ds.feature_names.size(), ds.length), ds.train, ds.val,
                                 ds.feature_names);
    RunRecord r = p.key;
    r.best_epoch = trained.best_epoch;
    const auto out = models::predict(trained, ds.test);
    if (p.config.task == models::Task::classification)
        r.metrics = classification_metrics(out, ds.test.binary);
    else
        r.metrics = regression_metrics(out, ds.test.factor);
    if (!opts.artifacts_dir.empty()) {
        models::save_checkpoint(opts.artifacts_dir / (r.run_hash + ".json"), trained);
        models::write_history_csv(opts.artifacts_dir / (r.run_hash + "_history.csv"), trained);
    }
    return r;
}

// Cuts a partial last line left by an interrupted append.
void drop_torn_tail(const std::filesystem::path& path) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec || size == 0) return;
    std::ifstream in(path, std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.back() == '\n') return;
    const auto cut = data.find_last_of('\n');
    in.close();
    std::filesystem::resize_file(path, cut == std::string::npos ? 0 : cut + 1);
}

}  // namespace

std::vector<RunRecord> read_records(const std::filesystem::path& path) {
    std::vector<RunRecord> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (trim(line).empty()) continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            // A torn final line from an interrupted run is dropped.
            if (in.peek() == std::char_traits<char>::eof()) break;
            throw FormatError(path.string() + ":" + std::to_string(n) + ": bad run record: " + e.what());
        }
    }
    return out;
}

void append_record(const std::filesystem::path& path, const RunRecord& r) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    drop_torn_tail(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw Error("cannot append to " + path.string());
    out << record_to_json(r).dump() << '\n';
    out.flush();
}

RunSummary run_experiment(const ExperimentSpec& spec, const DatasetResolver& resolve, const RunOptions& opts) {
    spec.validate();
    std::vector<PlannedRun> plan;
    for (const auto& ticker : spec.tickers)
        for (const auto& raw_source : spec.sources) {
            const std::string source = normalise_source(raw_source);
            const auto variant = source == kNoSentiment ? aggregation::AblationVariant::full : spec.variant;
            const auto data = resolve({ticker, source, variant});
            for (models::Arch arch : spec.archs)
                for (std::uint64_t seed : spec.seeds) {
                    PlannedRun p;
                    p.config = spec.model_configs.at(arch);
                    p.config.arch = arch;
                    p.config.task = spec.task;
                    p.config.seed = seed;
                    p.data = data;
                    p.key.ticker = ticker;
                    p.key.source = source;
                    p.key.arch = arch;
                    p.key.task = spec.task;
                    p.key.variant = variant;
                    p.key.seed = seed;
                    p.key.config_hash = opts.config_hash;
                    p.key.feature_dim = data->feature_names.size();
                    p.key.run_hash = run_hash(p);
                    plan.push_back(std::move(p));
                }
        }

    std::unordered_map<std::string, RunRecord> done;
    if (!opts.records_path.empty())
        for (auto& r : read_records(opts.records_path))
            if (r.config_hash == opts.config_hash) done[r.run_hash] = std::move(r);

    RunSummary summary;
    summary.records.resize(plan.size());
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        auto it = done.find(plan[i].key.run_hash);
        if (it != done.end()) {
            summary.records[i] = it->second;
            ++summary.resumed;
        } else {
            todo.push_back(i);
        }
    }

    std::mutex write_mu;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string failure;
    auto worker = [&] {
        while (!failed) {
            const std::size_t k = next++;
            if (k >= todo.size()) return;
            const PlannedRun& p = plan[todo[k]];
            try {
                RunRecord r = execute(p, opts);
                std::lock_guard lock(write_mu);
                if (!opts.records_path.empty()) append_record(opts.records_path, r);
                if (opts.on_record) opts.on_record(r);
                summary.records[todo[k]] = std::move(r);
                ++summary.trained;
            } catch (const std::exception& e) {
                std::lock_guard lock(write_mu);
                if (!failed.exchange(true))
                    failure = "run " + p.key.ticker + "/" + p.key.source + "/" + models::to_string(p.key.arch) +
                              "/seed " + std::to_string(p.key.seed) + ": " + e.what();
            }
        }
    };
    const std::size_t n_workers = std::max<std::size_t>(1, std::min(opts.workers, todo.size()));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed) throw Error(failure);
    return summary;
}

RunSummary ablation_suite(const ExperimentSpec& base, const DatasetResolver& resolve, const RunOptions& opts) {
    if (std::find(base.archs.begin(), base.archs.end(), models::Arch::lstm) == base.archs.end())
        throw ValidationError("ablation suite: the experiment must include the lstm arch");
    ExperimentSpec spec = base;
    spec.sources.clear();
    for (const auto& s : base.sources)
        if (normalise_source(s) != kNoSentiment) spec.sources.push_back(s);
    if (spec.sources.empty()) throw ValidationError("ablation suite: no sentiment sources to ablate");
    RunSummary all;
    for (auto variant : aggregation::kAllVariants) {
        spec.variant = variant;
        auto part = run_experiment(spec, resolve, opts);
        all.trained += part.trained;
        all.resumed += part.resumed;
        all.records.insert(all.records.end(), part.records.begin(), part.records.end());
    }
    return all;
}

}  // namespace sentiflow::experiments
