#include "sentiflow/pipeline/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "sentiflow/common/error.hpp"
#include "sentiflow/common/text.hpp"
#include "sentiflow/experiments/runner.hpp"

namespace sentiflow::pipeline {

using nlohmann::json;

std::string RunConfig::hash() const { return hex64(fnv1a(canonical.dump())); }

std::vector<std::string> RunConfig::backend_ids() const {
    std::vector<std::string> ids;
    for (const auto& b : backends) ids.push_back(b.id);
    return ids;
}

std::vector<std::string> RunConfig::stacker_ids() const {
    std::vector<std::string> ids;
    for (auto k : stacking.kinds) ids.push_back(ensemble::to_string(k));
    return ids;
}

namespace {

// Collects every problem before failing.
class Checker {
public:
    void error(const std::string& path, const std::string& msg) { errors_.push_back(path + ": " + msg); }

    void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
        if (!obj.is_object()) return;
        const std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [k, _] : obj.items())
            if (!allowed.count(k)) error(join(path, k), "unknown key");
    }

    const json* object(const json& parent, const std::string& path, const char* key, bool required) {
        if (!parent.contains(key)) {
            if (required) error(join(path, key), "missing");
            return nullptr;
        }
        const json& v = parent[key];
        if (!v.is_object()) {
            error(join(path, key), "expected an object");
            return nullptr;
        }
        return &v;
    }

    template <typename T>
    std::optional<T> get(const json& parent, const std::string& path, const char* key, bool required) {
        if (!parent.contains(key)) {
            if (required) error(join(path, key), "missing");
            return std::nullopt;
        }
        try {
            return parent[key].get<T>();
        } catch (const json::exception&) {
            error(join(path, key), std::string("expected ") + type_name<T>());
            return std::nullopt;
        }
    }

    template <typename F>
    void guard(const std::string& path, F&& f) {
        try {
            f();
        } catch (const std::exception& e) {
            error(path, e.what());
        }
    }

    void finish() const {
        if (errors_.empty()) return;
        std::string msg = "invalid config (" + std::to_string(errors_.size()) + " problem" +
                          (errors_.size() == 1 ? "" : "s") + "):";
        for (const auto& e : errors_) msg += "\n  " + e;
        throw ValidationError(msg);
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

private:
    template <typename T>
    static const char* type_name() {
        if constexpr (std::is_same_v<T, std::string>) return "a string";
        else if constexpr (std::is_same_v<T, bool>) return "a boolean";
        else if constexpr (std::is_floating_point_v<T>) return "a number";
        else if constexpr (std::is_integral_v<T>) return "an integer";
        else return "a list";
    }

    std::vector<std::string> errors_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::optional<ExperimentConfig> parse_experiment(Checker& c, const json& j, const std::string& path,
                                                 const std::map<models::Arch, models::ModelConfig>& model_cfgs,
                                                 std::uint64_t global_seed) {
    c.allow_keys(j, path, {"sources", "archs", "tasks", "seeds", "num_seeds"});
    ExperimentConfig e;
    if (auto s = c.get<std::vector<std::string>>(j, path, "sources", true)) {
        std::set<std::string> seen;
        for (const auto& src : *s) {
            const auto n = experiments::normalise_source(src);
            if (!seen.insert(n).second) c.error(path + ".sources", "duplicate source '" + src + "'");
            e.sources.push_back(n);
        }
        if (s->empty()) c.error(path + ".sources", "must not be empty");
    }
    if (auto a = c.get<std::vector<std::string>>(j, path, "archs", true)) {
        for (const auto& name : *a) c.guard(path + ".archs", [&] {
            const auto arch = models::parse_arch(name);
            if (!model_cfgs.count(arch)) throw ValidationError("no entry in models for '" + name + "'");
            e.archs.push_back(arch);
        });
        if (a->empty()) c.error(path + ".archs", "must not be empty");
    }
    if (auto t = c.get<std::vector<std::string>>(j, path, "tasks", false)) {
        for (const auto& name : *t) c.guard(path + ".tasks", [&] { e.tasks.push_back(models::parse_task(name)); });
    } else {
        e.tasks = {models::Task::classification};
    }
    const bool has_seeds = j.contains("seeds"), has_num = j.contains("num_seeds");
    if (has_seeds && has_num) c.error(path, "give either seeds or num_seeds, not both");
    if (auto s = c.get<std::vector<std::uint64_t>>(j, path, "seeds", false)) e.seeds = *s;
    std::size_t n = 10;
    if (auto k = c.get<std::size_t>(j, path, "num_seeds", false)) n = *k;
    if (!has_seeds)
        for (std::size_t i = 0; i < n; ++i) e.seeds.push_back(global_seed + i);
    if (e.seeds.empty()) c.error(path + ".seeds", "must not be empty");
    if (std::set<std::uint64_t>(e.seeds.begin(), e.seeds.end()).size() != e.seeds.size())
        c.error(path + ".seeds", "duplicate seeds");
    return e;
}

}  // namespace

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
    Checker c;
    RunConfig cfg;
    cfg.base_dir = base_dir;
    if (!j.is_object()) throw ValidationError("invalid config: top level must be an object");
    c.allow_keys(j, "", {"tickers", "start", "end", "seed", "workers", "output_dir", "sources", "backends",
                         "labeled_corpus", "stacking", "aggregation", "dataset", "models", "experiment", "ablation"});

    if (auto t = c.get<std::vector<std::string>>(j, "", "tickers", true)) {
        cfg.tickers = *t;
        if (t->empty()) c.error("tickers", "must not be empty");
        if (std::set<std::string>(t->begin(), t->end()).size() != t->size()) c.error("tickers", "duplicate ticker");
    }
    if (auto s = c.get<std::string>(j, "", "start", true)) c.guard("start", [&] { cfg.start = Date::parse(*s); });
    if (auto s = c.get<std::string>(j, "", "end", true)) c.guard("end", [&] { cfg.end = Date::parse(*s); });
    if (j.contains("start") && j.contains("end") && cfg.end < cfg.start) c.error("end", "precedes start");
    if (auto s = c.get<std::uint64_t>(j, "", "seed", false)) cfg.seed = *s;
    if (auto w = c.get<std::size_t>(j, "", "workers", false)) {
        if (*w == 0) c.error("workers", "must be positive");
        cfg.workers = std::max<std::size_t>(*w, 1);
    }
    cfg.output_dir = base_dir / "out";
    if (auto o = c.get<std::string>(j, "", "output_dir", false)) cfg.output_dir = resolve(base_dir, *o);

    if (const json* src = c.object(j, "", "sources", true)) {
        c.allow_keys(*src, "sources", {"prices", "news"});
        if (const json* p = c.object(*src, "sources", "prices", true)) {
            c.allow_keys(*p, "sources.prices", {"kind", "path", "base_url"});
            if (auto k = c.get<std::string>(*p, "sources.prices", "kind", true)) {
                cfg.prices.kind = *k;
                if (*k != "store" && *k != "yahoo") c.error("sources.prices.kind", "expected store or yahoo");
            }
            if (auto path = c.get<std::string>(*p, "sources.prices", "path", cfg.prices.kind == "store"))
                cfg.prices.path = resolve(base_dir, *path);
            if (auto u = c.get<std::string>(*p, "sources.prices", "base_url", false)) cfg.prices.base_url = *u;
        }
        if (const json* n = c.object(*src, "sources", "news", true)) {
            c.allow_keys(*n, "sources.news", {"kind", "path", "base_url", "min_interval_ms", "backoff_base_ms",
                                              "max_retries"});
            if (auto k = c.get<std::string>(*n, "sources.news", "kind", true)) {
                cfg.news.kind = *k;
                if (*k != "store" && *k != "alphavantage")
                    c.error("sources.news.kind", "expected store or alphavantage");
            }
            if (auto path = c.get<std::string>(*n, "sources.news", "path", cfg.news.kind == "store"))
                cfg.news.path = resolve(base_dir, *path);
            if (auto u = c.get<std::string>(*n, "sources.news", "base_url", false)) cfg.news.base_url = *u;
            if (auto v = c.get<std::int64_t>(*n, "sources.news", "min_interval_ms", false))
                cfg.news.rate_limit.min_interval = std::chrono::milliseconds(*v);
            if (auto v = c.get<std::int64_t>(*n, "sources.news", "backoff_base_ms", false))
                cfg.news.rate_limit.backoff_base = std::chrono::milliseconds(*v);
            if (auto v = c.get<int>(*n, "sources.news", "max_retries", false)) cfg.news.rate_limit.max_retries = *v;
        }
    }

    if (!j.contains("backends") || !j["backends"].is_array() || j["backends"].empty()) {
        c.error("backends", "expected a non-empty list");
    } else {
        std::set<std::string> ids;
        for (std::size_t i = 0; i < j["backends"].size(); ++i) {
            const json& b = j["backends"][i];
            const std::string path = "backends[" + std::to_string(i) + "]";
            if (!b.is_object()) {
                c.error(path, "expected an object");
                continue;
            }
            c.allow_keys(b, path, {"id", "kind", "positive", "negative", "url", "max_in_flight"});
            BackendConfig bc;
            if (auto id = c.get<std::string>(b, path, "id", true)) {
                bc.id = to_lower(*id);
                if (bc.id == "ns" || bc.id == "lr" || bc.id == "rf" || bc.id == "svm")
                    c.error(path + ".id", "'" + *id + "' is reserved");
                if (!ids.insert(bc.id).second) c.error(path + ".id", "duplicate backend id");
            }
            if (auto k = c.get<std::string>(b, path, "kind", true)) {
                bc.kind = *k;
                if (*k != "lexicon" && *k != "remote") c.error(path + ".kind", "expected lexicon or remote");
            }
            if (auto v = c.get<std::vector<std::string>>(b, path, "positive", false)) bc.positive = *v;
            if (auto v = c.get<std::vector<std::string>>(b, path, "negative", false)) bc.negative = *v;
            if (auto u = c.get<std::string>(b, path, "url", bc.kind == "remote")) bc.url = *u;
            if (auto m = c.get<std::size_t>(b, path, "max_in_flight", false)) bc.max_in_flight = std::max<std::size_t>(*m, 1);
            if (bc.kind == "lexicon" && bc.positive.empty() != bc.negative.empty())
                c.error(path, "give both positive and negative word lists or neither");
            cfg.backends.push_back(std::move(bc));
        }
    }

    if (auto p = c.get<std::string>(j, "", "labeled_corpus", false)) cfg.labeled_corpus = resolve(base_dir, *p);

    if (const json* s = c.object(j, "", "stacking", false)) {
        c.allow_keys(*s, "stacking", {"kinds", "backend_order", "include_confidence", "train_fraction"});
        if (auto k = c.get<std::vector<std::string>>(*s, "stacking", "kinds", false))
            for (const auto& name : *k)
                c.guard("stacking.kinds", [&] { cfg.stacking.kinds.push_back(ensemble::parse_stacker_kind(name)); });
        if (auto o = c.get<std::vector<std::string>>(*s, "stacking", "backend_order", false)) {
            for (auto id : *o) {
                id = to_lower(id);
                bool known = false;
                for (const auto& b : cfg.backends) known = known || b.id == id;
                if (!known) c.error("stacking.backend_order", "unknown backend '" + id + "'");
                cfg.stacking.backend_order.push_back(id);
            }
        }
        if (auto v = c.get<bool>(*s, "stacking", "include_confidence", false)) cfg.stacking.include_confidence = *v;
        if (auto v = c.get<double>(*s, "stacking", "train_fraction", false)) {
            if (!(*v > 0 && *v < 1)) c.error("stacking.train_fraction", "must be in (0, 1)");
            cfg.stacking.train_fraction = *v;
        }
    }
    if (cfg.stacking.backend_order.empty()) cfg.stacking.backend_order = cfg.backend_ids();
    if (!cfg.stacking.kinds.empty() && !cfg.labeled_corpus)
        c.error("labeled_corpus", "required when stacking.kinds is set");

    if (const json* a = c.object(j, "", "aggregation", false)) {
        c.allow_keys(*a, "aggregation", {"close_cutoff", "cutoff_hour", "wo_sum_drops_minmax"});
        if (auto v = c.get<bool>(*a, "aggregation", "close_cutoff", false)) cfg.align.close_cutoff = *v;
        if (auto v = c.get<int>(*a, "aggregation", "cutoff_hour", false)) {
            if (*v < 0 || *v > 23) c.error("aggregation.cutoff_hour", "must be in [0, 23]");
            cfg.align.cutoff_seconds = *v * 3600;
        }
        if (auto v = c.get<bool>(*a, "aggregation", "wo_sum_drops_minmax", false)) cfg.features.wo_sum_drops_minmax = *v;
    }

    if (const json* d = c.object(j, "", "dataset", false)) {
        c.allow_keys(*d, "dataset", {"window", "train", "val"});
        if (auto v = c.get<std::size_t>(*d, "dataset", "window", false)) {
            if (*v < 2) c.error("dataset.window", "must be at least 2");
            cfg.window = *v;
        }
        if (auto v = c.get<double>(*d, "dataset", "train", false)) cfg.split.train = *v;
        if (auto v = c.get<double>(*d, "dataset", "val", false)) cfg.split.val = *v;
        cfg.split.test = 1.0 - cfg.split.train - cfg.split.val;
        if (!(cfg.split.train > 0 && cfg.split.val > 0 && cfg.split.test > 1e-12))
            c.error("dataset", "train and val fractions must be positive and sum to less than 1");
    }

    if (const json* m = c.object(j, "", "models", true)) {
        for (const auto& [name, body] : m->items()) {
            const std::string path = "models." + name;
            c.guard(path, [&] {
                const auto arch = models::parse_arch(name);
                if (!body.is_object()) throw ValidationError("expected an object");
                for (const char* k : {"arch", "task", "seed"})
                    if (body.contains(k)) throw ValidationError(std::string(k) + " is set by the experiment");
                json full = body;
                full["arch"] = name;
                try {
                    cfg.models[arch] = models::ModelConfig::from_json(full);
                } catch (const ValidationError& e) {
                    // One entry per offending field, addressed by its full key path.
                    std::string text = e.what();
                    if (text.rfind("model config:", 0) == 0) text.erase(0, 13);
                    std::istringstream lines(text);
                    for (std::string line; std::getline(lines, line);) {
                        line.erase(0, line.find_first_not_of(' '));
                        if (line.empty()) continue;
                        const auto colon = line.find(": ");
                        if (colon != std::string::npos && line.find(' ') > colon)
                            c.error(path + "." + line.substr(0, colon), line.substr(colon + 2));
                        else
                            c.error(path, line);
                    }
                }
            });
        }
    }

    if (const json* e = c.object(j, "", "experiment", true))
        if (auto ex = parse_experiment(c, *e, "experiment", cfg.models, cfg.seed)) cfg.experiment = *ex;
    if (const json* a = c.object(j, "", "ablation", false)) {
        cfg.ablation = parse_experiment(c, *a, "ablation", cfg.models, cfg.seed);
        if (cfg.ablation &&
            std::find(cfg.ablation->archs.begin(), cfg.ablation->archs.end(), models::Arch::lstm) ==
                cfg.ablation->archs.end())
            c.error("ablation.archs", "must include lstm");
    }

    // every experiment source must be producible
    std::set<std::string> producible = {experiments::kNoSentiment};
    for (const auto& b : cfg.backends) producible.insert(b.id);
    for (auto k : cfg.stacking.kinds) producible.insert(ensemble::to_string(k));
    for (const auto* e : {&cfg.experiment, cfg.ablation ? &*cfg.ablation : nullptr}) {
        if (!e) continue;
        for (const auto& s : e->sources)
            if (!producible.count(s))
                c.error(e == &cfg.experiment ? "experiment.sources" : "ablation.sources",
                        "source '" + s + "' is neither NS, a backend id nor a configured stacker");
    }
    c.finish();

    cfg.canonical = j;
    cfg.canonical.erase("workers");
    cfg.canonical.erase("output_dir");
    // seeds derived from the global seed are part of the identity
    cfg.canonical["seed"] = cfg.seed;
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    if (seed && j.is_object()) j["seed"] = *seed;
    return parse_config(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace sentiflow::pipeline
