#include "sentiflow/models/train.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "sentiflow/common/error.hpp"
#include "sentiflow/common/text.hpp"

namespace sentiflow::models {

namespace {

constexpr int kCheckpointVersion = 1;

void check_compatible(const Model& model, const dataset::SampleSet& set, const char* what) {
    if (set.size() == 0) return;
    if (set.length != model.window_length() || set.features != model.input_features())
        throw ValidationError(std::string(what) + ": samples are [" + std::to_string(set.length) + " x " +
                              std::to_string(set.features) + "] but the model expects [" +
                              std::to_string(model.window_length()) + " x " +
                              std::to_string(model.input_features()) + "]");
}

std::vector<double> targets_of(const Model& model, const dataset::SampleSet& set) {
    if (model.config().task == Task::regression) return set.factor;
    return {set.binary.begin(), set.binary.end()};
}

Var batch_inputs(const dataset::SampleSet& set, std::span<const std::size_t> idx) {
    const std::size_t per = set.length * set.features;
    std::vector<double> v(idx.size() * per);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto s = set.sample(idx[i]);
        std::copy(s.begin(), s.end(), v.begin() + static_cast<std::ptrdiff_t>(i * per));
    }
    return nn::constant({idx.size(), set.length, set.features}, std::move(v));
}

Var task_loss(const Model& model, const Var& out, std::span<const double> y) {
    return model.config().task == Task::regression ? nn::mse(out, y) : nn::bce_with_logits(out, y);
}

std::vector<std::vector<double>> snapshot(const ParamStore& ps) {
    std::vector<std::vector<double>> out;
    for (const auto& [_, v] : ps.entries()) out.emplace_back(v.value().begin(), v.value().end());
    return out;
}

void restore(ParamStore& ps, const std::vector<std::vector<double>>& values) {
    const auto& entries = ps.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        Var v = entries[i].second;
        std::copy(values[i].begin(), values[i].end(), v.mutable_value().begin());
    }
}

class Adam {
public:
    Adam(const ParamStore& ps, double lr, AdamParams p) : lr_(lr), p_(p) {
        for (const auto& [_, v] : ps.entries()) {
            m_.emplace_back(v.size(), 0.0);
            v_.emplace_back(v.size(), 0.0);
        }
    }

    void step(ParamStore& ps) {
        ++t_;
        const double c1 = 1.0 - std::pow(p_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(p_.beta2, static_cast<double>(t_));
        const auto& entries = ps.entries();
        for (std::size_t k = 0; k < entries.size(); ++k) {
            Var param = entries[k].second;
            const auto g = param.grad();
            if (g.empty()) continue;
            auto w = param.mutable_value();
            for (std::size_t i = 0; i < w.size(); ++i) {
                m_[k][i] = p_.beta1 * m_[k][i] + (1.0 - p_.beta1) * g[i];
                v_[k][i] = p_.beta2 * v_[k][i] + (1.0 - p_.beta2) * g[i] * g[i];
                w[i] -= lr_ * (m_[k][i] / c1) / (std::sqrt(v_[k][i] / c2) + p_.eps);
            }
        }
    }

private:
    double lr_;
    AdamParams p_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
};

double mean_loss(const Model& model, const dataset::SampleSet& set, std::span<const double> y) {
    nn::NoGradGuard guard;
    const std::size_t bs = std::max<std::size_t>(model.config().batch_size, 64);
    std::vector<std::size_t> idx(set.size());
    std::iota(idx.begin(), idx.end(), 0);
    double total = 0.0;
    for (std::size_t start = 0; start < idx.size(); start += bs) {
        const std::size_t n = std::min(bs, idx.size() - start);
        const std::span<const std::size_t> batch(idx.data() + start, n);
        const Var out = model.forward(batch_inputs(set, batch));
        total += task_loss(model, out, y.subspan(start, n)).item() * static_cast<double>(n);
    }
    return total / static_cast<double>(set.size());
}

}  // namespace

double evaluate_loss(const Model& model, const dataset::SampleSet& set) {
    check_compatible(model, set, "evaluate_loss");
    if (set.size() == 0) throw ValidationError("evaluate_loss: empty sample set");
    return mean_loss(model, set, targets_of(model, set));
}

TrainedModel train(std::unique_ptr<Model> model, const dataset::SampleSet& train_set,
                   const dataset::SampleSet& val_set, const std::vector<std::string>& feature_names,
                   const AdamParams& adam) {
    if (!model) throw ValidationError("train: no model");
    if (train_set.size() == 0 || val_set.size() == 0) throw ValidationError("train: empty train or validation split");
    check_compatible(*model, train_set, "train");
    check_compatible(*model, val_set, "train");
    if (!feature_names.empty() && feature_names.size() != model->input_features())
        throw ValidationError("train: feature schema does not match the model input width");

    const ModelConfig& cfg = model->config();
    auto y = targets_of(*model, train_set);
    auto y_val = targets_of(*model, val_set);
    TrainedModel result;
    result.feature_names = feature_names;
    ParamStore& ps = model->params();
    // Factors sit near 1 with percent-level spread. Regression trains on
    // standardized targets from the constant train-mean predictor, and the
    // head is mapped back to factor units afterwards.
    double shift = 0.0, scale = 1.0;
    Var head_weight, head_bias;
    if (cfg.task == Task::regression) {
        const double n = static_cast<double>(y.size());
        shift = std::accumulate(y.begin(), y.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : y) ss += (v - shift) * (v - shift);
        if (ss > 0.0) scale = std::sqrt(ss / n);
        head_weight = ps.get("head.weight");
        head_bias = ps.get("head.bias");
        std::fill(head_weight.mutable_value().begin(), head_weight.mutable_value().end(), 0.0);
        head_bias.mutable_value()[0] = shift;
        result.initial_train_loss = evaluate_loss(*model, train_set);
        head_bias.mutable_value()[0] = 0.0;
        for (auto* t : {&y, &y_val})
            for (double& v : *t) v = (v - shift) / scale;
    } else {
        result.initial_train_loss = evaluate_loss(*model, train_set);
    }
    const double loss_unit = scale * scale;  // standardized MSE back to factor units

    Adam optimiser(ps, cfg.learning_rate, adam);
    Rng order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::vector<double>> best;
    double best_val = INFINITY;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        double running = 0.0;
        std::size_t batch_no = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
            const std::size_t n = std::min(cfg.batch_size, order.size() - start);
            const std::span<const std::size_t> batch(order.data() + start, n);
            std::vector<double> target(n);
            for (std::size_t i = 0; i < n; ++i) target[i] = y[batch[i]];
            ps.zero_grad();
            const Var loss = task_loss(*model, model->forward(batch_inputs(train_set, batch)), target);
            if (!std::isfinite(loss.item()))
                throw Error("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_no + 1) + " (" + to_string(cfg.arch) + ")");
            nn::backward(loss);
            optimiser.step(ps);
            running += loss.item() * static_cast<double>(n);
        }
        ps.zero_grad();
        EpochRecord rec{epoch, loss_unit * running / static_cast<double>(order.size()),
                        loss_unit * mean_loss(*model, val_set, y_val)};
        if (!std::isfinite(rec.val_loss))
            throw Error("non-finite validation loss at epoch " + std::to_string(epoch));
        result.history.push_back(rec);
        if (rec.val_loss < best_val) {
            best_val = rec.val_loss;
            best = snapshot(ps);
            result.best_epoch = epoch;
        }
    }
    restore(ps, best);
    if (cfg.task == Task::regression) {
        for (double& w : head_weight.mutable_value()) w *= scale;
        head_bias.mutable_value()[0] = head_bias.value()[0] * scale + shift;
    }
    result.final_train_loss = evaluate_loss(*model, train_set);
    result.model = std::move(model);
    return result;
}

std::vector<double> predict(const Model& model, std::span<const double> inputs, std::size_t n) {
    const std::size_t per = model.window_length() * model.input_features();
    if (inputs.size() != n * per)
        throw ValidationError("predict: got " + std::to_string(inputs.size()) + " values for " + std::to_string(n) +
                              " samples of [" + std::to_string(model.window_length()) + " x " +
                              std::to_string(model.input_features()) + "]");
    std::vector<double> out;
    out.reserve(n);
    if (n == 0) return out;
    nn::NoGradGuard guard;
    const std::size_t bs = std::max<std::size_t>(model.config().batch_size, 64);
    for (std::size_t start = 0; start < n; start += bs) {
        const std::size_t m = std::min(bs, n - start);
        std::vector<double> chunk(inputs.begin() + static_cast<std::ptrdiff_t>(start * per),
                                  inputs.begin() + static_cast<std::ptrdiff_t>((start + m) * per));
        const Var y = model.output(nn::constant({m, model.window_length(), model.input_features()}, std::move(chunk)));
        out.insert(out.end(), y.value().begin(), y.value().end());
    }
    return out;
}

std::vector<double> predict(const TrainedModel& trained, const dataset::SampleSet& set) {
    if (set.size() == 0) return {};
    check_compatible(*trained.model, set, "predict");
    return predict(*trained.model, set.inputs, set.size());
}

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& trained) {
    nlohmann::ordered_json j;
    j["schema_version"] = kCheckpointVersion;
    j["config"] = trained.config().to_json();
    j["input_features"] = trained.model->input_features();
    j["window_length"] = trained.model->window_length();
    j["feature_names"] = trained.feature_names;
    j["best_epoch"] = trained.best_epoch;
    j["initial_train_loss"] = trained.initial_train_loss;
    j["final_train_loss"] = trained.final_train_loss;
    auto& hist = j["history"] = nlohmann::ordered_json::array();
    for (const auto& h : trained.history) hist.push_back({h.epoch, h.train_loss, h.val_loss});
    auto& params = j["parameters"] = nlohmann::ordered_json::object();
    for (const auto& [name, v] : trained.model->params().entries())
        params[name] = {{"shape", v.shape()}, {"values", std::vector<double>(v.value().begin(), v.value().end())}};
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump() << '\n';
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open checkpoint " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        if (j.at("schema_version").get<int>() != kCheckpointVersion)
            throw FormatError("unsupported checkpoint version in " + path.string());
        const ModelConfig cfg = ModelConfig::from_json(j.at("config"));
        TrainedModel t;
        t.model = build_model(cfg, j.at("input_features").get<std::size_t>(), j.at("window_length").get<std::size_t>());
        t.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        t.best_epoch = j.at("best_epoch").get<std::size_t>();
        t.initial_train_loss = j.at("initial_train_loss").get<double>();
        t.final_train_loss = j.at("final_train_loss").get<double>();
        for (const auto& h : j.at("history"))
            t.history.push_back({h.at(0).get<std::size_t>(), h.at(1).get<double>(), h.at(2).get<double>()});
        const auto& params = j.at("parameters");
        for (const auto& [name, v] : t.model->params().entries()) {
            const auto& p = params.at(name);
            if (p.at("shape").get<Shape>() != v.shape())
                throw FormatError("checkpoint parameter '" + name + "' has the wrong shape");
            const auto values = p.at("values").get<std::vector<double>>();
            Var target = v;
            std::copy(values.begin(), values.end(), target.mutable_value().begin());
        }
        if (params.size() != t.model->params().entries().size())
            throw FormatError("checkpoint has unexpected parameters");
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed checkpoint " + path.string() + ": " + e.what());
    }
}

void write_history_csv(const std::filesystem::path& path, const TrainedModel& trained) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "epoch,train_loss,val_loss,best\n";
    for (const auto& h : trained.history)
        out << h.epoch << ',' << format_double(h.train_loss) << ',' << format_double(h.val_loss) << ','
            << (h.epoch == trained.best_epoch ? 1 : 0) << '\n';
}

}  // namespace sentiflow::models
