#include "sentiflow/models/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "architectures.hpp"
#include "sentiflow/common/error.hpp"

namespace sentiflow::models {

std::string to_string(Arch a) {
    switch (a) {
        case Arch::lstm: return "lstm";
        case Arch::patchtst: return "patchtst";
        case Arch::timesnet: return "timesnet";
        case Arch::tpatchgnn: return "tpatchgnn";
    }
    return "lstm";
}

std::string to_string(Task t) { return t == Task::classification ? "classification" : "regression"; }

Arch parse_arch(const std::string& s) {
    for (Arch a : kAllArchs)
        if (to_string(a) == s) return a;
    throw ValidationError("unknown arch '" + s + "' (expected lstm, patchtst, timesnet or tpatchgnn)");
}

Task parse_task(const std::string& s) {
    if (s == "classification") return Task::classification;
    if (s == "regression") return Task::regression;
    throw ValidationError("unknown task '" + s + "' (expected classification or regression)");
}

bool uses_patches(Arch a) { return a == Arch::patchtst || a == Arch::tpatchgnn; }

namespace {

bool uses_heads(Arch a) { return a == Arch::patchtst || a == Arch::tpatchgnn; }

}  // namespace

void ModelConfig::validate() const {
    std::vector<std::string> bad;
    auto need = [&](const char* name, std::size_t v) {
        if (v == 0) bad.emplace_back(name);
    };
    need("hidden_dim", hidden_dim);
    need("num_layers", num_layers);
    need("epochs", epochs);
    need("batch_size", batch_size);
    if (!(learning_rate > 0) || !std::isfinite(learning_rate)) bad.emplace_back("learning_rate");
    if (uses_patches(arch)) {
        need("patch_len", patch_len);
        need("patch_stride", patch_stride);
    }
    if (uses_heads(arch)) need("num_heads", num_heads);
    if (arch == Arch::timesnet) need("top_k_periods", top_k_periods);
    if (!bad.empty()) {
        std::string msg = "model config: must be positive:";
        for (const auto& b : bad) msg += " " + b;
        throw ValidationError(msg);
    }
    if (uses_heads(arch) && hidden_dim % num_heads != 0)
        throw ValidationError("model config: hidden_dim must be divisible by num_heads");
}

nlohmann::json ModelConfig::to_json() const {
    nlohmann::json j;
    j["arch"] = to_string(arch);
    j["task"] = to_string(task);
    j["hidden_dim"] = hidden_dim;
    j["num_layers"] = num_layers;
    if (uses_patches(arch)) {
        j["patch_len"] = patch_len;
        j["patch_stride"] = patch_stride;
    }
    if (uses_heads(arch)) j["num_heads"] = num_heads;
    if (arch == Arch::timesnet) j["top_k_periods"] = top_k_periods;
    j["epochs"] = epochs;
    j["learning_rate"] = learning_rate;
    j["batch_size"] = batch_size;
    j["seed"] = seed;
    return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("model config must be an object");
    ModelConfig c;
    std::vector<std::string> errors;
    try {
        c.arch = parse_arch(j.at("arch").get<std::string>());
    } catch (const std::exception& e) {
        throw ValidationError(std::string("model config: arch: ") + e.what());
    }
    if (j.contains("task")) c.task = parse_task(j["task"].get<std::string>());
    auto size_field = [&](const char* key, std::size_t& dst) {
        if (!j.contains(key)) return;
        const auto& v = j[key];
        if (!v.is_number_integer() || v.get<std::int64_t>() <= 0)
            errors.push_back(std::string(key) + ": expected a positive integer");
        else
            dst = v.get<std::size_t>();
    };
    for (const auto& [key, value] : j.items()) {
        static const std::vector<std::string> common = {"arch",   "task",          "hidden_dim", "num_layers",
                                                        "epochs", "learning_rate", "batch_size", "seed"};
        const bool known = std::find(common.begin(), common.end(), key) != common.end();
        const bool patch = key == "patch_len" || key == "patch_stride";
        if (known) continue;
        if (patch && uses_patches(c.arch)) continue;
        if (key == "num_heads" && uses_heads(c.arch)) continue;
        if (key == "top_k_periods" && c.arch == Arch::timesnet) continue;
        if (patch || key == "num_heads" || key == "top_k_periods")
            errors.push_back(key + ": not used by arch " + to_string(c.arch));
        else
            errors.push_back(key + ": unknown key");
    }
    size_field("hidden_dim", c.hidden_dim);
    size_field("num_layers", c.num_layers);
    size_field("patch_len", c.patch_len);
    size_field("patch_stride", c.patch_stride);
    size_field("top_k_periods", c.top_k_periods);
    size_field("num_heads", c.num_heads);
    size_field("epochs", c.epochs);
    size_field("batch_size", c.batch_size);
    if (j.contains("learning_rate")) {
        if (!j["learning_rate"].is_number() || !(j["learning_rate"].get<double>() > 0))
            errors.emplace_back("learning_rate: expected a positive number");
        else
            c.learning_rate = j["learning_rate"].get<double>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned())
            errors.emplace_back("seed: expected a non-negative integer");
        else
            c.seed = j["seed"].get<std::uint64_t>();
    }
    if (!errors.empty()) {
        std::string msg = "model config:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ValidationError(msg);
    }
    c.validate();
    return c;
}

std::size_t patch_count(std::size_t length, std::size_t patch_len, std::size_t stride) {
    if (patch_len == 0 || stride == 0 || patch_len > length)
        throw ValidationError("patch_len " + std::to_string(patch_len) + " does not fit window length " +
                              std::to_string(length));
    return (length - patch_len) / stride + 1;
}

Var Model::output(const Var& x) const {
    Var y = forward(x);
    return config_.task == Task::classification ? nn::sigmoid(y) : y;
}

std::unique_ptr<Model> build_model(const ModelConfig& config, std::size_t features, std::size_t length) {
    config.validate();
    if (features == 0) throw ValidationError("build_model: input feature dim must be positive");
    if (length < 2) throw ValidationError("build_model: window length must be at least 2");
    switch (config.arch) {
        case Arch::lstm: return detail::make_lstm(config, features, length);
        case Arch::patchtst: return detail::make_patchtst(config, features, length);
        case Arch::timesnet: return detail::make_timesnet(config, features, length);
        case Arch::tpatchgnn: return detail::make_tpatchgnn(config, features, length);
    }
    throw ValidationError("unknown arch");
}

std::vector<Period> timesnet_periods(std::span<const double> x, std::size_t batch, std::size_t length,
                                     std::size_t channels, std::size_t k) {
    if (x.size() != batch * length * channels) throw ValidationError("timesnet_periods: size mismatch");
    const std::size_t nyquist = length / 2;
    if (k == 0 || k > nyquist)
        throw ValidationError("top_k_periods must be in [1, " + std::to_string(nyquist) + "] for window length " +
                              std::to_string(length));
    std::vector<double> amp(nyquist + 1, 0.0);
    for (std::size_t f = 1; f <= nyquist; ++f) {
        double total = 0.0;
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t d = 0; d < channels; ++d) {
                double re = 0.0, im = 0.0;
                for (std::size_t t = 0; t < length; ++t) {
                    const double th =
                        2.0 * std::numbers::pi * static_cast<double>(f * t % length) / static_cast<double>(length);
                    const double v = x[(b * length + t) * channels + d];
                    re += v * std::cos(th);
                    im -= v * std::sin(th);
                }
                total += std::sqrt(re * re + im * im);
            }
        amp[f] = total;
    }
    std::vector<std::size_t> order;
    for (std::size_t f = 1; f <= nyquist; ++f) order.push_back(f);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return amp[a] > amp[b]; });
    std::vector<Period> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back({order[i], length / order[i]});
    return out;
}

}  // namespace sentiflow::models
