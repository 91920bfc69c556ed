#include <cmath>
#include <memory>
#include <vector>

#include "architectures.hpp"

namespace sentiflow::models::detail {

namespace {

class Lstm final : public Model {
public:
    Lstm(const ModelConfig& c, std::size_t features, std::size_t length) : Model(c, features, length) {
        Rng rng(c.seed);
        const std::size_t h = c.hidden_dim;
        const double bound = 1.0 / std::sqrt(static_cast<double>(h));
        for (std::size_t l = 0; l < c.num_layers; ++l) {
            const std::string name = "lstm." + std::to_string(l);
            const std::size_t in = l == 0 ? features : h;
            // gate blocks along the last axis: input, forget, cell, output
            layers_.push_back({params_.add_uniform(name + ".w_input", {in, 4 * h}, bound, rng),
                               params_.add_uniform(name + ".w_hidden", {h, 4 * h}, bound, rng),
                               params_.add_uniform(name + ".bias", {4 * h}, bound, rng)});
        }
        head_ = Linear(params_, "head", h, 1, rng);
    }

    Var forward(const Var& x) const override {
        const std::size_t b = x.dim(0), l = x.dim(1), h = config_.hidden_dim;
        std::vector<Var> seq;
        for (std::size_t t = 0; t < l; ++t) seq.push_back(nn::reshape(nn::slice(x, 1, t, 1), {b, x.dim(2)}));
        for (const auto& layer : layers_) {
            Var hs = nn::zeros({b, h});
            Var cs = nn::zeros({b, h});
            for (std::size_t t = 0; t < l; ++t) {
                const Var z = nn::add_broadcast(
                    nn::add(nn::matmul(seq[t], layer.w_input), nn::matmul(hs, layer.w_hidden)), layer.bias);
                const Var i = nn::sigmoid(nn::slice(z, 1, 0, h));
                const Var f = nn::sigmoid(nn::slice(z, 1, h, h));
                const Var g = nn::tanh(nn::slice(z, 1, 2 * h, h));
                const Var o = nn::sigmoid(nn::slice(z, 1, 3 * h, h));
                cs = nn::add(nn::mul(f, cs), nn::mul(i, g));
                hs = nn::mul(o, nn::tanh(cs));
                seq[t] = hs;
            }
        }
        return nn::reshape(head_(seq.back()), {b});
    }

private:
    struct Layer {
        Var w_input, w_hidden, bias;
    };
    std::vector<Layer> layers_;
    Linear head_;
};

}  // namespace

std::unique_ptr<Model> make_lstm(const ModelConfig& c, std::size_t features, std::size_t length) {
    return std::make_unique<Lstm>(c, features, length);
}

}  // namespace sentiflow::models::detail
