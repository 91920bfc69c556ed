#include <cmath>
#include <memory>
#include <vector>

#include "architectures.hpp"

namespace sentiflow::models::detail {

namespace {

// Patch encoder per variable, then message passing over a learned dense graph
// of the F variables at every patch position, then mean pooling over patches.
class TPatchGnn final : public Model {
public:
    TPatchGnn(const ModelConfig& c, std::size_t features, std::size_t length)
        : Model(c, features, length), patches_(patch_count(length, c.patch_len, c.patch_stride)) {
        Rng rng(c.seed);
        const std::size_t d = c.hidden_dim;
        embed_ = Linear(params_, "patch_embed", c.patch_len, d, rng);
        position_ = params_.add_normal("position", {patches_, d}, 0.02, rng);
        variable_ = params_.add_normal("variable", {features, d}, 0.02, rng);
        const double node_bound = 1.0 / std::sqrt(static_cast<double>(d));
        source_ = params_.add_uniform("graph.source", {features, d}, node_bound, rng);
        target_ = params_.add_uniform("graph.target", {features, d}, node_bound, rng);
        for (std::size_t l = 0; l < c.num_layers; ++l) {
            const std::string name = "layer." + std::to_string(l);
            layers_.push_back({EncoderLayer(params_, name + ".temporal", d, c.num_heads, 2 * d, rng),
                               params_.add_uniform(name + ".self", {d, d}, node_bound, rng),
                               params_.add_uniform(name + ".neighbour", {d, d}, node_bound, rng),
                               params_.add_uniform(name + ".bias", {d}, node_bound, rng)});
        }
        head_ = Linear(params_, "head", features * d, 1, rng);

        variable_index_ = std::make_shared<std::vector<std::int64_t>>();
        for (std::size_t f = 0; f < features; ++f)
            for (std::size_t p = 0; p < patches_; ++p)
                for (std::size_t j = 0; j < d; ++j) variable_index_->push_back(static_cast<std::int64_t>(f * d + j));
    }

    // Row-stochastic [F, F] adjacency: softmax(relu(source * target^T)).
    Var adjacency() const {
        const std::size_t f = features_, d = config_.hidden_dim;
        const Var s = nn::reshape(source_, {1, f, d});
        const Var t = nn::reshape(target_, {1, f, d});
        return nn::reshape(nn::softmax_last(nn::relu(nn::bmm(s, t, true))), {f, f});
    }

    Var forward(const Var& x) const override {
        const std::size_t b = x.dim(0), f = features_, p = patches_, d = config_.hidden_dim;
        Var h = nn::add_broadcast(embed_(extract_patches(x, config_.patch_len, config_.patch_stride)), position_);
        h = nn::add_broadcast(nn::reshape(h, {b, f, p, d}), nn::gather(variable_, variable_index_, {f, p, d}));
        h = nn::reshape(h, {b * f, p, d});
        // matmul contracts the last axis, so aggregate with A^T on a [.., d, F] view.
        const Var adj_t = permute(adjacency(), {1, 0});
        for (const auto& layer : layers_) {
            h = layer.temporal(h);
            Var nodes = permute(nn::reshape(h, {b, f, p, d}), {0, 2, 1, 3});  // [B, P, F, d]
            const Var gathered = permute(nn::matmul(permute(nodes, {0, 1, 3, 2}), adj_t), {0, 1, 3, 2});
            const Var update = nn::gelu(nn::add_broadcast(
                nn::add(nn::matmul(nodes, layer.self), nn::matmul(gathered, layer.neighbour)), layer.bias));
            nodes = nn::add(update, nodes);
            h = nn::reshape(permute(nodes, {0, 2, 1, 3}), {b * f, p, d});
        }
        const Var pooled = nn::mean_axis(nn::reshape(h, {b, f, p, d}), 2);  // [B, F, d]
        return nn::reshape(head_(nn::reshape(pooled, {b, f * d})), {b});
    }

private:
    struct Layer {
        EncoderLayer temporal;
        Var self, neighbour, bias;
    };

    std::size_t patches_;
    Linear embed_;
    Var position_, variable_, source_, target_;
    std::vector<Layer> layers_;
    Linear head_;
    std::shared_ptr<std::vector<std::int64_t>> variable_index_;
};

}  // namespace

std::unique_ptr<Model> make_tpatchgnn(const ModelConfig& c, std::size_t features, std::size_t length) {
    return std::make_unique<TPatchGnn>(c, features, length);
}

}  // namespace sentiflow::models::detail
