#include <memory>
#include <vector>

#include "architectures.hpp"

namespace sentiflow::models::detail {

namespace {

// Channel-independent: every feature series shares the patch embedding and
// encoder; only the head sees all channels, through one weight block each.
class PatchTst final : public Model {
public:
    PatchTst(const ModelConfig& c, std::size_t features, std::size_t length)
        : Model(c, features, length), patches_(patch_count(length, c.patch_len, c.patch_stride)) {
        Rng rng(c.seed);
        const std::size_t d = c.hidden_dim;
        embed_ = Linear(params_, "patch_embed", c.patch_len, d, rng);
        position_ = params_.add_normal("position", {patches_, d}, 0.02, rng);
        for (std::size_t l = 0; l < c.num_layers; ++l)
            encoder_.emplace_back(params_, "encoder." + std::to_string(l), d, c.num_heads, 2 * d, rng);
        head_ = Linear(params_, "head", features * patches_ * d, 1, rng);
    }

    Var forward(const Var& x) const override {
        const std::size_t b = x.dim(0), d = config_.hidden_dim;
        Var h = nn::add_broadcast(embed_(extract_patches(x, config_.patch_len, config_.patch_stride)), position_);
        for (const auto& layer : encoder_) h = layer(h);
        return nn::reshape(head_(nn::reshape(h, {b, features_ * patches_ * d})), {b});
    }

private:
    std::size_t patches_;
    Linear embed_;
    Var position_;
    std::vector<EncoderLayer> encoder_;
    Linear head_;
};

}  // namespace

std::unique_ptr<Model> make_patchtst(const ModelConfig& c, std::size_t features, std::size_t length) {
    return std::make_unique<PatchTst>(c, features, length);
}

}  // namespace sentiflow::models::detail
