#include <cmath>
#include <memory>
#include <vector>

#include "architectures.hpp"
#include "sentiflow/common/error.hpp"

namespace sentiflow::models::detail {

namespace {

class TimesNet final : public Model {
public:
    TimesNet(const ModelConfig& c, std::size_t features, std::size_t length) : Model(c, features, length) {
        if (c.top_k_periods > length / 2)
            throw ValidationError("top_k_periods " + std::to_string(c.top_k_periods) + " exceeds " +
                                  std::to_string(length / 2) + " usable frequencies");
        Rng rng(c.seed);
        const std::size_t d = c.hidden_dim;
        embed_ = Linear(params_, "embed", features, d, rng);
        position_ = params_.add_normal("position", {length, d}, 0.02, rng);
        const double bound = 1.0 / std::sqrt(static_cast<double>(d * 9));
        for (std::size_t l = 0; l < c.num_layers; ++l) {
            const std::string name = "block." + std::to_string(l);
            blocks_.push_back({params_.add_uniform(name + ".conv1.weight", {d, d, 3, 3}, bound, rng),
                               params_.add_uniform(name + ".conv1.bias", {d}, bound, rng),
                               params_.add_uniform(name + ".conv2.weight", {d, d, 3, 3}, bound, rng),
                               params_.add_uniform(name + ".conv2.bias", {d}, bound, rng),
                               LayerNorm(params_, name + ".norm", d)});
        }
        head_ = Linear(params_, "head", length * d, 1, rng);
    }

    Var forward(const Var& x) const override {
        const std::size_t b = x.dim(0), l = length_, d = config_.hidden_dim;
        Var h = nn::add_broadcast(embed_(x), position_);
        for (const auto& block : blocks_) h = apply_block(block, h);
        return nn::reshape(head_(nn::reshape(nn::gelu(h), {b, l * d})), {b});
    }

private:
    struct Block {
        Var conv1_w, conv1_b, conv2_w, conv2_b;
        LayerNorm norm;
    };

    Var apply_block(const Block& block, const Var& x) const {
        const std::size_t b = x.dim(0), l = length_, d = config_.hidden_dim;
        const auto periods = timesnet_periods(x.value(), b, l, d, config_.top_k_periods);
        std::vector<std::size_t> freqs;
        for (const auto& p : periods) freqs.push_back(p.frequency);
        const Var weights = nn::softmax_last(nn::dft_amplitude(x, freqs));
        Var fused;
        for (std::size_t k = 0; k < periods.size(); ++k) {
            const std::size_t p = periods[k].period;
            const std::size_t rows = (l + p - 1) / p;
            auto to_grid = std::make_shared<std::vector<std::int64_t>>();
            to_grid->reserve(b * d * rows * p);
            for (std::size_t bi = 0; bi < b; ++bi)
                for (std::size_t c = 0; c < d; ++c)
                    for (std::size_t t = 0; t < rows * p; ++t)
                        to_grid->push_back(t < l ? static_cast<std::int64_t>((bi * l + t) * d + c) : -1);
            Var grid = nn::gather(x, std::move(to_grid), {b, d, rows, p});
            grid = nn::conv2d(nn::gelu(nn::conv2d(grid, block.conv1_w, block.conv1_b)), block.conv2_w, block.conv2_b);
            auto from_grid = std::make_shared<std::vector<std::int64_t>>();
            from_grid->reserve(b * l * d);
            for (std::size_t bi = 0; bi < b; ++bi)
                for (std::size_t t = 0; t < l; ++t)
                    for (std::size_t c = 0; c < d; ++c)
                        from_grid->push_back(static_cast<std::int64_t>((bi * d + c) * rows * p + t));
            const Var back = nn::gather(grid, std::move(from_grid), {b, l, d});
            const Var weighted = nn::scale_rows(back, nn::reshape(nn::slice(weights, 1, k, 1), {b}));
            fused = fused ? nn::add(fused, weighted) : weighted;
        }
        return block.norm(nn::add(fused, x));
    }

    Linear embed_;
    Var position_;
    std::vector<Block> blocks_;
    Linear head_;
};

}  // namespace

std::unique_ptr<Model> make_timesnet(const ModelConfig& c, std::size_t features, std::size_t length) {
    return std::make_unique<TimesNet>(c, features, length);
}

}  // namespace sentiflow::models::detail
