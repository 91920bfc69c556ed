#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sentiflow/common/rng.hpp"
#include "sentiflow/models/autograd.hpp"

namespace sentiflow::models {

using nn::Shape;
using nn::Var;

// Named trainable tensors in registration order.
class ParamStore {
public:
    Var add(const std::string& name, Shape shape, std::vector<double> values);
    Var add_uniform(const std::string& name, Shape shape, double bound, Rng& rng);
    Var add_normal(const std::string& name, Shape shape, double sd, Rng& rng);
    Var add_constant(const std::string& name, Shape shape, double value);

    const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
    Var get(const std::string& name) const;
    std::size_t scalar_count() const;
    void zero_grad();

private:
    std::vector<std::pair<std::string, Var>> entries_;
};

// out = a with axes reordered so that out axis i is a's axis perm[i].
Var permute(const Var& a, const std::vector<std::size_t>& perm);

struct Linear {
    Var weight;  // [in, out]
    Var bias;    // [out]

    Linear() = default;
    Linear(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
    Var operator()(const Var& x) const;
};

struct LayerNorm {
    Var gamma, beta;

    LayerNorm() = default;
    LayerNorm(ParamStore& ps, const std::string& name, std::size_t dim);
    Var operator()(const Var& x) const;
};

// Post-norm transformer encoder layer: multi-head self-attention then a GELU
// feed-forward block, each with a residual connection and LayerNorm.
class EncoderLayer {
public:
    EncoderLayer() = default;
    EncoderLayer(ParamStore& ps, const std::string& name, std::size_t d_model, std::size_t heads, std::size_t d_ff,
                 Rng& rng);

    // x: [G, n, d_model]
    Var operator()(const Var& x) const;

private:
    std::size_t d_model_ = 0, heads_ = 0;
    Linear q_, k_, v_, o_, ff1_, ff2_;
    LayerNorm ln1_, ln2_;
};

}  // namespace sentiflow::models
