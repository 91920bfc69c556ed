#include "sentiflow/models/layers.hpp"

#include <cmath>
#include <memory>

#include "sentiflow/common/error.hpp"

namespace sentiflow::models {

Var ParamStore::add(const std::string& name, Shape shape, std::vector<double> values) {
    for (const auto& [n, _] : entries_)
        if (n == name) throw ValidationError("duplicate parameter '" + name + "'");
    Var v = nn::leaf(std::move(shape), std::move(values));
    entries_.emplace_back(name, v);
    return v;
}

Var ParamStore::add_uniform(const std::string& name, Shape shape, double bound, Rng& rng) {
    std::vector<double> v(nn::numel(shape));
    for (auto& x : v) x = rng.uniform(-bound, bound);
    return add(name, std::move(shape), std::move(v));
}

Var ParamStore::add_normal(const std::string& name, Shape shape, double sd, Rng& rng) {
    std::vector<double> v(nn::numel(shape));
    for (auto& x : v) x = sd * rng.normal();
    return add(name, std::move(shape), std::move(v));
}

Var ParamStore::add_constant(const std::string& name, Shape shape, double value) {
    const auto n = nn::numel(shape);
    return add(name, std::move(shape), std::vector<double>(n, value));
}

Var ParamStore::get(const std::string& name) const {
    for (const auto& [n, v] : entries_)
        if (n == name) return v;
    throw ValidationError("no parameter named '" + name + "'");
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.second.size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& e : entries_) e.second.node()->grad.clear();
}

Var permute(const Var& a, const std::vector<std::size_t>& perm) {
    const auto& s = a.shape();
    if (perm.size() != s.size()) throw ValidationError("permute: rank mismatch");
    const std::size_t rank = s.size();
    std::vector<std::size_t> in_stride(rank, 1);
    for (std::size_t i = rank; i-- > 1;) in_stride[i - 1] = in_stride[i] * s[i];
    Shape out_shape(rank);
    for (std::size_t i = 0; i < rank; ++i) out_shape[i] = s.at(perm[i]);
    auto index = std::make_shared<std::vector<std::int64_t>>(a.size());
    std::vector<std::size_t> pos(rank, 0);
    for (std::size_t flat = 0; flat < index->size(); ++flat) {
        std::size_t src = 0;
        for (std::size_t i = 0; i < rank; ++i) src += pos[i] * in_stride[perm[i]];
        (*index)[flat] = static_cast<std::int64_t>(src);
        for (std::size_t i = rank; i-- > 0;) {
            if (++pos[i] < out_shape[i]) break;
            pos[i] = 0;
        }
    }
    return nn::gather(a, std::move(index), std::move(out_shape));
}

Linear::Linear(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    weight = ps.add_uniform(name + ".weight", {in, out}, bound, rng);
    bias = ps.add_uniform(name + ".bias", {out}, bound, rng);
}

Var Linear::operator()(const Var& x) const { return nn::add_broadcast(nn::matmul(x, weight), bias); }

LayerNorm::LayerNorm(ParamStore& ps, const std::string& name, std::size_t dim) {
    gamma = ps.add_constant(name + ".gamma", {dim}, 1.0);
    beta = ps.add_constant(name + ".beta", {dim}, 0.0);
}

Var LayerNorm::operator()(const Var& x) const { return nn::layer_norm(x, gamma, beta); }

EncoderLayer::EncoderLayer(ParamStore& ps, const std::string& name, std::size_t d_model, std::size_t heads,
                           std::size_t d_ff, Rng& rng)
    : d_model_(d_model), heads_(heads) {
    if (heads == 0 || d_model % heads != 0)
        throw ValidationError("hidden_dim " + std::to_string(d_model) + " is not divisible by num_heads " +
                              std::to_string(heads));
    q_ = Linear(ps, name + ".q", d_model, d_model, rng);
    k_ = Linear(ps, name + ".k", d_model, d_model, rng);
    v_ = Linear(ps, name + ".v", d_model, d_model, rng);
    o_ = Linear(ps, name + ".o", d_model, d_model, rng);
    ln1_ = LayerNorm(ps, name + ".ln1", d_model);
    ff1_ = Linear(ps, name + ".ff1", d_model, d_ff, rng);
    ff2_ = Linear(ps, name + ".ff2", d_ff, d_model, rng);
    ln2_ = LayerNorm(ps, name + ".ln2", d_model);
}

Var EncoderLayer::operator()(const Var& x) const {
    const std::size_t g = x.dim(0), n = x.dim(1), dh = d_model_ / heads_;
    auto split_heads = [&](const Var& t) {
        return nn::reshape(permute(nn::reshape(t, {g, n, heads_, dh}), {0, 2, 1, 3}), {g * heads_, n, dh});
    };
    const Var q = split_heads(q_(x));
    const Var k = split_heads(k_(x));
    const Var v = split_heads(v_(x));
    const Var att = nn::softmax_last(nn::scale(nn::bmm(q, k, true), 1.0 / std::sqrt(static_cast<double>(dh))));
    Var ctx = nn::bmm(att, v);
    ctx = nn::reshape(permute(nn::reshape(ctx, {g, heads_, n, dh}), {0, 2, 1, 3}), {g, n, d_model_});
    const Var h = ln1_(nn::add(x, o_(ctx)));
    return ln2_(nn::add(h, ff2_(nn::gelu(ff1_(h)))));
}

}  // namespace sentiflow::models
