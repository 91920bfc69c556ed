#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sentiflow::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& s);
std::string shape_string(const Shape& s);

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // sized on first use
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backward;
    bool requires_grad = false;

    std::vector<double>& ensure_grad();
};

// Handle to a node in the computation graph. Copies share the node.
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    const Shape& shape() const { return node_->shape; }
    std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
    std::size_t size() const { return node_->value.size(); }
    std::span<const double> value() const { return node_->value; }
    std::span<double> mutable_value() { return node_->value; }
    std::span<const double> grad() const { return node_->grad; }
    double item() const { return node_->value.at(0); }
    bool requires_grad() const { return node_->requires_grad; }
    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& ptr() const { return node_; }
    explicit operator bool() const { return static_cast<bool>(node_); }

private:
    std::shared_ptr<Node> node_;
};

Var constant(Shape shape, std::vector<double> values);
Var zeros(Shape shape);
// Leaf that accumulates gradients.
Var leaf(Shape shape, std::vector<double> values);

// Disables graph construction on this thread while alive.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};
bool grad_enabled();

// Reverse-mode sweep from a scalar; gradients accumulate into leaves.
void backward(const Var& loss);

// ---- shape ops ----
Var reshape(const Var& a, Shape shape);
// out[i] = a[index[i]], or 0 where index[i] < 0. Gradients scatter-add back.
Var gather(const Var& a, std::shared_ptr<const std::vector<std::int64_t>> index, Shape shape);
Var slice(const Var& a, std::size_t axis, std::size_t start, std::size_t length);
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var mean_axis(const Var& a, std::size_t axis);

// ---- arithmetic ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
// b's shape must equal a trailing suffix of a's shape; b repeats over the rest.
Var add_broadcast(const Var& a, const Var& b);
// a: [B, ...], s: [B]; every element of sample b is multiplied by s[b].
Var scale_rows(const Var& a, const Var& s);

// ---- linear algebra ----
// a: [..., k], w: [k, m] -> [..., m]
Var matmul(const Var& a, const Var& w);
// a: [G, n, k]; b: [G, k, m] (or [G, m, k] when transpose_b) -> [G, n, m]
Var bmm(const Var& a, const Var& b, bool transpose_b = false);

// ---- nonlinearities ----
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var gelu(const Var& a);  // tanh approximation
Var softmax_last(const Var& a);
Var layer_norm(const Var& a, const Var& gamma, const Var& beta, double eps = 1e-5);

// x: [B, C, H, W], w: [O, C, kh, kw], b: [O]; stride 1, zero "same" padding
// (odd kernel sizes).
Var conv2d(const Var& x, const Var& w, const Var& b);

// x: [B, L, D] -> [B, K]: for each listed frequency f, |DFT_f| along L,
// averaged over D.
Var dft_amplitude(const Var& x, const std::vector<std::size_t>& freqs);

// ---- losses (mean over elements) ----
Var bce_with_logits(const Var& logits, std::span<const double> targets);
Var mse(const Var& pred, std::span<const double> targets);

}  // namespace sentiflow::nn
