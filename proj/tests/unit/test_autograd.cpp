#include <doctest.h>

#include <cmath>
#include <memory>

#include "gradcheck.hpp"
#include "sentiflow/common/error.hpp"
#include "sentiflow/models/autograd.hpp"

using namespace sentiflow;
using nn::Var;

namespace {

Var random_leaf(nn::Shape shape, Rng& rng, double scale = 1.0) {
    std::vector<double> v(nn::numel(shape));
    for (auto& x : v) x = scale * rng.normal();
    return nn::leaf(std::move(shape), std::move(v));
}

void check_op(const std::function<Var(const std::vector<Var>&)>& op, std::vector<Var> inputs, std::uint64_t seed = 1) {
    Rng proj_rng(seed);
    const Var probe = op(inputs);
    std::vector<double> w(probe.size());
    for (auto& x : w) x = proj_rng.normal();
    const auto shape = probe.shape();
    auto loss = [&] {
        const Var out = op(inputs);
        return nn::mean_axis(nn::reshape(nn::mul(out, nn::constant(shape, w)), {out.size()}), 0);
    };
    Rng rng(seed + 7);
    const auto r = testutil::grad_check(loss, inputs, 1000, rng);
    CHECK(r.checked > 0);
    CHECK(r.max_rel_error < 1e-5);
}

}  // namespace

TEST_CASE("forward values of basic ops") {
    const Var a = nn::constant({2, 3}, {1, 2, 3, 4, 5, 6});
    const Var w = nn::constant({3, 2}, {1, 0, 0, 1, 1, 1});
    const Var y = nn::matmul(a, w);
    CHECK(y.shape() == nn::Shape{2, 2});
    CHECK(std::vector<double>(y.value().begin(), y.value().end()) == std::vector<double>{4, 5, 10, 11});

    const Var s = nn::slice(a, 1, 1, 2);
    CHECK(std::vector<double>(s.value().begin(), s.value().end()) == std::vector<double>{2, 3, 5, 6});
    const Var c = nn::concat({s, a}, 1);
    CHECK(c.shape() == nn::Shape{2, 5});
    CHECK(c.value()[2] == 1.0);
    const Var m = nn::mean_axis(a, 0);
    CHECK(std::vector<double>(m.value().begin(), m.value().end()) == std::vector<double>{2.5, 3.5, 4.5});

    const Var sm = nn::softmax_last(nn::constant({1, 2}, {0.0, 0.0}));
    CHECK(sm.value()[0] == doctest::Approx(0.5));
}

TEST_CASE("shape errors are reported") {
    const Var a = nn::constant({2, 3}, std::vector<double>(6, 1.0));
    CHECK_THROWS_AS(nn::matmul(a, a), ValidationError);
    CHECK_THROWS_AS(nn::add(a, nn::zeros({3, 2})), ValidationError);
    CHECK_THROWS_AS(nn::reshape(a, {4}), ValidationError);
    CHECK_THROWS_AS(nn::slice(a, 1, 2, 2), ValidationError);
    CHECK_THROWS_AS(nn::backward(a), ValidationError);
}

TEST_CASE("gradients of elementwise ops match finite differences") {
    Rng rng(3);
    const auto x = random_leaf({3, 4}, rng);
    const auto y = random_leaf({3, 4}, rng);
    check_op([](auto& v) { return nn::add(v[0], v[1]); }, {x, y});
    check_op([](auto& v) { return nn::sub(v[0], v[1]); }, {x, y});
    check_op([](auto& v) { return nn::mul(v[0], v[1]); }, {x, y});
    check_op([](auto& v) { return nn::scale(v[0], -2.5); }, {x});
    check_op([](auto& v) { return nn::sigmoid(v[0]); }, {x});
    check_op([](auto& v) { return nn::tanh(v[0]); }, {x});
    check_op([](auto& v) { return nn::gelu(v[0]); }, {x});
    check_op([](auto& v) { return nn::relu(v[0]); }, {x});
    check_op([](auto& v) { return nn::softmax_last(v[0]); }, {x});
}

TEST_CASE("gradients of shape and broadcast ops") {
    Rng rng(4);
    const auto x = random_leaf({2, 3, 4}, rng);
    const auto b = random_leaf({3, 4}, rng);
    const auto s = random_leaf({2}, rng);
    check_op([](auto& v) { return nn::reshape(v[0], {6, 4}); }, {x});
    check_op([](auto& v) { return nn::slice(v[0], 1, 1, 2); }, {x});
    check_op([](auto& v) { return nn::concat({v[0], nn::slice(v[0], 2, 0, 1)}, 2); }, {x});
    check_op([](auto& v) { return nn::mean_axis(v[0], 1); }, {x});
    check_op([](auto& v) { return nn::add_broadcast(v[0], v[1]); }, {x, b});
    check_op([](auto& v) { return nn::scale_rows(v[0], v[1]); }, {x, s});
    auto idx = std::make_shared<std::vector<std::int64_t>>(std::vector<std::int64_t>{0, 5, 5, -1, 23, 7});
    check_op([idx](auto& v) { return nn::gather(v[0], idx, {2, 3}); }, {x});
}

TEST_CASE("gradients of linear algebra ops") {
    Rng rng(5);
    const auto a = random_leaf({2, 3, 4}, rng);
    const auto w = random_leaf({4, 5}, rng);
    const auto b = random_leaf({2, 4, 3}, rng);
    const auto bt = random_leaf({2, 5, 4}, rng);
    check_op([](auto& v) { return nn::matmul(v[0], v[1]); }, {a, w});
    check_op([](auto& v) { return nn::bmm(v[0], v[1]); }, {a, b});
    check_op([](auto& v) { return nn::bmm(v[0], v[1], true); }, {a, bt});
}

TEST_CASE("gradients of layer norm, conv2d and dft amplitude") {
    Rng rng(6);
    const auto x = random_leaf({2, 3, 5}, rng);
    const auto g = random_leaf({5}, rng);
    const auto be = random_leaf({5}, rng);
    check_op([](auto& v) { return nn::layer_norm(v[0], v[1], v[2]); }, {x, g, be});

    const auto img = random_leaf({2, 2, 3, 4}, rng);
    const auto k = random_leaf({3, 2, 3, 3}, rng);
    const auto kb = random_leaf({3}, rng);
    check_op([](auto& v) { return nn::conv2d(v[0], v[1], v[2]); }, {img, k, kb});

    const auto seq = random_leaf({2, 8, 3}, rng);
    check_op([](auto& v) { return nn::dft_amplitude(v[0], {1, 3}); }, {seq});
}

TEST_CASE("dft amplitude matches a direct transform") {
    // x_t = cos(2 pi 2 t / 8): |X_2| = 4
    std::vector<double> v(8);
    for (std::size_t t = 0; t < 8; ++t) v[t] = std::cos(2 * M_PI * 2 * static_cast<double>(t) / 8);
    const Var a = nn::dft_amplitude(nn::constant({1, 8, 1}, v), {1, 2});
    CHECK(a.value()[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(a.value()[1] == doctest::Approx(4.0));
}

TEST_CASE("losses") {
    const Var z = nn::leaf({3}, {0.0, 2.0, -1.0});
    const std::vector<double> y = {1.0, 0.0, 0.0};
    const Var l = nn::bce_with_logits(z, y);
    const double expect = (std::log(2.0) + std::log1p(std::exp(2.0)) + std::log1p(std::exp(-1.0))) / 3.0;
    CHECK(l.item() == doctest::Approx(expect));
    nn::backward(l);
    CHECK(z.grad()[0] == doctest::Approx((0.5 - 1.0) / 3.0));

    const Var p = nn::leaf({2}, {1.0, 3.0});
    const std::vector<double> t = {0.0, 1.0};
    const Var m = nn::mse(p, t);
    CHECK(m.item() == doctest::Approx(2.5));
    nn::backward(m);
    CHECK(p.grad()[1] == doctest::Approx(2.0));
}

TEST_CASE("no-grad guard builds no graph") {
    const Var x = nn::leaf({2}, {1.0, 2.0});
    {
        nn::NoGradGuard guard;
        CHECK_FALSE(nn::grad_enabled());
        const Var y = nn::scale(x, 2.0);
        CHECK_FALSE(y.requires_grad());
    }
    CHECK(nn::grad_enabled());
    CHECK(nn::scale(x, 2.0).requires_grad());
}

TEST_CASE("shared subexpressions accumulate gradients") {
    const Var x = nn::leaf({1}, {3.0});
    const Var y = nn::mul(x, x);  // dy/dx = 2x
    const Var z = nn::add(y, x);  // dz/dx = 2x + 1
    nn::backward(nn::reshape(z, {1}));
    CHECK(x.grad()[0] == doctest::Approx(7.0));
}
