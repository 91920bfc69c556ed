#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gradcheck.hpp"
#include "model_fixtures.hpp"
#include "sentiflow/common/error.hpp"
#include "sentiflow/models/model.hpp"
#include "sentiflow/models/train.hpp"

using namespace sentiflow;
using namespace sentiflow::models;

namespace {

ModelConfig tiny(Arch arch, Task task = Task::classification) {
    ModelConfig c;
    c.arch = arch;
    c.task = task;
    c.hidden_dim = 8;
    c.num_layers = 1;
    c.num_heads = 2;
    c.patch_len = 8;
    c.patch_stride = 4;
    c.top_k_periods = 2;
    c.epochs = 5;
    c.batch_size = 16;
    c.learning_rate = 5e-3;
    c.seed = 11;
    return c;
}

std::vector<double> random_inputs(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform();
    return v;
}

}  // namespace

TEST_CASE("every arch maps [B, 30, F] to [B]") {
    Rng rng(1);
    for (Arch a : kAllArchs) {
        CAPTURE(to_string(a));
        const auto model = build_model(tiny(a), 11);
        const nn::Var out = model->output(nn::constant({4, 30, 11}, random_inputs(4 * 30 * 11, rng)));
        CHECK(out.shape() == nn::Shape{4});
        for (double p : out.value()) CHECK((p >= 0.0 && p <= 1.0));
    }
}

TEST_CASE("patch arithmetic") {
    CHECK(patch_count(30, 8, 4) == 6);
    CHECK(patch_count(8, 4, 2) == 3);
    CHECK(patch_count(30, 30, 1) == 1);
    CHECK_THROWS_AS(patch_count(30, 31, 4), ValidationError);
}

TEST_CASE("timesnet finds the period of a pure sine") {
    std::vector<double> x(30);
    for (std::size_t t = 0; t < 30; ++t) x[t] = std::sin(2 * M_PI * static_cast<double>(t) / 10.0);
    const auto periods = timesnet_periods(x, 1, 30, 1, 2);
    REQUIRE(periods.size() == 2);
    CHECK(periods[0].period == 10);
    CHECK(periods[0].frequency == 3);
}

TEST_CASE("config validation") {
    ModelConfig c = tiny(Arch::patchtst);
    c.hidden_dim = 0;
    c.patch_len = 0;
    try {
        c.validate();
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("hidden_dim") != std::string::npos);
        CHECK(msg.find("patch_len") != std::string::npos);
    }
    ModelConfig lstm = tiny(Arch::lstm);
    lstm.patch_len = 0;  // unused by lstm
    CHECK_NOTHROW(lstm.validate());

    CHECK_THROWS_AS(ModelConfig::from_json({{"arch", "lstm"}, {"patch_len", 8}}), ValidationError);
    CHECK_THROWS_AS(ModelConfig::from_json({{"arch", "timesnet"}, {"colour", 1}}), ValidationError);
    CHECK_THROWS_AS(ModelConfig::from_json({{"arch", "gru"}}), ValidationError);
    const auto rt = ModelConfig::from_json(tiny(Arch::timesnet).to_json());
    CHECK(rt.to_json() == tiny(Arch::timesnet).to_json());

    ModelConfig heads = tiny(Arch::patchtst);
    heads.num_heads = 3;
    CHECK_THROWS_AS(build_model(heads, 3), ValidationError);
    ModelConfig big_patch = tiny(Arch::tpatchgnn);
    big_patch.patch_len = 40;
    CHECK_THROWS_AS(build_model(big_patch, 3), ValidationError);
}

TEST_CASE("analytic parameter gradients match finite differences") {
    for (Arch a : kAllArchs) {
        for (Task task : {Task::classification, Task::regression}) {
            CAPTURE(to_string(a));
            CAPTURE(to_string(task));
            ModelConfig c = tiny(a, task);
            c.hidden_dim = 4;
            c.patch_len = 4;
            c.patch_stride = 2;
            c.num_layers = a == Arch::lstm ? 2 : 1;
            const auto model = build_model(c, 3, 8);
            Rng rng(99);
            const nn::Var x = nn::constant({2, 8, 3}, random_inputs(2 * 8 * 3, rng));
            const std::vector<double> y = task == Task::classification ? std::vector<double>{1.0, 0.0}
                                                                       : std::vector<double>{0.7, -0.4};
            auto loss = [&] {
                const nn::Var out = model->forward(x);
                return task == Task::classification ? nn::bce_with_logits(out, y) : nn::mse(out, y);
            };
            std::vector<nn::Var> params;
            for (const auto& [_, v] : model->params().entries()) params.push_back(v);
            const auto r = testutil::grad_check(loss, params, 6, rng);
            CHECK(r.checked > 20);
            CHECK(r.max_rel_error < 1e-3);
        }
    }
}

TEST_CASE("patchtst is channel independent") {
    ModelConfig c = tiny(Arch::patchtst);
    const std::size_t f = 3, l = 30, d = c.hidden_dim;
    const std::size_t p = patch_count(l, c.patch_len, c.patch_stride);
    const auto original = build_model(c, f, l);
    const auto permuted = build_model(c, f, l);
    const std::vector<std::size_t> perm = {2, 0, 1};  // new channel k is old channel perm[k]

    auto head_old = original->params().get("head.weight").value();
    auto head_new = permuted->params().get("head.weight");
    const std::size_t block = p * d;
    for (std::size_t k = 0; k < f; ++k)
        for (std::size_t i = 0; i < block; ++i) head_new.mutable_value()[k * block + i] = head_old[perm[k] * block + i];

    Rng rng(5);
    const auto x = random_inputs(2 * l * f, rng);
    std::vector<double> xp(x.size());
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t t = 0; t < l; ++t)
            for (std::size_t k = 0; k < f; ++k) xp[(b * l + t) * f + k] = x[(b * l + t) * f + perm[k]];
    const auto y0 = predict(*original, x, 2);
    const auto y1 = predict(*permuted, xp, 2);
    for (std::size_t i = 0; i < 2; ++i) CHECK(y1[i] == doctest::Approx(y0[i]).epsilon(1e-12));
}

TEST_CASE("seed changes parameters only") {
    ModelConfig a = tiny(Arch::lstm);
    ModelConfig b = a;
    b.seed = a.seed + 1;
    const auto ma = build_model(a, 4);
    const auto mb = build_model(b, 4);
    const auto wa = ma->params().entries().front().second.value();
    const auto wb = mb->params().entries().front().second.value();
    CHECK_FALSE(std::equal(wa.begin(), wa.end(), wb.begin()));
    CHECK(dataset::temporal_split(400) == dataset::temporal_split(400));
}

TEST_CASE("training is deterministic for a seed") {
    const auto tr = testutil::separable_samples(64, 30, 3, 1);
    const auto va = testutil::separable_samples(32, 30, 3, 2);
    for (Arch a : kAllArchs) {
        CAPTURE(to_string(a));
        ModelConfig c = tiny(a);
        c.epochs = 2;
        const auto r1 = train(build_model(c, 3), tr, va);
        const auto r2 = train(build_model(c, 3), tr, va);
        REQUIRE(r1.history.size() == 2);
        CHECK(r1.history.back().val_loss == r2.history.back().val_loss);
        CHECK(r1.final_train_loss == r2.final_train_loss);
    }
}

TEST_CASE("regression on noiseless AR(1) halves the training loss") {
    const auto tr = testutil::ar1_samples(160, 30, 0.9, 3);
    const auto va = testutil::ar1_samples(40, 30, 0.9, 4);
    ModelConfig c = tiny(Arch::lstm, Task::regression);
    c.epochs = 15;
    const auto r = train(build_model(c, 1), tr, va);
    CHECK(r.final_train_loss < 0.5 * r.initial_train_loss);
    CHECK(r.history.size() <= c.epochs);
    double min_val = INFINITY;
    for (const auto& h : r.history) min_val = std::min(min_val, h.val_loss);
    CHECK(r.history.at(r.best_epoch - 1).val_loss == min_val);
}

TEST_CASE("classification of a separable task reaches high AUC") {
    const auto tr = testutil::separable_samples(200, 30, 3, 5);
    const auto va = testutil::separable_samples(60, 30, 3, 6);
    ModelConfig c = tiny(Arch::lstm);
    c.epochs = 15;
    const auto r = train(build_model(c, 3), tr, va);
    const auto p = predict(r, va);
    CHECK(testutil::pairwise_auc(p, va.binary) >= 0.9);
}

TEST_CASE("predict contracts") {
    const auto model = build_model(tiny(Arch::lstm), 2);
    CHECK(predict(*model, {}, 0).empty());
    CHECK_THROWS_AS(predict(*model, std::vector<double>(10), 1), ValidationError);
    Rng rng(2);
    auto row = random_inputs(60, rng);
    std::vector<double> twice = row;
    twice.insert(twice.end(), row.begin(), row.end());
    const auto y = predict(*model, twice, 2);
    CHECK(y[0] == y[1]);
}

TEST_CASE("non-finite loss aborts with epoch and batch") {
    auto tr = testutil::separable_samples(20, 30, 2, 1);
    tr.inputs[5] = NAN;
    const auto va = testutil::separable_samples(10, 30, 2, 2);
    try {
        train(build_model(tiny(Arch::lstm), 2), tr, va);
        FAIL("expected an error");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("epoch 1") != std::string::npos);
        CHECK(msg.find("batch") != std::string::npos);
    }
}

TEST_CASE("checkpoint round trip") {
    const auto tr = testutil::separable_samples(32, 30, 2, 1);
    const auto va = testutil::separable_samples(16, 30, 2, 2);
    for (Arch a : kAllArchs) {
        ModelConfig c = tiny(a);
        c.epochs = 1;
        const auto r = train(build_model(c, 2), tr, va, {"close", "volume"});
        const auto path = std::filesystem::temp_directory_path() / ("sentiflow_ckpt_" + to_string(a) + ".json");
        save_checkpoint(path, r);
        const auto back = load_checkpoint(path);
        CHECK(back.feature_names == r.feature_names);
        CHECK(back.best_epoch == r.best_epoch);
        CHECK(predict(back, va) == predict(r, va));
        std::filesystem::remove(path);
    }
}
