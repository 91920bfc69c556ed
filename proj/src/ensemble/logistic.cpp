#include <cmath>

#include "classifiers.hpp"
#include "sentiflow/common/error.hpp"

namespace sentiflow::ensemble::detail {
namespace {

constexpr int K = sentiment::kNumLabels;

class LogisticRegression final : public Classifier {
public:
    LogisticRegression(std::size_t dim, std::vector<double> weights) : dim_(dim), w_(std::move(weights)) {}

    StackerKind kind() const override { return StackerKind::logistic_regression; }
    std::size_t input_dim() const override { return dim_; }
    bool has_probabilities() const override { return true; }

    ClassScores scores(std::span<const double> x) const override {
        ClassScores z{};
        for (int c = 0; c < K; ++c) {
            const double* wc = &w_[static_cast<std::size_t>(c) * (dim_ + 1)];
            double s = wc[dim_];
            for (std::size_t f = 0; f < dim_; ++f) s += wc[f] * x[f];
            z[c] = s;
        }
        const double m = std::max({z[0], z[1], z[2]});
        double total = 0.0;
        for (auto& v : z) total += (v = std::exp(v - m));
        for (auto& v : z) v /= total;
        return z;
    }

    nlohmann::json to_json() const override { return {{"dim", dim_}, {"weights", w_}}; }

private:
    std::size_t dim_;
    std::vector<double> w_;  // K rows of (dim weights, bias)
};

}  // namespace

// Multinomial logistic regression, objective
//   (1/n) * sum CE + ||W||^2 / (2 C n)   (bias unpenalized),
// minimized by gradient descent with a fixed step of 1/L, where L bounds the
// Hessian's largest eigenvalue.
std::unique_ptr<Classifier> fit_logistic(const Matrix& x, std::span<const sentiment::Label> y,
                                         const LogisticParams& params) {
    const std::size_t n = x.size();
    const std::size_t d = x.front().size();
    const std::size_t stride = d + 1;
    std::vector<double> w(K * stride, 0.0), grad(K * stride);
    const double reg = 1.0 / (params.c * static_cast<double>(n));

    double max_sq = 0.0;
    for (const auto& row : x) {
        double s = 1.0;
        for (double v : row) s += v * v;
        max_sq = std::max(max_sq, s);
    }
    const double step = 1.0 / (0.5 * max_sq + reg);

    for (int iter = 0; iter < params.max_iter; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double z[K];
            for (int c = 0; c < K; ++c) {
                const double* wc = &w[c * stride];
                double s = wc[d];
                for (std::size_t f = 0; f < d; ++f) s += wc[f] * x[i][f];
                z[c] = s;
            }
            const double m = std::max({z[0], z[1], z[2]});
            double total = 0.0;
            for (double& v : z) total += (v = std::exp(v - m));
            for (int c = 0; c < K; ++c) {
                const double r = z[c] / total - (sentiment::index(y[i]) == c ? 1.0 : 0.0);
                double* gc = &grad[c * stride];
                for (std::size_t f = 0; f < d; ++f) gc[f] += r * x[i][f];
                gc[d] += r;
            }
        }
        double gnorm = 0.0;
        for (int c = 0; c < K; ++c) {
            for (std::size_t f = 0; f < stride; ++f) {
                double& g = grad[c * stride + f];
                g /= static_cast<double>(n);
                if (f < d) g += reg * w[c * stride + f];
                gnorm = std::max(gnorm, std::abs(g));
            }
        }
        if (gnorm < params.tolerance) break;
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= step * grad[k];
    }
    return std::make_unique<LogisticRegression>(d, std::move(w));
}

std::unique_ptr<Classifier> logistic_from_json(const nlohmann::json& j) {
    auto w = j.at("weights").get<std::vector<double>>();
    const auto dim = j.at("dim").get<std::size_t>();
    if (w.size() != K * (dim + 1)) throw FormatError("logistic regression: weight count mismatch");
    return std::make_unique<LogisticRegression>(dim, std::move(w));
}

}  // namespace sentiflow::ensemble::detail
