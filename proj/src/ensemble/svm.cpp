#include <cmath>
#include <limits>

#include "classifiers.hpp"
#include "sentiflow/common/error.hpp"

namespace sentiflow::ensemble::detail {
namespace {

constexpr int K = sentiment::kNumLabels;
constexpr double kTau = 1e-12;

double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::exp(-gamma * s);
}

struct BinaryModel {
    int positive = 0;  // class voted for when decision > 0
    int negative = 1;
    std::vector<std::vector<double>> support;
    std::vector<double> coef;  // y_i * alpha_i
    double rho = 0.0;

    double decision(std::span<const double> x, double gamma) const {
        double s = -rho;
        for (std::size_t i = 0; i < support.size(); ++i) s += coef[i] * rbf(support[i], x, gamma);
        return s;
    }
};

// Dual C-SVC solved by SMO with second-order working-set selection
// (Fan, Chen & Lin). Kernel rows are recomputed on demand.
BinaryModel solve_binary(const std::vector<const std::vector<double>*>& rows, const std::vector<double>& y, double c,
                         double gamma, double eps) {
    const std::size_t n = rows.size();
    std::vector<double> alpha(n, 0.0), grad(n, -1.0);
    std::vector<double> qi(n), qj(n);
    auto kernel_row = [&](std::size_t i, std::vector<double>& out) {
        for (std::size_t t = 0; t < n; ++t) out[t] = y[i] * y[t] * rbf(*rows[i], *rows[t], gamma);
    };
    auto upper = [&](std::size_t t) { return alpha[t] >= c; };
    auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

    const std::size_t max_iter = std::max<std::size_t>(10'000'000, 100 * n);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        double gmax = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t i = -1;
        for (std::size_t t = 0; t < n; ++t) {
            if (y[t] > 0) {
                if (!upper(t) && -grad[t] >= gmax) gmax = -grad[t], i = static_cast<std::ptrdiff_t>(t);
            } else {
                if (!lower(t) && grad[t] >= gmax) gmax = grad[t], i = static_cast<std::ptrdiff_t>(t);
            }
        }
        if (i < 0) break;
        kernel_row(static_cast<std::size_t>(i), qi);
        const double yi = y[i];

        double gmax2 = -std::numeric_limits<double>::infinity();
        double best_obj = std::numeric_limits<double>::infinity();
        std::ptrdiff_t j = -1;
        for (std::size_t t = 0; t < n; ++t) {
            if (y[t] > 0) {
                if (lower(t)) continue;
                const double diff = gmax + grad[t];
                gmax2 = std::max(gmax2, grad[t]);
                if (diff > 0) {
                    double quad = 2.0 - 2.0 * yi * qi[t];
                    if (quad <= 0) quad = kTau;
                    const double obj = -(diff * diff) / quad;
                    if (obj <= best_obj) best_obj = obj, j = static_cast<std::ptrdiff_t>(t);
                }
            } else {
                if (upper(t)) continue;
                const double diff = gmax - grad[t];
                gmax2 = std::max(gmax2, -grad[t]);
                if (diff > 0) {
                    double quad = 2.0 + 2.0 * yi * qi[t];
                    if (quad <= 0) quad = kTau;
                    const double obj = -(diff * diff) / quad;
                    if (obj <= best_obj) best_obj = obj, j = static_cast<std::ptrdiff_t>(t);
                }
            }
        }
        if (gmax + gmax2 < eps || j < 0) break;
        kernel_row(static_cast<std::size_t>(j), qj);

        const double old_ai = alpha[i], old_aj = alpha[j];
        double& ai = alpha[i];
        double& aj = alpha[j];
        if (y[i] != y[j]) {
            double quad = 2.0 + 2.0 * qi[j];
            if (quad <= 0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0) {
                if (aj < 0) aj = 0, ai = diff;
            } else {
                if (ai < 0) ai = 0, aj = -diff;
            }
            if (diff > 0) {
                if (ai > c) ai = c, aj = c - diff;
            } else {
                if (aj > c) aj = c, ai = c + diff;
            }
        } else {
            double quad = 2.0 - 2.0 * qi[j];
            if (quad <= 0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > c) {
                if (ai > c) ai = c, aj = sum - c;
            } else {
                if (aj < 0) aj = 0, ai = sum;
            }
            if (sum > c) {
                if (aj > c) aj = c, ai = sum - c;
            } else {
                if (ai < 0) ai = 0, aj = sum;
            }
        }
        const double dai = ai - old_ai, daj = aj - old_aj;
        for (std::size_t t = 0; t < n; ++t) grad[t] += qi[t] * dai + qj[t] * daj;
    }

    double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
    int nr_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (upper(t)) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++nr_free;
            sum_free += yg;
        }
    }
    BinaryModel m;
    m.rho = nr_free > 0 ? sum_free / nr_free : 0.5 * (ub + lb);
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 0.0) {
            m.support.push_back(*rows[t]);
            m.coef.push_back(y[t] * alpha[t]);
        }
    }
    return m;
}

class Svm final : public Classifier {
public:
    Svm(std::size_t dim, double gamma, std::vector<BinaryModel> pairs)
        : dim_(dim), gamma_(gamma), pairs_(std::move(pairs)) {}

    StackerKind kind() const override { return StackerKind::svm; }
    std::size_t input_dim() const override { return dim_; }
    bool has_probabilities() const override { return false; }

    // One-vs-one vote shares.
    ClassScores scores(std::span<const double> x) const override {
        ClassScores votes{};
        for (const auto& m : pairs_) votes[m.decision(x, gamma_) > 0 ? m.positive : m.negative] += 1.0;
        for (auto& v : votes) v /= static_cast<double>(pairs_.size());
        return votes;
    }

    nlohmann::json to_json() const override {
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& m : pairs_)
            pairs.push_back({{"positive", m.positive},
                             {"negative", m.negative},
                             {"rho", m.rho},
                             {"coef", m.coef},
                             {"support", m.support}});
        return {{"dim", dim_}, {"gamma", gamma_}, {"pairs", std::move(pairs)}};
    }

    static std::unique_ptr<Classifier> from_json(const nlohmann::json& j) {
        std::vector<BinaryModel> pairs;
        for (const auto& p : j.at("pairs")) {
            BinaryModel m;
            m.positive = p.at("positive").get<int>();
            m.negative = p.at("negative").get<int>();
            m.rho = p.at("rho").get<double>();
            m.coef = p.at("coef").get<std::vector<double>>();
            m.support = p.at("support").get<std::vector<std::vector<double>>>();
            if (m.coef.size() != m.support.size()) throw FormatError("svm: support/coef mismatch");
            pairs.push_back(std::move(m));
        }
        if (pairs.empty()) throw FormatError("svm: no binary models");
        return std::make_unique<Svm>(j.at("dim").get<std::size_t>(), j.at("gamma").get<double>(), std::move(pairs));
    }

private:
    std::size_t dim_;
    double gamma_;
    std::vector<BinaryModel> pairs_;
};

}  // namespace

std::unique_ptr<Classifier> fit_svm(const Matrix& x, std::span<const sentiment::Label> y, const SvmParams& params) {
    const std::size_t d = x.front().size();
    double gamma = params.gamma;
    if (gamma <= 0.0) {
        double sum = 0.0, sq = 0.0;
        const double count = static_cast<double>(x.size() * d);
        for (const auto& row : x)
            for (double v : row) sum += v, sq += v * v;
        const double mean = sum / count;
        const double var = sq / count - mean * mean;
        gamma = var > 0.0 ? 1.0 / (static_cast<double>(d) * var) : 1.0;
    }
    std::vector<BinaryModel> pairs;
    for (int a = 0; a < K; ++a) {
        for (int b = a + 1; b < K; ++b) {
            std::vector<const std::vector<double>*> rows;
            std::vector<double> signs;
            bool has_a = false, has_b = false;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const int c = sentiment::index(y[i]);
                if (c == a) rows.push_back(&x[i]), signs.push_back(1.0), has_a = true;
                if (c == b) rows.push_back(&x[i]), signs.push_back(-1.0), has_b = true;
            }
            if (!has_a || !has_b) continue;
            auto m = solve_binary(rows, signs, params.c, gamma, params.tolerance);
            m.positive = a;
            m.negative = b;
            pairs.push_back(std::move(m));
        }
    }
    if (pairs.empty()) throw ValidationError("degenerate training labels");
    return std::make_unique<Svm>(d, gamma, std::move(pairs));
}

std::unique_ptr<Classifier> svm_from_json(const nlohmann::json& j) { return Svm::from_json(j); }

}  // namespace sentiflow::ensemble::detail
