#include <algorithm>
#include <cmath>
#include <numeric>

#include "classifiers.hpp"
#include "sentiflow/common/error.hpp"
#include "sentiflow/common/rng.hpp"

namespace sentiflow::ensemble::detail {
namespace {

constexpr int K = sentiment::kNumLabels;

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    ClassScores proba{};
};

using Tree = std::vector<TreeNode>;

double gini(const std::array<double, K>& counts, double total) {
    if (total <= 0.0) return 0.0;
    double s = 1.0;
    for (double c : counts) s -= (c / total) * (c / total);
    return s;
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, std::span<const sentiment::Label> y, const ForestParams& p, Rng& rng)
        : x_(x), y_(y), params_(p), rng_(rng), dim_(x.front().size()) {
        max_features_ = p.max_features > 0 ? static_cast<std::size_t>(p.max_features)
                                            : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(dim_))));
        max_features_ = std::min(max_features_, dim_);
    }

    Tree build(std::vector<std::size_t> sample) {
        Tree tree;
        struct Pending {
            int node;
            std::vector<std::size_t> idx;
            int depth;
        };
        std::vector<Pending> stack;
        tree.emplace_back();
        stack.push_back({0, std::move(sample), 0});
        while (!stack.empty()) {
            auto job = std::move(stack.back());
            stack.pop_back();
            std::array<double, K> counts{};
            for (auto i : job.idx) counts[sentiment::index(y_[i])] += 1.0;
            const double total = static_cast<double>(job.idx.size());
            TreeNode& node = tree[job.node];
            for (int c = 0; c < K; ++c) node.proba[c] = counts[c] / total;

            const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
            const bool depth_ok = params_.max_depth <= 0 || job.depth < params_.max_depth;
            if (pure || !depth_ok || job.idx.size() < static_cast<std::size_t>(params_.min_samples_split)) continue;

            const auto split = find_split(job.idx, counts);
            if (split.feature < 0) continue;

            std::vector<std::size_t> left, right;
            for (auto i : job.idx) (x_[i][split.feature] <= split.threshold ? left : right).push_back(i);
            const int li = static_cast<int>(tree.size());
            tree.emplace_back();
            tree.emplace_back();
            tree[job.node].feature = split.feature;
            tree[job.node].threshold = split.threshold;
            tree[job.node].left = li;
            tree[job.node].right = li + 1;
            stack.push_back({li + 1, std::move(right), job.depth + 1});
            stack.push_back({li, std::move(left), job.depth + 1});
        }
        return tree;
    }

private:
    // Examines at least max_features randomly ordered features, continuing
    // past that until a valid split is found or features run out.
    SplitChoice find_split(const std::vector<std::size_t>& idx, const std::array<double, K>& parent_counts) {
        std::vector<std::size_t> features(dim_);
        std::iota(features.begin(), features.end(), 0);
        rng_.shuffle(features);
        SplitChoice best;
        best.impurity = gini(parent_counts, static_cast<double>(idx.size()));
        std::vector<std::pair<double, int>> column(idx.size());
        const double n = static_cast<double>(idx.size());
        for (std::size_t visited = 0; visited < dim_; ++visited) {
            if (visited >= max_features_ && best.feature >= 0) break;
            const std::size_t f = features[visited];
            for (std::size_t k = 0; k < idx.size(); ++k) column[k] = {x_[idx[k]][f], sentiment::index(y_[idx[k]])};
            std::sort(column.begin(), column.end());
            if (column.front().first == column.back().first) continue;
            std::array<double, K> left{};
            std::array<double, K> right = parent_counts;
            for (std::size_t k = 0; k + 1 < column.size(); ++k) {
                left[column[k].second] += 1.0;
                right[column[k].second] -= 1.0;
                if (column[k].first == column[k + 1].first) continue;
                const double nl = static_cast<double>(k + 1);
                const double nr = n - nl;
                const double imp = (nl * gini(left, nl) + nr * gini(right, nr)) / n;
                if (imp < best.impurity - 1e-12) {
                    best.impurity = imp;
                    best.feature = static_cast<int>(f);
                    best.threshold = 0.5 * (column[k].first + column[k + 1].first);
                }
            }
        }
        return best;
    }

    const Matrix& x_;
    std::span<const sentiment::Label> y_;
    const ForestParams& params_;
    Rng& rng_;
    std::size_t dim_;
    std::size_t max_features_;
};

class RandomForest final : public Classifier {
public:
    RandomForest(std::size_t dim, std::vector<Tree> trees) : dim_(dim), trees_(std::move(trees)) {}

    StackerKind kind() const override { return StackerKind::random_forest; }
    std::size_t input_dim() const override { return dim_; }
    bool has_probabilities() const override { return true; }

    ClassScores scores(std::span<const double> x) const override {
        ClassScores acc{};
        for (const auto& tree : trees_) {
            int node = 0;
            while (tree[node].feature >= 0)
                node = x[tree[node].feature] <= tree[node].threshold ? tree[node].left : tree[node].right;
            for (int c = 0; c < K; ++c) acc[c] += tree[node].proba[c];
        }
        for (auto& v : acc) v /= static_cast<double>(trees_.size());
        return acc;
    }

    nlohmann::json to_json() const override {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& tree : trees_) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const auto& n : tree)
                nodes.push_back({n.feature, n.threshold, n.left, n.right, n.proba[0], n.proba[1], n.proba[2]});
            trees.push_back(std::move(nodes));
        }
        return {{"dim", dim_}, {"trees", std::move(trees)}};
    }

    static std::unique_ptr<Classifier> from_json(const nlohmann::json& j) {
        std::vector<Tree> trees;
        for (const auto& t : j.at("trees")) {
            Tree tree;
            for (const auto& n : t) {
                TreeNode node;
                node.feature = n.at(0).get<int>();
                node.threshold = n.at(1).get<double>();
                node.left = n.at(2).get<int>();
                node.right = n.at(3).get<int>();
                for (int c = 0; c < K; ++c) node.proba[c] = n.at(4 + c).get<double>();
                tree.push_back(node);
            }
            if (tree.empty()) throw FormatError("random forest: empty tree");
            trees.push_back(std::move(tree));
        }
        if (trees.empty()) throw FormatError("random forest: no trees");
        return std::make_unique<RandomForest>(j.at("dim").get<std::size_t>(), std::move(trees));
    }

private:
    std::size_t dim_;
    std::vector<Tree> trees_;
};

}  // namespace

std::unique_ptr<Classifier> fit_forest(const Matrix& x, std::span<const sentiment::Label> y,
                                       const ForestParams& params, std::uint64_t seed) {
    if (params.n_trees <= 0) throw ValidationError("random forest: n_trees must be positive");
    Rng rng(seed);
    std::vector<Tree> trees;
    trees.reserve(params.n_trees);
    const std::size_t n = x.size();
    for (int t = 0; t < params.n_trees; ++t) {
        std::vector<std::size_t> sample(n);
        for (auto& s : sample) s = rng.index(n);
        TreeBuilder builder(x, y, params, rng);
        trees.push_back(builder.build(std::move(sample)));
    }
    return std::make_unique<RandomForest>(x.front().size(), std::move(trees));
}

std::unique_ptr<Classifier> forest_from_json(const nlohmann::json& j) { return RandomForest::from_json(j); }

}  // namespace sentiflow::ensemble::detail
