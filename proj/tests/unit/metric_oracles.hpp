#pragma once

#include <utility>
#include <vector>

#include "sentiflow/common/rng.hpp"

namespace testutil {

// O(n^2) pairwise AUC: wins plus half ties over positive-negative pairs.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& gold) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (gold[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (gold[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

struct AucInstance {
    std::vector<double> scores;
    std::vector<int> gold;
};

// Both classes present; scores on a coarse grid half the time so ties occur.
inline AucInstance random_auc_instance(sentiflow::Rng& rng, std::size_t max_n) {
    AucInstance inst;
    const std::size_t n = 2 + rng.index(max_n - 1);
    const bool coarse = rng.uniform() < 0.5;
    for (std::size_t i = 0; i < n; ++i) {
        inst.gold.push_back(rng.uniform() < 0.5 ? 1 : 0);
        inst.scores.push_back(coarse ? static_cast<double>(rng.index(5)) / 4.0 : rng.uniform());
    }
    inst.gold[0] = 1;
    inst.gold[1] = 0;
    return inst;
}

inline std::pair<std::vector<int>, std::vector<int>> random_binary_instance(sentiflow::Rng& rng, std::size_t max_n) {
    const std::size_t n = 1 + rng.index(max_n);
    const double p_pred = rng.uniform(), p_gold = rng.uniform();
    std::vector<int> pred, gold;
    for (std::size_t i = 0; i < n; ++i) {
        pred.push_back(rng.uniform() < p_pred ? 1 : 0);
        gold.push_back(rng.uniform() < p_gold ? 1 : 0);
    }
    return {pred, gold};
}

struct ConfusionOracle {
    double precision = 0, recall = 0, f1 = 0, accuracy = 0;
};

// Hand computation from the 2x2 confusion matrix; zero denominators give 0.
inline ConfusionOracle confusion_oracle(const std::vector<int>& pred, const std::vector<int>& gold) {
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == 1 && gold[i] == 1) ++tp;
        if (pred[i] == 1 && gold[i] == 0) ++fp;
        if (pred[i] == 0 && gold[i] == 0) ++tn;
        if (pred[i] == 0 && gold[i] == 1) ++fn;
    }
    ConfusionOracle o;
    o.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    o.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    o.f1 = o.precision + o.recall > 0 ? 2 * o.precision * o.recall / (o.precision + o.recall) : 0.0;
    o.accuracy = (tp + tn) / static_cast<double>(pred.size());
    return o;
}

}  // namespace testutil
