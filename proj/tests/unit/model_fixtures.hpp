#pragma once

#include <algorithm>
#include <vector>

#include "sentiflow/common/rng.hpp"
#include "sentiflow/dataset/dataset.hpp"

namespace testutil {

// Windows over an AR(1) series x[t+1] = phi x[t] + e; the target of each
// window is phi * x[last], the noiseless one-step prediction.
inline sentiflow::dataset::SampleSet ar1_samples(std::size_t n, std::size_t length, double phi, std::uint64_t seed) {
    sentiflow::Rng rng(seed);
    std::vector<double> x(n + length);
    x[0] = rng.normal();
    for (std::size_t t = 1; t < x.size(); ++t) x[t] = phi * x[t - 1] + rng.normal();
    sentiflow::dataset::SampleSet s;
    s.length = length;
    s.features = 1;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < length; ++t) s.inputs.push_back(x[i + t]);
        s.factor.push_back(phi * x[i + length - 1]);
        s.binary.push_back(0);
    }
    return s;
}

// Feature 0 is +-1 noise; the label is 1 iff feature 0 is positive on the last step.
inline sentiflow::dataset::SampleSet separable_samples(std::size_t n, std::size_t length, std::size_t features,
                                                       std::uint64_t seed) {
    sentiflow::Rng rng(seed);
    sentiflow::dataset::SampleSet s;
    s.length = length;
    s.features = features;
    for (std::size_t i = 0; i < n; ++i) {
        double last = 0.0;
        for (std::size_t t = 0; t < length; ++t)
            for (std::size_t f = 0; f < features; ++f) {
                const double v = f == 0 ? (rng.uniform() < 0.5 ? -1.0 : 1.0) : rng.uniform();
                s.inputs.push_back(v);
                if (f == 0) last = v;
            }
        s.binary.push_back(last > 0 ? 1 : 0);
        s.factor.push_back(last > 0 ? 1.01 : 0.99);
    }
    return s;
}

inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& gold) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < gold.size(); ++i)
        for (std::size_t j = 0; j < gold.size(); ++j)
            if (gold[i] == 1 && gold[j] == 0) {
                pairs += 1;
                wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
            }
    return wins / pairs;
}

}  // namespace testutil
