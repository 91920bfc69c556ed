#pragma once

#include <memory>

#include "sentiflow/ensemble/stacker.hpp"

namespace sentiflow::ensemble::detail {

std::unique_ptr<Classifier> fit_logistic(const Matrix& x, std::span<const sentiment::Label> y,
                                         const LogisticParams& params);
std::unique_ptr<Classifier> fit_forest(const Matrix& x, std::span<const sentiment::Label> y,
                                       const ForestParams& params, std::uint64_t seed);
std::unique_ptr<Classifier> fit_svm(const Matrix& x, std::span<const sentiment::Label> y, const SvmParams& params);

std::unique_ptr<Classifier> logistic_from_json(const nlohmann::json& j);
std::unique_ptr<Classifier> forest_from_json(const nlohmann::json& j);
std::unique_ptr<Classifier> svm_from_json(const nlohmann::json& j);

}  // namespace sentiflow::ensemble::detail
