#pragma once

#include <memory>

#include "sentiflow/models/model.hpp"

namespace sentiflow::models::detail {

std::unique_ptr<Model> make_lstm(const ModelConfig& c, std::size_t features, std::size_t length);
std::unique_ptr<Model> make_patchtst(const ModelConfig& c, std::size_t features, std::size_t length);
std::unique_ptr<Model> make_timesnet(const ModelConfig& c, std::size_t features, std::size_t length);
std::unique_ptr<Model> make_tpatchgnn(const ModelConfig& c, std::size_t features, std::size_t length);

// x: [B, L, F] -> [B*F, P, patch_len]. Patches are laid out so the last one
// ends on the final time step.
Var extract_patches(const Var& x, std::size_t patch_len, std::size_t stride);

}  // namespace sentiflow::models::detail
