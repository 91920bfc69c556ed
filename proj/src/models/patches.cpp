#include <memory>

#include "architectures.hpp"

namespace sentiflow::models::detail {

Var extract_patches(const Var& x, std::size_t patch_len, std::size_t stride) {
    const std::size_t b = x.dim(0), l = x.dim(1), f = x.dim(2);
    const std::size_t p = patch_count(l, patch_len, stride);
    const std::size_t offset = l - ((p - 1) * stride + patch_len);
    auto index = std::make_shared<std::vector<std::int64_t>>();
    index->reserve(b * f * p * patch_len);
    for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t c = 0; c < f; ++c)
            for (std::size_t k = 0; k < p; ++k)
                for (std::size_t j = 0; j < patch_len; ++j)
                    index->push_back(static_cast<std::int64_t>((bi * l + offset + k * stride + j) * f + c));
    return nn::gather(x, std::move(index), {b * f, p, patch_len});
}

}  // namespace sentiflow::models::detail
