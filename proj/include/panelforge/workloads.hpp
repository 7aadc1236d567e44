#pragma once

#include <filesystem>
#include <vector>

#include "panelforge/core.hpp"

namespace panelforge {

struct LayerShape {
  int id = 0;
  index_t m = 0;
  index_t n = 0;
  index_t k = 0;

  Dims dims() const { return {m, n, k}; }
  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

// GEMM shapes of the 20 distinct ResNet50 v1.5 layer types after im2col,
// batch size 128.
const std::vector<LayerShape>& resnet50_shapes();

// Shrinks only m (the batch-proportional extent): ceil(m / divisor), at least 1.
Dims scaled(const LayerShape& shape, index_t divisor);

// CSV with header "id,m,n,k".
std::vector<LayerShape> load_shapes_csv(const std::filesystem::path& path);

}  // namespace panelforge
