#pragma once

#include <string>

#include "panelforge/core.hpp"

namespace panelforge {

// Fractions of each cache level taken by the blocks the model places there:
// the kc x nr panel of B in L1, the mc x kc block of A in L2 and the
// kc x nc block of B in L3.
struct OccupancyReport {
  double l1_fraction = 0;
  double l2_fraction = 0;
  double l3_fraction = 0;
};

struct BlockingResult {
  BlockingParams blocking;
  OccupancyReport occupancy;
};

double l1_occupancy(index_t kc, index_t nr, ElemType elem, index_t l1_size_bytes);
double l2_occupancy(index_t mc, index_t kc, ElemType elem, index_t l2_size_bytes);
double l3_occupancy(index_t kc, index_t nc, ElemType elem, index_t l3_size_bytes);

// Ways-partitioning model for the baseline (B3A2C0) nest with a C-resident
// (mr, nr) kernel:
//   L1: the mr x kc panel of A gets floor((W1 - 1) * mr / (mr + nr)) ways
//       (at least one), one way is left for C, and the kc x nr panel of B
//       may use the remaining ways but never more than half of L1.
//   L2: the mc x kc block of A gets W2 - 1 - (ways of the B panel).
//   L3: the kc x nc block of B gets W3 - 1 - (ways of the A block).
// kc, mc and nc are clamped to k, m and n. Throws CacheTooSmall naming the
// level that cannot hold one micro-panel.
BlockingResult derive_blocking(const CacheSpec& cache, const MicroShape& shape, ElemType elem,
                               const Dims& dims);

// The same model applied to any member of the family. Every variant is the
// baseline nest with the operands relabeled (and transposed), so the baseline
// model is evaluated on the relabeled problem and mapped back.
BlockingResult derive_blocking_for(Variant variant, const CacheSpec& cache, const MicroShape& shape,
                                   ElemType elem, const Dims& dims);

}  // namespace panelforge
