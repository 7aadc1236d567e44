#pragma once

#include "panelforge/core.hpp"
#include "panelforge/microkernels.hpp"

namespace panelforge {

// Everything that parameterizes one run of a blocked nest.
struct GemmPlan {
  Variant variant = Variant::B3A2C0;
  BlockingParams blocking;
  MicroShape shape;
  PackConfig pack;
  ParallelSpec parallel;
  ElemType elem = ElemType::F32;

  // Throws InvalidArgument for malformed fields and UnsupportedPlan when
  // packing is skipped for an A- or B-resident variant.
  void validate() const;
};

// Plan with blocking from derive_blocking_for().
GemmPlan make_plan(Variant variant, ElemType elem, const Dims& dims, const MicroShape& shape,
                   const CacheSpec& cache = CacheSpec::carmel(), PackConfig pack = {},
                   ParallelSpec parallel = {});

// Element counts of the packed buffers one thread needs for `dims`.
// Zero for buffers the variant (or pack config) does not use.
struct WorkspaceSizes {
  index_t a = 0;
  index_t b = 0;
  index_t c = 0;

  friend bool operator==(const WorkspaceSizes&, const WorkspaceSizes&) = default;
};

WorkspaceSizes workspace_sizes(const GemmPlan& plan, const Dims& dims);

// C += A * B with the loop nest, packing and kernel selected by the plan.
// Edge tiles run the full-size kernel on zero-padded panels and write back
// only the valid part of C.
//
// Loop nests (outermost first; brackets mark where a buffer is packed):
//   B3A2C0: jc -> pc [Bc] -> ic [Ac] -> jr -> ir -> C-resident kernel over kc
//   A3B2C0: ic -> pc [Ac] -> jc [Bc] -> ir -> jr -> C-resident kernel over kc
//   B3C2A0: jc -> pc [Bc] -> ic [Cc] -> ir -> pr -> A-resident kernel over nc
//   A3C2B0: ic -> pc [Ac] -> jc [Cc] -> jr -> pr -> B-resident kernel over mc
//   C3B2A0: ic -> jc [Cc] -> pc [Bc] -> ir -> pr -> A-resident kernel over nc
//   C3A2B0: jc -> ic [Cc] -> pc [Ac] -> jr -> pr -> B-resident kernel over mc
// Cc is unpacked into C when the loop that packed it closes its iteration.
//
// With plan.parallel set, the selected loop's range is split into one
// contiguous chunk per thread; buffers packed inside that loop are private
// to each thread. Jr on an A-resident nest (and Ir on a B-resident nest)
// splits the kernel's own nc (mc) range. Results are bitwise identical for
// any thread count and loop choice.
template <class T>
void gemm_blocked(const GemmPlan& plan, MatrixView<const T> a, MatrixView<const T> b,
                  MatrixView<T> c, const KernelRegistry<T>& registry = default_registry<T>());

// gemm_blocked for plans that skip packing A and/or B: the skipped operand is
// read in place through its row stride. C-resident variants only.
template <class T>
void gemm_unpacked_paths(const GemmPlan& plan, MatrixView<const T> a, MatrixView<const T> b,
                         MatrixView<T> c, const KernelRegistry<T>& registry = default_registry<T>());

// gemm_blocked with plan.parallel honored; same contract.
template <class T>
void parallel_execute(const GemmPlan& plan, MatrixView<const T> a, MatrixView<const T> b,
                      MatrixView<T> c, const KernelRegistry<T>& registry = default_registry<T>());

}  // namespace panelforge
