#pragma once

#include <map>
#include <optional>
#include <vector>

#include "panelforge/core.hpp"

#ifndef PANELFORGE_VECTOR_BYTES
#define PANELFORGE_VECTOR_BYTES 16
#endif

namespace panelforge {

// Width of one SIMD register ("lane group") the kernels are written against.
inline constexpr index_t kVectorBytes = PANELFORGE_VECTOR_BYTES;
inline constexpr index_t kDefaultRegisterBudget = 32;
inline constexpr index_t kDefaultUnroll = 4;

constexpr index_t lane_count(ElemType t) { return kVectorBytes / size_bytes(t); }

// Kernel entry points. Every kernel accumulates in ascending depth order.
//
// C-resident: c(i,j) += sum_p a(i,p) * b(p,j) over p < kc, where
//   a(i,p) = a[i*a_rs + p*a_cs], b(p,j) = b[p*b_rs + j], c(i,j) = c[i*ldc + j].
// Packed operands use a_rs = 1, a_cs = mr and b_rs = nr. The mr x nr sum is
// formed in registers starting from zero and added to C once at the end.
template <class T>
using CRegKernel = void (*)(const MicroShape& shape, index_t kc, const T* a, index_t a_rs,
                            index_t a_cs, const T* b, index_t b_rs, T* c, index_t ldc);

// A-resident: for j < nc, column j of the mr-row C panel (c[j*mr + i]) is
// updated with the mr x kr tile a[p*mr + i] times b[j*kr + p], and written
// back before moving to j + 1.
template <class T>
using ARegKernel = void (*)(const MicroShape& shape, index_t nc, const T* a_tile, const T* b,
                            T* c);

// B-resident: for i < mc, row i of the nr-column C panel (c[i*nr + j]) is
// updated with a[i*kr + p] times the kr x nr tile b[p*nr + j].
template <class T>
using BRegKernel = void (*)(const MicroShape& shape, index_t mc, const T* b_tile, const T* a,
                            T* c);

struct KernelConfig {
  MicroShape shape;
  ElemType elem = ElemType::F32;
  index_t lane_count = 0;
  index_t unroll = kDefaultUnroll;

  // Throws InvalidArgument when the vectorized extent is not a multiple of
  // the lane count, or unroll is zero.
  static KernelConfig make(Residency r, const MicroShape& shape, ElemType elem,
                           index_t unroll = kDefaultUnroll);
};

// Vector registers a kernel keeps live: the resident tile plus its staging.
// CReg stages one b vector and one broadcast a element; AReg/BReg stage one
// C column/row and one broadcast element.
index_t register_lanes(Residency r, const MicroShape& shape, ElemType elem);
bool fits_register_budget(Residency r, const MicroShape& shape, ElemType elem,
                          index_t budget = kDefaultRegisterBudget);

// Shapes over {4, 8, ..., 32}^2 whose vectorized extent is lane aligned and
// that fit the register budget.
std::vector<MicroShape> default_grid(Residency r, ElemType elem,
                                     index_t budget = kDefaultRegisterBudget);

// Scalar kernels for arbitrary shapes; same accumulation order as the
// specialized ones.
template <class T>
void ukr_creg_generic(const MicroShape& shape, index_t kc, const T* a, index_t a_rs, index_t a_cs,
                      const T* b, index_t b_rs, T* c, index_t ldc);
template <class T>
void ukr_areg_generic(const MicroShape& shape, index_t nc, const T* a_tile, const T* b, T* c);
template <class T>
void ukr_breg_generic(const MicroShape& shape, index_t mc, const T* b_tile, const T* a, T* c);

template <class T>
class KernelRegistry {
 public:
  // Holds the compiled kernels whose shape is in default_grid(.., budget).
  explicit KernelRegistry(index_t register_budget = kDefaultRegisterBudget);

  bool contains(Residency r, const MicroShape& shape) const;
  std::vector<MicroShape> shapes(Residency r) const;
  index_t register_budget() const { return budget_; }

  std::optional<CRegKernel<T>> find_creg(const MicroShape& shape) const;
  std::optional<ARegKernel<T>> find_areg(const MicroShape& shape) const;
  std::optional<BRegKernel<T>> find_breg(const MicroShape& shape) const;

  // Registered kernel, or the generic fallback for shapes outside the grid.
  CRegKernel<T> creg(const MicroShape& shape) const;
  ARegKernel<T> areg(const MicroShape& shape) const;
  BRegKernel<T> breg(const MicroShape& shape) const;

  // Replaces or adds an entry (used by fault-injection builds and tests).
  void set_creg(const MicroShape& shape, CRegKernel<T> fn) { creg_[shape] = fn; }
  void set_areg(const MicroShape& shape, ARegKernel<T> fn) { areg_[shape] = fn; }
  void set_breg(const MicroShape& shape, BRegKernel<T> fn) { breg_[shape] = fn; }

 private:
  index_t budget_;
  std::map<MicroShape, CRegKernel<T>> creg_;
  std::map<MicroShape, ARegKernel<T>> areg_;
  std::map<MicroShape, BRegKernel<T>> breg_;
};

template <class T>
const KernelRegistry<T>& default_registry();

}  // namespace panelforge
