#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "panelforge/blocked.hpp"
#include "panelforge/operands.hpp"
#include "panelforge/oracle.hpp"

namespace pftest {

using namespace panelforge;

template <class T>
struct Problem {
  Dims dims;
  std::vector<T> a, b, c0, c;

  Problem(const Dims& d, std::uint64_t seed) : dims(d), a(d.m * d.k), b(d.k * d.n), c0(d.m * d.n) {
    OperandEngine engine(seed);
    fill_uniform<T>(a, engine);
    fill_uniform<T>(b, engine);
    fill_uniform<T>(c0, engine);
    c = c0;
  }

  MatrixView<const T> A() const { return {std::span<const T>(a), dims.m, dims.k}; }
  MatrixView<const T> B() const { return {std::span<const T>(b), dims.k, dims.n}; }
  MatrixView<const T> C0() const { return {std::span<const T>(c0), dims.m, dims.n}; }
  MatrixView<T> C() { return {std::span<T>(c), dims.m, dims.n}; }

  OracleReport check() const {
    return check_against_oracle<T>(dims, A(), B(), C0(),
                                   MatrixView<const T>(std::span<const T>(c), dims.m, dims.n));
  }
};

// A plan with hand-picked blocking, bypassing the cache model.
inline GemmPlan small_plan(Variant v, ElemType elem, const MicroShape& shape,
                           const BlockingParams& blocking, PackConfig pack = {},
                           ParallelSpec parallel = {}) {
  GemmPlan plan;
  plan.variant = v;
  plan.elem = elem;
  plan.shape = shape;
  plan.blocking = blocking;
  plan.pack = pack;
  plan.parallel = parallel;
  return plan;
}

// Smallest shape of each residency that has a compiled kernel for T.
inline MicroShape small_shape(Residency r, ElemType elem) {
  const index_t l = lane_count(elem);
  switch (r) {
    case Residency::CReg: return {4, 4 * ((l + 3) / 4), 0};
    case Residency::AReg: return {4, 0, 4};
    case Residency::BReg: return {0, 4, 4};
  }
  return {};
}

}  // namespace pftest
