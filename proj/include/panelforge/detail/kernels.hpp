#pragma once

// Fixed-shape micro-kernel templates. Instantiated over the shape grid in
// microkernels.cpp; tests instantiate them directly with a recording Store
// policy to observe the C write pattern.

#include <cstring>

#include "panelforge/microkernels.hpp"

namespace panelforge::detail {

template <class T>
struct Vec {
  typedef T type __attribute__((vector_size(kVectorBytes)));
};

template <class T>
inline constexpr index_t kLanes = kVectorBytes / sizeof(T);

template <class V, class T>
inline V load(const T* p) {
  V v;
  std::memcpy(&v, p, sizeof(V));
  return v;
}

// Every store to C goes through the policy.
struct DirectStore {
  template <class V, class T>
  static void store(T* p, const V& v) {
    std::memcpy(p, &v, sizeof(V));
  }
};

template <class T, index_t MR, index_t NR, index_t UNROLL, class Store, bool PackedA>
inline void creg_body(index_t kc, const T* a, index_t a_rs, index_t a_cs, const T* b,
                      index_t b_rs, T* c, index_t ldc) {
  using V = typename Vec<T>::type;
  constexpr index_t L = kLanes<T>;
  constexpr index_t NV = NR / L;
  static_assert(NR % L == 0, "nr must be a multiple of the lane count");

  V acc[MR][NV] = {};

  auto rank1 = [&](index_t p) {
    V bv[NV];
    const T* brow = b + p * b_rs;
#pragma GCC unroll 16
    for (index_t jv = 0; jv < NV; ++jv) bv[jv] = load<V>(brow + jv * L);
    T acol[MR];
#pragma GCC unroll 32
    for (index_t i = 0; i < MR; ++i) {
      if constexpr (PackedA) {
        acol[i] = a[p * MR + i];
      } else {
        acol[i] = a[i * a_rs + p * a_cs];
      }
    }
#pragma GCC unroll 32
    for (index_t i = 0; i < MR; ++i) {
#pragma GCC unroll 16
      for (index_t jv = 0; jv < NV; ++jv) acc[i][jv] += bv[jv] * acol[i];
    }
  };

  index_t p = 0;
  for (; p + UNROLL <= kc; p += UNROLL) {
#pragma GCC unroll 8
    for (index_t u = 0; u < UNROLL; ++u) rank1(p + u);
  }
  for (; p < kc; ++p) rank1(p);

#pragma GCC unroll 32
  for (index_t i = 0; i < MR; ++i) {
#pragma GCC unroll 16
    for (index_t jv = 0; jv < NV; ++jv) {
      T* dst = c + i * ldc + jv * L;
      Store::template store<V>(dst, load<V>(dst) + acc[i][jv]);
    }
  }
}

template <class T, index_t MR, index_t NR, index_t UNROLL = kDefaultUnroll,
          class Store = DirectStore>
void ukr_creg(const MicroShape&, index_t kc, const T* a, index_t a_rs, index_t a_cs, const T* b,
              index_t b_rs, T* c, index_t ldc) {
  if (a_rs == 1 && a_cs == MR) {
    creg_body<T, MR, NR, UNROLL, Store, true>(kc, a, a_rs, a_cs, b, b_rs, c, ldc);
  } else {
    creg_body<T, MR, NR, UNROLL, Store, false>(kc, a, a_rs, a_cs, b, b_rs, c, ldc);
  }
}

template <class T, index_t MR, index_t KR, index_t UNROLL = kDefaultUnroll,
          class Store = DirectStore>
void ukr_areg(const MicroShape&, index_t nc, const T* a_tile, const T* b, T* c) {
  using V = typename Vec<T>::type;
  constexpr index_t L = kLanes<T>;
  constexpr index_t NV = MR / L;
  static_assert(MR % L == 0, "mr must be a multiple of the lane count");

  V tile[KR][NV];
#pragma GCC unroll 32
  for (index_t p = 0; p < KR; ++p) {
#pragma GCC unroll 16
    for (index_t iv = 0; iv < NV; ++iv) tile[p][iv] = load<V>(a_tile + p * MR + iv * L);
  }

  auto column = [&](index_t j) {
    T* cj = c + j * MR;
    const T* bj = b + j * KR;
    V cv[NV];
#pragma GCC unroll 16
    for (index_t iv = 0; iv < NV; ++iv) cv[iv] = load<V>(cj + iv * L);
#pragma GCC unroll 32
    for (index_t p = 0; p < KR; ++p) {
      const T bpj = bj[p];
#pragma GCC unroll 16
      for (index_t iv = 0; iv < NV; ++iv) cv[iv] += tile[p][iv] * bpj;
    }
#pragma GCC unroll 16
    for (index_t iv = 0; iv < NV; ++iv) Store::template store<V>(cj + iv * L, cv[iv]);
  };

  index_t j = 0;
  for (; j + UNROLL <= nc; j += UNROLL) {
#pragma GCC unroll 8
    for (index_t u = 0; u < UNROLL; ++u) column(j + u);
  }
  for (; j < nc; ++j) column(j);
}

template <class T, index_t KR, index_t NR, index_t UNROLL = kDefaultUnroll,
          class Store = DirectStore>
void ukr_breg(const MicroShape&, index_t mc, const T* b_tile, const T* a, T* c) {
  using V = typename Vec<T>::type;
  constexpr index_t L = kLanes<T>;
  constexpr index_t NV = NR / L;
  static_assert(NR % L == 0, "nr must be a multiple of the lane count");

  V tile[KR][NV];
#pragma GCC unroll 32
  for (index_t p = 0; p < KR; ++p) {
#pragma GCC unroll 16
    for (index_t jv = 0; jv < NV; ++jv) tile[p][jv] = load<V>(b_tile + p * NR + jv * L);
  }

  auto row = [&](index_t i) {
    T* ci = c + i * NR;
    const T* ai = a + i * KR;
    V cv[NV];
#pragma GCC unroll 16
    for (index_t jv = 0; jv < NV; ++jv) cv[jv] = load<V>(ci + jv * L);
#pragma GCC unroll 32
    for (index_t p = 0; p < KR; ++p) {
      const T aip = ai[p];
#pragma GCC unroll 16
      for (index_t jv = 0; jv < NV; ++jv) cv[jv] += tile[p][jv] * aip;
    }
#pragma GCC unroll 16
    for (index_t jv = 0; jv < NV; ++jv) Store::template store<V>(ci + jv * L, cv[jv]);
  };

  index_t i = 0;
  for (; i + UNROLL <= mc; i += UNROLL) {
#pragma GCC unroll 8
    for (index_t u = 0; u < UNROLL; ++u) row(i + u);
  }
  for (; i < mc; ++i) row(i);
}

}  // namespace panelforge::detail
