#include "panelforge/microkernels.hpp"

#include <array>
#include <utility>
#include <vector>

#include "panelforge/detail/kernels.hpp"

namespace panelforge {

namespace {

inline constexpr std::array<index_t, 8> kGridExtents = {4, 8, 12, 16, 20, 24, 28, 32};

// (first, second) are (mr, nr), (mr, kr) or (kr, nr) depending on residency.
constexpr index_t lanes_for(Residency r, index_t first, index_t second, index_t lanes) {
  switch (r) {
    case Residency::CReg: return first * second / lanes + 2;
    case Residency::AReg: return first * second / lanes + first / lanes + 1;
    case Residency::BReg: return first * second / lanes + second / lanes + 1;
  }
  return 0;
}

constexpr index_t vectorized_extent(Residency r, index_t first, index_t second) {
  return r == Residency::AReg ? first : second;
}

MicroShape make_shape(Residency r, index_t first, index_t second) {
  switch (r) {
    case Residency::CReg: return {first, second, 0};
    case Residency::AReg: return {first, 0, second};
    case Residency::BReg: return {0, second, first};
  }
  return {};
}

std::pair<index_t, index_t> shape_extents(Residency r, const MicroShape& s) {
  switch (r) {
    case Residency::CReg: return {s.mr, s.nr};
    case Residency::AReg: return {s.mr, s.kr};
    case Residency::BReg: return {s.kr, s.nr};
  }
  return {0, 0};
}

// Shapes compiled into the binary: those fitting the default budget at F32
// lane width (a superset of the F64 grid) and lane aligned for T.
template <class T>
constexpr bool compiled_shape(Residency r, index_t first, index_t second) {
  constexpr index_t lanes = detail::kLanes<T>;
  constexpr index_t f32_lanes = kVectorBytes / sizeof(float);
  return vectorized_extent(r, first, second) % lanes == 0 &&
         lanes_for(r, first, second, f32_lanes) <= kDefaultRegisterBudget;
}

template <class T, std::size_t I>
void add_creg(std::map<MicroShape, CRegKernel<T>>& out) {
  constexpr index_t X = kGridExtents[I / kGridExtents.size()];
  constexpr index_t Y = kGridExtents[I % kGridExtents.size()];
  if constexpr (compiled_shape<T>(Residency::CReg, X, Y)) {
    out[make_shape(Residency::CReg, X, Y)] = &detail::ukr_creg<T, X, Y>;
  }
}

template <class T, std::size_t I>
void add_areg(std::map<MicroShape, ARegKernel<T>>& out) {
  constexpr index_t X = kGridExtents[I / kGridExtents.size()];
  constexpr index_t Y = kGridExtents[I % kGridExtents.size()];
  if constexpr (compiled_shape<T>(Residency::AReg, X, Y)) {
    out[make_shape(Residency::AReg, X, Y)] = &detail::ukr_areg<T, X, Y>;
  }
}

template <class T, std::size_t I>
void add_breg(std::map<MicroShape, BRegKernel<T>>& out) {
  constexpr index_t X = kGridExtents[I / kGridExtents.size()];
  constexpr index_t Y = kGridExtents[I % kGridExtents.size()];
  if constexpr (compiled_shape<T>(Residency::BReg, X, Y)) {
    out[make_shape(Residency::BReg, X, Y)] = &detail::ukr_breg<T, X, Y>;
  }
}

template <class T, std::size_t... I>
void add_all(std::map<MicroShape, CRegKernel<T>>& c, std::map<MicroShape, ARegKernel<T>>& a,
             std::map<MicroShape, BRegKernel<T>>& b, std::index_sequence<I...>) {
  (add_creg<T, I>(c), ...);
  (add_areg<T, I>(a), ...);
  (add_breg<T, I>(b), ...);
}

template <class Map>
void keep_grid(Map& map, Residency r, ElemType elem, index_t budget) {
  for (auto it = map.begin(); it != map.end();) {
    it = fits_register_budget(r, it->first, elem, budget) ? std::next(it) : map.erase(it);
  }
}

template <class Map>
std::vector<MicroShape> keys(const Map& map) {
  std::vector<MicroShape> out;
  out.reserve(map.size());
  for (const auto& kv : map) out.push_back(kv.first);
  return out;
}

}  // namespace

KernelConfig KernelConfig::make(Residency r, const MicroShape& shape, ElemType elem,
                                index_t unroll) {
  if (!valid_for(shape, r)) {
    throw Error(ErrorCode::InvalidArgument, "shape is not valid for " + std::string(to_string(r)));
  }
  const auto [first, second] = shape_extents(r, shape);
  const index_t lanes = panelforge::lane_count(elem);
  if (vectorized_extent(r, first, second) % lanes != 0) {
    throw Error(ErrorCode::InvalidArgument, "vectorized extent of " + to_string(shape, r) +
                                                " is not a multiple of " + std::to_string(lanes));
  }
  if (unroll == 0) throw Error(ErrorCode::InvalidArgument, "unroll must be >= 1");
  return KernelConfig{shape, elem, lanes, unroll};
}

index_t register_lanes(Residency r, const MicroShape& shape, ElemType elem) {
  const auto [first, second] = shape_extents(r, shape);
  return lanes_for(r, first, second, lane_count(elem));
}

bool fits_register_budget(Residency r, const MicroShape& shape, ElemType elem, index_t budget) {
  if (!valid_for(shape, r)) return false;
  const auto [first, second] = shape_extents(r, shape);
  if (vectorized_extent(r, first, second) % lane_count(elem) != 0) return false;
  return register_lanes(r, shape, elem) <= budget;
}

std::vector<MicroShape> default_grid(Residency r, ElemType elem, index_t budget) {
  std::vector<MicroShape> out;
  for (index_t first : kGridExtents) {
    for (index_t second : kGridExtents) {
      const auto shape = make_shape(r, first, second);
      if (fits_register_budget(r, shape, elem, budget)) out.push_back(shape);
    }
  }
  return out;
}

template <class T>
void ukr_creg_generic(const MicroShape& shape, index_t kc, const T* a, index_t a_rs, index_t a_cs,
                      const T* b, index_t b_rs, T* c, index_t ldc) {
  const index_t mr = shape.mr;
  const index_t nr = shape.nr;
  thread_local std::vector<T> acc;
  acc.assign(mr * nr, T(0));
  for (index_t p = 0; p < kc; ++p) {
    const T* brow = b + p * b_rs;
    for (index_t i = 0; i < mr; ++i) {
      const T aip = a[i * a_rs + p * a_cs];
      T* acc_row = acc.data() + i * nr;
      for (index_t j = 0; j < nr; ++j) acc_row[j] += brow[j] * aip;
    }
  }
  for (index_t i = 0; i < mr; ++i) {
    for (index_t j = 0; j < nr; ++j) c[i * ldc + j] += acc[i * nr + j];
  }
}

template <class T>
void ukr_areg_generic(const MicroShape& shape, index_t nc, const T* a_tile, const T* b, T* c) {
  const index_t mr = shape.mr;
  const index_t kr = shape.kr;
  for (index_t j = 0; j < nc; ++j) {
    for (index_t i = 0; i < mr; ++i) {
      T s = c[j * mr + i];
      for (index_t p = 0; p < kr; ++p) s += a_tile[p * mr + i] * b[j * kr + p];
      c[j * mr + i] = s;
    }
  }
}

template <class T>
void ukr_breg_generic(const MicroShape& shape, index_t mc, const T* b_tile, const T* a, T* c) {
  const index_t kr = shape.kr;
  const index_t nr = shape.nr;
  for (index_t i = 0; i < mc; ++i) {
    for (index_t j = 0; j < nr; ++j) {
      T s = c[i * nr + j];
      for (index_t p = 0; p < kr; ++p) s += b_tile[p * nr + j] * a[i * kr + p];
      c[i * nr + j] = s;
    }
  }
}

template <class T>
KernelRegistry<T>::KernelRegistry(index_t register_budget) : budget_(register_budget) {
  add_all<T>(creg_, areg_, breg_,
             std::make_index_sequence<kGridExtents.size() * kGridExtents.size()>{});
  constexpr ElemType elem = elem_type_of<T>();
  keep_grid(creg_, Residency::CReg, elem, budget_);
  keep_grid(areg_, Residency::AReg, elem, budget_);
  keep_grid(breg_, Residency::BReg, elem, budget_);
}

template <class T>
bool KernelRegistry<T>::contains(Residency r, const MicroShape& shape) const {
  switch (r) {
    case Residency::CReg: return creg_.contains(shape);
    case Residency::AReg: return areg_.contains(shape);
    case Residency::BReg: return breg_.contains(shape);
  }
  return false;
}

template <class T>
std::vector<MicroShape> KernelRegistry<T>::shapes(Residency r) const {
  switch (r) {
    case Residency::CReg: return keys(creg_);
    case Residency::AReg: return keys(areg_);
    case Residency::BReg: return keys(breg_);
  }
  return {};
}

template <class T>
std::optional<CRegKernel<T>> KernelRegistry<T>::find_creg(const MicroShape& shape) const {
  if (auto it = creg_.find(shape); it != creg_.end()) return it->second;
  return std::nullopt;
}

template <class T>
std::optional<ARegKernel<T>> KernelRegistry<T>::find_areg(const MicroShape& shape) const {
  if (auto it = areg_.find(shape); it != areg_.end()) return it->second;
  return std::nullopt;
}

template <class T>
std::optional<BRegKernel<T>> KernelRegistry<T>::find_breg(const MicroShape& shape) const {
  if (auto it = breg_.find(shape); it != breg_.end()) return it->second;
  return std::nullopt;
}

template <class T>
CRegKernel<T> KernelRegistry<T>::creg(const MicroShape& shape) const {
  return find_creg(shape).value_or(&ukr_creg_generic<T>);
}

template <class T>
ARegKernel<T> KernelRegistry<T>::areg(const MicroShape& shape) const {
  return find_areg(shape).value_or(&ukr_areg_generic<T>);
}

template <class T>
BRegKernel<T> KernelRegistry<T>::breg(const MicroShape& shape) const {
  return find_breg(shape).value_or(&ukr_breg_generic<T>);
}

template <class T>
const KernelRegistry<T>& default_registry() {
  static const KernelRegistry<T> registry;
  return registry;
}

template class KernelRegistry<float>;
template class KernelRegistry<double>;
template const KernelRegistry<float>& default_registry<float>();
template const KernelRegistry<double>& default_registry<double>();

template void ukr_creg_generic<float>(const MicroShape&, index_t, const float*, index_t, index_t,
                                      const float*, index_t, float*, index_t);
template void ukr_creg_generic<double>(const MicroShape&, index_t, const double*, index_t, index_t,
                                       const double*, index_t, double*, index_t);
template void ukr_areg_generic<float>(const MicroShape&, index_t, const float*, const float*, float*);
template void ukr_areg_generic<double>(const MicroShape&, index_t, const double*, const double*,
                                       double*);
template void ukr_breg_generic<float>(const MicroShape&, index_t, const float*, const float*, float*);
template void ukr_breg_generic<double>(const MicroShape&, index_t, const double*, const double*,
                                       double*);

}  // namespace panelforge
