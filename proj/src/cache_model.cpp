#include "panelforge/cache_model.hpp"

#include <algorithm>

namespace panelforge {

namespace {

double fraction(index_t bytes, index_t level_bytes) {
  return static_cast<double>(bytes) / static_cast<double>(level_bytes);
}

[[noreturn]] void too_small(const char* level, const std::string& detail) {
  throw Error(ErrorCode::CacheTooSmall, std::string(level) + ": " + detail);
}

}  // namespace

double l1_occupancy(index_t kc, index_t nr, ElemType elem, index_t l1_size_bytes) {
  return fraction(kc * nr * size_bytes(elem), l1_size_bytes);
}

double l2_occupancy(index_t mc, index_t kc, ElemType elem, index_t l2_size_bytes) {
  return fraction(mc * kc * size_bytes(elem), l2_size_bytes);
}

double l3_occupancy(index_t kc, index_t nc, ElemType elem, index_t l3_size_bytes) {
  return fraction(kc * nc * size_bytes(elem), l3_size_bytes);
}

BlockingResult derive_blocking(const CacheSpec& cache, const MicroShape& shape, ElemType elem,
                               const Dims& dims) {
  cache.validate();
  const index_t mr = shape.mr;
  const index_t nr = shape.nr;
  if (mr == 0 || nr == 0) {
    throw Error(ErrorCode::InvalidArgument, "derive_blocking needs mr >= 1 and nr >= 1");
  }
  if (dims.m == 0 || dims.n == 0 || dims.k == 0) {
    throw Error(ErrorCode::InvalidArgument, "dimensions must be positive");
  }
  const index_t s = size_bytes(elem);

  // L1: A panel ways, B panel capped by the leftover ways and half the level.
  const index_t w1 = cache.l1.ways;
  const index_t way1 = cache.l1.way_bytes();
  const index_t a_ways = std::max<index_t>(1, (w1 - 1) * mr / (mr + nr));
  const index_t b_ways = std::max<index_t>(1, w1 > 1 + a_ways ? w1 - 1 - a_ways : 0);
  const index_t b_bytes = std::min(b_ways * way1, cache.l1.size_bytes / 2);
  const index_t kc_model = std::min(a_ways * way1 / (mr * s), b_bytes / (nr * s));
  if (kc_model < 1) too_small("L1", "cannot hold one depth step of a micro-panel");
  const index_t kc = std::min(kc_model, dims.k);

  // L2: A block.
  const index_t w2 = cache.l2.ways;
  const index_t way2 = cache.l2.way_bytes();
  const index_t br_ways = ceil_div(kc * nr * s, way2);
  if (w2 < 2 + br_ways) too_small("L2", "no ways left for the A block");
  const index_t ac_ways = w2 - 1 - br_ways;
  const index_t mc_model = round_down(ac_ways * way2 / (kc * s), mr);
  if (mc_model < mr) too_small("L2", "A block smaller than mr rows");
  const index_t mc = std::min(mc_model, dims.m);

  // L3: B block.
  const index_t w3 = cache.l3.ways;
  const index_t way3 = cache.l3.way_bytes();
  const index_t ac3_ways = ceil_div(mc * kc * s, way3);
  if (w3 < 2 + ac3_ways) too_small("L3", "no ways left for the B block");
  const index_t bc_ways = w3 - 1 - ac3_ways;
  const index_t nc_model = round_down(bc_ways * way3 / (kc * s), nr);
  if (nc_model < nr) too_small("L3", "B block smaller than nr columns");
  const index_t nc = std::min(nc_model, dims.n);

  BlockingResult out;
  out.blocking = BlockingParams{mc, nc, kc};
  out.occupancy = OccupancyReport{
      l1_occupancy(kc, nr, elem, cache.l1.size_bytes),
      l2_occupancy(mc, kc, elem, cache.l2.size_bytes),
      l3_occupancy(kc, nc, elem, cache.l3.size_bytes),
  };
  return out;
}

BlockingResult derive_blocking_for(Variant variant, const CacheSpec& cache,
                                   const MicroShape& shape, ElemType elem, const Dims& dims) {
  const Residency r = residency(variant);
  if (!valid_for(shape, r)) {
    throw Error(ErrorCode::InvalidArgument,
                "micro shape does not match the " + std::string(to_string(r)) + " residency");
  }
  const auto [m, n, k] = dims;
  BlockingResult res;
  BlockingParams& out = res.blocking;
  switch (variant) {
    case Variant::B3A2C0:
      return derive_blocking(cache, shape, elem, dims);
    case Variant::A3B2C0: {
      res = derive_blocking(cache, {shape.nr, shape.mr, 0}, elem, {n, m, k});
      std::swap(out.mc, out.nc);
      break;
    }
    case Variant::B3C2A0: {
      res = derive_blocking(cache, {shape.mr, shape.kr, 0}, elem, {m, k, n});
      std::swap(out.nc, out.kc);
      break;
    }
    case Variant::C3B2A0: {
      res = derive_blocking(cache, {shape.kr, shape.mr, 0}, elem, {k, m, n});
      const BlockingParams b = out;
      out = BlockingParams{.mc = b.nc, .nc = b.kc, .kc = b.mc};
      break;
    }
    case Variant::A3C2B0: {
      res = derive_blocking(cache, {shape.nr, shape.kr, 0}, elem, {n, k, m});
      const BlockingParams b = out;
      out = BlockingParams{.mc = b.kc, .nc = b.mc, .kc = b.nc};
      break;
    }
    case Variant::C3A2B0: {
      res = derive_blocking(cache, {shape.kr, shape.nr, 0}, elem, {k, n, m});
      std::swap(out.mc, out.kc);
      break;
    }
  }
  return res;
}

}  // namespace panelforge
