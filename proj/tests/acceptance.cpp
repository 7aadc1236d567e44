// Acceptance gate: one [PASS]/[FAIL] line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "panelforge/blocked.hpp"
#include "panelforge/cache_model.hpp"
#include "panelforge/packing.hpp"
#include "panelforge/tuner.hpp"
#include "panelforge/workloads.hpp"
#include "store_shim.hpp"
#include "support.hpp"

using namespace panelforge;
using pftest::Problem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.fail(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("[%s] %s (%.1fs)%s%s\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail.empty() ? "" : ": ",
              o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

double seconds_of(const std::function<void()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------ oracle matrix

std::vector<PackConfig> packs_for(Variant v) {
  if (residency(v) == Residency::CReg) return {{true, true}, {true, false}, {false, true}, {false, false}};
  return {{true, true}};
}

BlockingParams small_blocking(Residency r, const MicroShape& s) {
  switch (r) {
    case Residency::CReg: return {2 * s.mr, 2 * s.nr, 6};
    case Residency::AReg: return {2 * s.mr, 5, 2 * s.kr};
    case Residency::BReg: return {5, 2 * s.nr, 2 * s.kr};
  }
  return {};
}

template <class T>
void oracle_matrix(Outcome& o, const std::vector<Dims>& dims_list, long& runs) {
  constexpr ElemType elem = elem_type_of<T>();
  std::uint64_t seed = 100;
  for (Variant v : kAllVariants) {
    const Residency r = residency(v);
    const auto grid = default_grid(r, elem);
    for (const MicroShape& shape : {grid.front(), grid.back()}) {
      for (PackConfig pack : packs_for(v)) {
        for (const Dims& d : dims_list) {
          Problem<T> base(d, seed++);
          GemmPlan plans[2] = {make_plan(v, elem, d, shape, CacheSpec::carmel(), pack),
                               pftest::small_plan(v, elem, shape, small_blocking(r, shape), pack)};
          for (const auto& plan : plans) {
            Problem<T> p = base;
            gemm_blocked<T>(plan, p.A(), p.B(), p.C());
            ++runs;
            const auto rep = p.check();
            if (!rep.within) {
              std::ostringstream why;
              why << to_string(v) << " " << to_string(elem) << " pack=" << to_string(pack)
                  << " shape=" << to_string(shape, r) << " dims=" << to_string(d) << " ratio=" << rep.max_bound_ratio;
              o.fail(why.str());
            }
          }
        }
      }
    }
  }
}

Outcome check_oracle_matrix() {
  std::vector<Dims> dims;
  for (index_t m = 1; m <= 9; ++m)
    for (index_t n = 1; n <= 9; ++n)
      for (index_t k = 1; k <= 9; ++k) dims.push_back({m, n, k});
  std::mt19937_64 rng(65);
  std::uniform_int_distribution<index_t> ext(1, 65);
  int added = 0;
  while (added < 50) {
    const Dims d{ext(rng), ext(rng), ext(rng)};
    // Keep extents off the 4-multiples used by every micro dimension.
    if (d.m % 4 == 0 || d.n % 4 == 0 || d.k % 4 == 0) continue;
    dims.push_back(d);
    ++added;
  }
  Outcome o;
  long runs = 0;
  oracle_matrix<float>(o, dims, runs);
  oracle_matrix<double>(o, dims, runs);
  if (o.pass) o.detail = std::to_string(runs) + " runs";
  return o;
}

// ------------------------------------------------------------ occupancy table

struct OccupancyRow {
  int layer;
  index_t mr, nr;
  int percent_hundredths;  // table value x 100
};

const std::vector<OccupancyRow>& occupancy_rows() {
  static const std::vector<OccupancyRow> rows = {
      {2, 4, 4, 156},   {8, 4, 4, 312},   {2, 4, 8, 312},   {8, 4, 8, 625},   {2, 4, 12, 469},
      {8, 4, 12, 938},  {2, 4, 16, 625},  {8, 4, 16, 1250}, {2, 4, 20, 781},  {8, 4, 20, 1560},
      {2, 4, 24, 938},  {8, 4, 24, 1880}, {2, 4, 28, 1090}, {8, 4, 28, 2190}, {2, 8, 4, 156},
      {8, 8, 4, 312},   {2, 8, 8, 312},   {8, 8, 8, 625},   {2, 8, 12, 469},  {8, 8, 12, 938},
      {2, 12, 4, 156},  {8, 12, 4, 312},  {2, 12, 8, 312},  {8, 12, 8, 625},  {2, 16, 4, 156},
      {8, 16, 4, 312},  {2, 20, 4, 156},  {8, 20, 4, 312},  {2, 24, 4, 156},  {8, 24, 4, 312},
      {2, 28, 4, 156},  {8, 28, 4, 312},
  };
  return rows;
}

// num/den rounded to three significant figures (ties to even), in hundredths.
// Valid for 1 <= num/den < 1000.
long long sig3_hundredths(long long num, long long den) {
  int shift = 0;  // decimal digits kept after the point
  long long scale = 1;
  while (num * scale < 100 * den) {
    scale *= 10;
    ++shift;
  }
  long long q = num * scale / den;
  const long long rem = num * scale % den;
  if (2 * rem > den || (2 * rem == den && q % 2 == 1)) ++q;
  for (int s = shift; s < 2; ++s) q *= 10;
  return q;
}

Outcome check_occupancy_table() {
  Outcome o;
  const auto& layers = resnet50_shapes();
  for (const auto& row : occupancy_rows()) {
    const Dims d = layers[std::size_t(row.layer - 1)].dims();
    const index_t kc = derive_blocking(CacheSpec::carmel(), {row.mr, row.nr, 0}, ElemType::F32, d).blocking.kc;
    const double pct = 100.0 * l1_occupancy(kc, row.nr, ElemType::F32, 65536);
    // Exact: kc*nr*4 bytes over 65536, in percent.
    const long long num = static_cast<long long>(kc * row.nr * 4 * 100);
    const long long rounded = sig3_hundredths(num, 65536);
    const bool exact_match = std::fabs(pct - double(num) / 65536.0) < 1e-12;
    if (!exact_match || rounded != row.percent_hundredths ||
        std::fabs(pct - row.percent_hundredths / 100.0) > 0.05 + 1e-12) {
      std::ostringstream why;
      why << "layer " << row.layer << " " << row.mr << "x" << row.nr << ": got " << pct << " expected "
          << row.percent_hundredths / 100.0;
      o.fail(why.str());
    }
  }
  if (occupancy_rows().size() != 32) o.fail("table must have 32 values");
  return o;
}

Outcome check_clamping() {
  Outcome o;
  const auto& layers = resnet50_shapes();
  const auto grid = default_grid(Residency::CReg, ElemType::F32);
  std::set<std::pair<index_t, index_t>> table_shapes;
  for (const auto& row : occupancy_rows()) table_shapes.insert({row.mr, row.nr});
  std::set<std::pair<index_t, index_t>> grid_shapes;
  for (const auto& s : grid) grid_shapes.insert({s.mr, s.nr});
  if (grid_shapes != table_shapes) o.fail("grid differs from the table's shape set");
  for (const auto& s : grid) {
    const auto b2 = derive_blocking(CacheSpec::carmel(), s, ElemType::F32, layers[1].dims()).blocking;
    const auto b8 = derive_blocking(CacheSpec::carmel(), s, ElemType::F32, layers[7].dims()).blocking;
    if (b2.kc != 64 || b2.nc != 64 || b8.kc != 128) {
      std::ostringstream why;
      why << s.mr << "x" << s.nr << ": layer2 kc=" << b2.kc << " nc=" << b2.nc << ", layer8 kc=" << b8.kc;
      o.fail(why.str());
    }
  }
  return o;
}

// ------------------------------------------------------------ packing

Outcome check_pack_round_trip() {
  Outcome o;
  std::mt19937_64 rng(1000);
  auto pick = [&](index_t lo, index_t hi) { return std::uniform_int_distribution<index_t>(lo, hi)(rng); };
  for (int trial = 0; trial < 1000; ++trial) {
    const index_t ld = pick(1, 48), total_rows = pick(1, 48);
    std::vector<float> buf(total_rows * ld);
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = float(i + 1);
    const index_t r0 = pick(0, total_rows - 1), c0 = pick(0, ld - 1);
    index_t rows = pick(1, total_rows - r0), cols = pick(1, ld - c0);
    switch (trial % 4) {
      case 0: rows = cols = 1; break;
      case 1: rows = 1; break;
      case 2: cols = 1; break;
      default: break;
    }
    const MatrixView<const float> src =
        MatrixView<const float>(std::span<const float>(buf), total_rows, ld).block(r0, c0, rows, cols);
    const index_t d = pick(1, 16);
    auto fail = [&](const char* what) {
      std::ostringstream why;
      why << what << " window " << rows << "x" << cols << " panel " << d;
      o.fail(why.str());
    };

    // Row panels (A for C-resident, B for A-resident).
    const auto rp = pack_a_block<float>(src, d);
    if (rp.data.size() != ceil_div(rows, d) * d * cols) fail("row panel size");
    for (index_t pos = 0; pos < rp.data.size(); ++pos) {
      const index_t panel = pos / (d * cols), j = pos % (d * cols) / d, i = panel * d + pos % d;
      if (rp.data[pos] != (i < rows ? src(i, j) : 0.0f)) fail("row panel content/padding");
    }
    // Column panels (B for C-resident, A for B-resident).
    const auto cp = pack_b_block<float>(src, d);
    if (cp.data.size() != ceil_div(cols, d) * d * rows) fail("column panel size");
    for (index_t pos = 0; pos < cp.data.size(); ++pos) {
      const index_t panel = pos / (d * rows), i = pos % (d * rows) / d, j = panel * d + pos % d;
      if (cp.data[pos] != (j < cols ? src(i, j) : 0.0f)) fail("column panel content/padding");
    }
    // C blocks for both resident layouts, unpacked into a sentinel-filled copy.
    for (Residency r : {Residency::AReg, Residency::BReg}) {
      const MicroShape shape{d, d, 1};
      const auto pc = pack_c_block<float>(src, r, shape);
      std::vector<float> out(buf.size(), -1.0f);
      const auto dst = MatrixView<float>(std::span<float>(out), total_rows, ld).block(r0, c0, rows, cols);
      unpack_c_block<float>(pc, dst, r, shape);
      for (index_t i = 0; i < total_rows; ++i)
        for (index_t j = 0; j < ld; ++j) {
          const bool inside = i >= r0 && i < r0 + rows && j >= c0 && j < c0 + cols;
          if (out[i * ld + j] != (inside ? buf[i * ld + j] : -1.0f)) fail("C block round trip");
        }
    }
  }
  return o;
}

// ------------------------------------------------------------ threads

Outcome check_thread_reproducibility() {
  Outcome o;
  const Dims d{512, 512, 512};
  Problem<float> base(d, 512);
  for (Variant v : kAllVariants) {
    const Residency r = residency(v);
    const auto grid = default_grid(r, ElemType::F32);
    const MicroShape shape = grid[grid.size() / 2];
    // Blocking below the problem size so every loop has several iterations.
    auto plan = make_plan(v, ElemType::F32, d, shape);
    plan.blocking = {std::min<index_t>(plan.blocking.mc, 96), std::min<index_t>(plan.blocking.nc, 120),
                     std::min<index_t>(plan.blocking.kc, 128)};
    Problem<float> ref = base;
    gemm_blocked<float>(plan, ref.A(), ref.B(), ref.C());
    if (!ref.check().within) o.fail(std::string(to_string(v)) + " sequential result off");
    for (ParallelLoop loop : {ParallelLoop::Jc, ParallelLoop::Ic, ParallelLoop::Jr, ParallelLoop::Ir}) {
      for (index_t threads : {1, 2, 4}) {
        plan.parallel = {loop, threads};
        Problem<float> p = base;
        parallel_execute<float>(plan, p.A(), p.B(), p.C());
        if (std::memcmp(p.c.data(), ref.c.data(), p.c.size() * sizeof(float)) != 0) {
          o.fail(std::string(to_string(v)) + " loop " + std::string(to_string(loop)) + " threads " +
                 std::to_string(threads));
        }
      }
    }
  }
  return o;
}

// ------------------------------------------------------------ tuner

Outcome check_tuner_determinism() {
  Outcome o;
  const TuneProblem problem{{200, 150, 100}, ElemType::F32, Variant::B3A2C0};
  const auto grid = default_grid(Residency::CReg, ElemType::F32);
  WallTimer wall;
  RecordingTimer rec(wall);
  const auto live = tune(problem, grid, rec);
  auto replay = RecordedTimer::parse(rec.csv());
  const std::string a = serialize(tune(problem, grid, replay));
  const std::string b = serialize(tune(problem, grid, replay));
  if (a != b) o.fail("two replays differ");
  if (a != serialize(live)) o.fail("replay differs from the recorded run");

  // Every shape takes the same time: the smallest (mr, nr) must win, every time.
  std::ostringstream flat;
  flat << "m,n,k,dtype,variant,mr,nr,kr,rep,seconds\n";
  for (const auto& s : grid)
    for (int rep = 0; rep < 3; ++rep)
      flat << "200,150,100,f32,B3A2C0," << s.mr << ',' << s.nr << ",0," << rep << ",0.001\n";
  auto tied = RecordedTimer::parse(flat.str());
  std::vector<MicroShape> reversed(grid.rbegin(), grid.rend());
  const auto t1 = tune(problem, grid, tied);
  const auto t2 = tune(problem, reversed, tied);
  if (!(t1.best == MicroShape{4, 4, 0}) || !(t2.best == MicroShape{4, 4, 0})) o.fail("tie-break not to the smallest shape");
  if (serialize(t1) != serialize(tune(problem, grid, tied))) o.fail("tie replay not byte-identical");
  return o;
}

// ------------------------------------------------------------ performance

Outcome check_performance() {
  Outcome o;
  const Dims d{1024, 1024, 1024};
  const TuneProblem problem{d, ElemType::F32, Variant::B3A2C0};
  WallTimer wall;
  const auto tuned = tune(problem, default_grid(Residency::CReg, ElemType::F32), wall);

  Problem<float> p(d, 1024);
  const GemmPlan plan = make_plan(Variant::B3A2C0, ElemType::F32, d, tuned.best);
  GemmPlan unpacked = plan;
  unpacked.pack = {false, false};
  std::vector<double> packed_t, unpacked_t;
  for (int rep = 0; rep < 3; ++rep) {
    packed_t.push_back(seconds_of([&] { gemm_blocked<float>(plan, p.A(), p.B(), p.C()); }));
    unpacked_t.push_back(seconds_of([&] { gemm_blocked<float>(unpacked, p.A(), p.B(), p.C()); }));
  }
  const double naive_t = seconds_of([&] { gemm_naive<float>(d, p.A(), p.B(), p.C()); });
  const double g_opt = gflops_rate(d, median(packed_t));
  const double g_unpacked = gflops_rate(d, median(unpacked_t));
  const double g_naive = gflops_rate(d, naive_t);
  char buf[200];
  std::snprintf(buf, sizeof buf, "best %zux%zu %.2f GFLOPS, no-packing %.2f, naive %.3f (%.1fx)", tuned.best.mr,
                tuned.best.nr, g_opt, g_unpacked, g_naive, g_opt / g_naive);
  o.detail = buf;
  if (g_opt < 10 * g_naive) o.fail(std::string("below 10x naive: ") + buf);
  if (g_opt <= g_unpacked) o.fail(std::string("packing does not pay off: ") + buf);
  return o;
}

// ------------------------------------------------------------ store pattern

template <index_t MR, index_t NR>
bool creg_pattern() {
  constexpr index_t ldc = NR + 5, kc = 13;
  std::vector<float> a(MR * kc, 1.0f), b(kc * NR, 1.0f), c(MR * ldc, 0.0f);
  pftest::StoreLog::entries.clear();
  detail::ukr_creg<float, MR, NR, kDefaultUnroll, pftest::StoreLog>({MR, NR, 0}, kc, a.data(), 1, MR, b.data(), NR,
                                                                    c.data(), ldc);
  std::multiset<const float*> touched;
  for (const auto& e : pftest::StoreLog::entries)
    for (std::size_t l = 0; l < e.elems; ++l) touched.insert(static_cast<const float*>(e.first) + l);
  if (touched.size() != MR * NR) return false;
  for (index_t i = 0; i < MR; ++i)
    for (index_t j = 0; j < NR; ++j)
      if (touched.count(c.data() + i * ldc + j) != 1) return false;
  return true;
}

// `stride` elements per L6 step, steps stored in order, one line at a time.
bool line_pattern(const float* base, index_t stride, index_t steps) {
  index_t elems = 0;
  for (const auto& e : pftest::StoreLog::entries) {
    const index_t first = index_t(static_cast<const float*>(e.first) - base);
    if (first != elems || (first + e.elems - 1) / stride != first / stride) return false;
    elems += e.elems;
  }
  return elems == stride * steps;
}

template <index_t MR, index_t KR>
bool areg_pattern() {
  constexpr index_t nc = 11;
  std::vector<float> a(MR * KR, 1.0f), b(KR * nc, 1.0f), c(MR * nc, 0.0f);
  pftest::StoreLog::entries.clear();
  detail::ukr_areg<float, MR, KR, kDefaultUnroll, pftest::StoreLog>({MR, 0, KR}, nc, a.data(), b.data(), c.data());
  return line_pattern(c.data(), MR, nc);
}

template <index_t KR, index_t NR>
bool breg_pattern() {
  constexpr index_t mc = 9;
  std::vector<float> b(KR * NR, 1.0f), a(mc * KR, 1.0f), c(mc * NR, 0.0f);
  pftest::StoreLog::entries.clear();
  detail::ukr_breg<float, KR, NR, kDefaultUnroll, pftest::StoreLog>({0, NR, KR}, mc, b.data(), a.data(), c.data());
  return line_pattern(c.data(), NR, mc);
}

Outcome check_store_pattern() {
  Outcome o;
  if (!(creg_pattern<4, 4>() && creg_pattern<8, 12>() && creg_pattern<4, 28>() && creg_pattern<28, 4>()))
    o.fail("C-resident kernel store count");
  if (!(areg_pattern<4, 4>() && areg_pattern<8, 12>() && areg_pattern<16, 4>())) o.fail("A-resident column stores");
  if (!(breg_pattern<4, 4>() && breg_pattern<8, 12>() && breg_pattern<4, 16>())) o.fail("B-resident row stores");
  return o;
}

// ------------------------------------------------------------ workloads

Outcome check_workload_fixture() {
  const std::vector<LayerShape> expected = {
      {1, 1605632, 64, 147},  {2, 401408, 64, 64},    {3, 401408, 64, 576},   {4, 401408, 256, 64},
      {5, 401408, 64, 256},   {6, 401408, 128, 256},  {7, 100352, 128, 1152}, {8, 100352, 512, 128},
      {9, 100352, 512, 256},  {10, 100352, 128, 512}, {11, 100352, 256, 512}, {12, 25088, 256, 2304},
      {13, 25088, 1024, 256}, {14, 25088, 1024, 512}, {15, 25088, 256, 1024}, {16, 25088, 512, 1024},
      {17, 6272, 512, 4608},  {18, 6272, 2048, 512},  {19, 6272, 2048, 1024}, {20, 6272, 512, 2048},
  };
  Outcome o;
  if (resnet50_shapes() != expected) o.fail("fixture rows differ");
  return o;
}

}  // namespace

int main() {
  report("oracle equivalence matrix (6 variants x pack configs x {1..9}^3 + 50 random, f32/f64)", check_oracle_matrix);
  report("L1 occupancy reproduces the 32 layer-2/layer-8 values", check_occupancy_table);
  report("blocking clamps kc=64,nc=64 (layer 2) and kc=128 (layer 8) for every grid shape", check_clamping);
  report("pack/unpack round trip and zero padding over 1000 windows", check_pack_round_trip);
  report("bitwise thread reproducibility at 512^3 (threads 1,2,4 x jc,ic,jr,ir)", check_thread_reproducibility);
  report("tuner replay determinism including ties", check_tuner_determinism);
  report("performance smoke at 1024^3 (>=10x naive, packing beats no packing)", check_performance);
  report("residency write pattern via store-counting shims", check_store_pattern);
  report("ResNet50 workload fixture (20 rows)", check_workload_fixture);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
