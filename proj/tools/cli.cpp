#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "panelforge/blocked.hpp"
#include "panelforge/cache_model.hpp"
#include "panelforge/operands.hpp"
#include "panelforge/oracle.hpp"
#include "panelforge/tuner.hpp"
#include "panelforge/workloads.hpp"

namespace panelforge::cli {

namespace {

constexpr const char* kSchema = "schema=1";

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// Default micro shape per residency: the largest grid point that still
// leaves room for the staging registers.
MicroShape default_shape(Residency r, ElemType elem) {
  const bool f32 = elem == ElemType::F32;
  switch (r) {
    case Residency::CReg: return f32 ? MicroShape{8, 12, 0} : MicroShape{4, 12, 0};
    case Residency::AReg: return f32 ? MicroShape{8, 0, 12} : MicroShape{4, 0, 8};
    case Residency::BReg: return f32 ? MicroShape{0, 12, 8} : MicroShape{0, 12, 4};
  }
  return {};
}

MicroShape shape_from_flags(Residency r, ElemType elem, index_t mr, index_t nr, index_t kr) {
  MicroShape s = default_shape(r, elem);
  if (mr != 0) s.mr = mr;
  if (nr != 0) s.nr = nr;
  if (kr != 0) s.kr = kr;
  switch (r) {
    case Residency::CReg: s.kr = 0; break;
    case Residency::AReg: s.nr = 0; break;
    case Residency::BReg: s.mr = 0; break;
  }
  return s;
}

std::vector<Variant> variants_from(const std::string& text) {
  if (text == "all") return {kAllVariants.begin(), kAllVariants.end()};
  return {parse_variant(text)};
}

std::vector<ElemType> dtypes_from(const std::string& text) {
  if (text == "all") return {ElemType::F32, ElemType::F64};
  return {parse_elem_type(text)};
}

struct Workload {
  std::string id;
  Dims dims;
};

std::vector<Workload> workloads_from(const std::string& kind, const std::string& csv_path,
                                     const std::string& dims_text, index_t divisor) {
  std::vector<Workload> out;
  if (kind == "resnet50" || kind == "csv") {
    const auto shapes = kind == "csv" ? load_shapes_csv(csv_path) : resnet50_shapes();
    for (const auto& s : shapes) {
      out.push_back({kind + ":" + std::to_string(s.id), scaled(s, divisor)});
    }
    if (!dims_text.empty()) {
      throw Error(ErrorCode::InvalidArgument, "--dims applies to --workload square or dims");
    }
  } else if (kind == "square") {
    std::vector<index_t> sizes;
    if (dims_text.empty()) {
      for (index_t s = 256; s <= 2048; s += 256) sizes.push_back(s);
    } else {
      const Dims d = parse_dims(dims_text);
      if (d.m != d.n || d.n != d.k) {
        throw Error(ErrorCode::InvalidArgument, "square workload needs a single extent, got " + dims_text);
      }
      sizes.push_back(d.m);
    }
    for (index_t s : sizes) {
      const index_t e = std::max<index_t>(1, ceil_div(s, divisor));
      out.push_back({"square:" + std::to_string(s), {e, e, e}});
    }
  } else if (kind == "dims") {
    if (dims_text.empty()) throw Error(ErrorCode::InvalidArgument, "--workload dims needs --dims");
    const Dims d = parse_dims(dims_text);
    out.push_back({"dims", d});
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown workload '" + kind + "'");
  }
  return out;
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

// ---------------------------------------------------------------- verify

struct VerifyFlags {
  std::string dims;
  std::string variant = "all";
  std::string dtype;
  bool inject_fault = false;
};

template <class T>
void flipped_creg(const MicroShape& shape, index_t kc, const T* a, index_t a_rs, index_t a_cs,
                  const T* b, index_t b_rs, T* c, index_t ldc) {
  for (index_t i = 0; i < shape.mr; ++i) {
    for (index_t j = 0; j < shape.nr; ++j) {
      T s = 0;
      for (index_t p = 0; p < kc; ++p) s += a[i * a_rs + p * a_cs] * b[p * b_rs + j];
      c[i * ldc + j] -= s;
    }
  }
}

// Blocking small enough that every loop of the nest sees a remainder.
BlockingParams edge_blocking(Residency r, const MicroShape& s) {
  switch (r) {
    case Residency::CReg: return {2 * s.mr, 2 * s.nr, 5};
    case Residency::AReg: return {2 * s.mr, 7, 2 * s.kr + 1};
    case Residency::BReg: return {7, 2 * s.nr, 2 * s.kr + 1};
  }
  return {};
}

std::vector<MicroShape> shape_sample(Residency r, ElemType elem) {
  const auto grid = default_grid(r, elem);
  std::vector<MicroShape> out = {default_shape(r, elem)};
  for (const auto& s : {grid.front(), grid[grid.size() / 2], grid.back()}) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

template <class T>
bool verify_case(Variant v, PackConfig pack, const MicroShape& shape, const Dims& dims,
                 const KernelRegistry<T>& registry, std::uint64_t seed, std::ostream& out) {
  constexpr ElemType elem = elem_type_of<T>();
  const Residency r = residency(v);
  std::vector<T> a(dims.m * dims.k), b(dims.k * dims.n), c0(dims.m * dims.n);
  OperandEngine engine(seed);
  fill_uniform<T>(a, engine);
  fill_uniform<T>(b, engine);
  fill_uniform<T>(c0, engine);
  const MatrixView<const T> av(std::span<const T>(a), dims.m, dims.k);
  const MatrixView<const T> bv(std::span<const T>(b), dims.k, dims.n);
  const MatrixView<const T> c0v(std::span<const T>(c0), dims.m, dims.n);

  double max_err = 0;
  bool ok = true;
  std::vector<GemmPlan> plans = {make_plan(v, elem, dims, shape, CacheSpec::carmel(), pack)};
  GemmPlan edge = plans.front();
  edge.blocking = edge_blocking(r, shape);
  plans.push_back(edge);
  for (const auto& plan : plans) {
    std::vector<T> c = c0;
    gemm_blocked<T>(plan, av, bv, MatrixView<T>(std::span<T>(c), dims.m, dims.n), registry);
    const auto report = check_against_oracle<T>(dims, av, bv, c0v,
                                                 MatrixView<const T>(std::span<const T>(c), dims.m, dims.n));
    max_err = std::max(max_err, report.max_abs_error);
    ok = ok && report.within;
  }
  out << (ok ? "ok   " : "FAIL ") << to_string(v) << " " << to_string(elem) << " pack=" << to_string(pack)
      << " shape=" << to_string(shape, r) << " dims=" << to_string(dims)
      << " max_err=" << fmt("%.3e", max_err) << '\n';
  return ok;
}

template <class T>
std::pair<int, int> verify_elem(const VerifyFlags& flags, std::ostream& out) {
  constexpr ElemType elem = elem_type_of<T>();
  KernelRegistry<T> registry;
  if (flags.inject_fault) {
    registry.set_creg(default_shape(Residency::CReg, elem), &flipped_creg<T>);
  }
  const bool custom = !flags.dims.empty();
  std::vector<Dims> dims_list;
  if (custom) {
    dims_list.push_back(parse_dims(flags.dims));
  } else {
    dims_list = {{1, 1, 1}, {7, 5, 3}, {17, 13, 11}, {33, 29, 65}, {65, 31, 47}};
  }
  int cases = 0, failures = 0;
  std::uint64_t seed = 1;
  for (Variant v : variants_from(flags.variant)) {
    const Residency r = residency(v);
    std::vector<PackConfig> packs = {{true, true}};
    std::vector<MicroShape> shapes = {default_shape(r, elem)};
    if (!custom) {
      if (r == Residency::CReg) packs = {{true, true}, {true, false}, {false, true}, {false, false}};
      shapes = shape_sample(r, elem);
    }
    for (PackConfig pack : packs) {
      for (const auto& shape : shapes) {
        for (const auto& d : dims_list) {
          ++cases;
          if (!verify_case<T>(v, pack, shape, d, registry, seed++, out)) ++failures;
        }
      }
    }
  }
  return {cases, failures};
}

int cmd_verify(const VerifyFlags& flags, std::ostream& out, std::ostream& err) {
  const std::string dtype = flags.dtype.empty() ? (flags.dims.empty() ? "all" : "f32") : flags.dtype;
  int cases = 0, failures = 0;
  for (ElemType elem : dtypes_from(dtype)) {
    const auto [c, f] = elem == ElemType::F32 ? verify_elem<float>(flags, out) : verify_elem<double>(flags, out);
    cases += c;
    failures += f;
  }
  out << cases << " cases, " << failures << " failed\n";
  if (failures != 0) {
    err << "verification failed in " << failures << " case(s)\n";
    return kFail;
  }
  return kPass;
}

// ---------------------------------------------------------------- bench

struct BenchFlags {
  std::string workload = "resnet50";
  std::string csv;
  std::string dims;
  std::string variant = "B3A2C0";
  std::string dtype = "f32";
  index_t mr = 0, nr = 0, kr = 0;
  std::string pack = "AB";
  std::string parallel_loop = "none";
  index_t threads = 1;
  index_t reps = 3;
  index_t scale_divisor = 1;
  std::uint64_t seed = 42;
  std::string cache_spec;
  std::string output;
  bool check = false;
};

CacheSpec cache_from(const std::string& path) {
  return path.empty() ? CacheSpec::carmel() : load_cache_spec(path);
}

template <class T>
bool bench_row(const BenchFlags& flags, const Workload& w, Variant v, const CacheSpec& cache,
               std::ostream& out) {
  constexpr ElemType elem = elem_type_of<T>();
  const Dims& d = w.dims;
  const Residency r = residency(v);
  const MicroShape shape = shape_from_flags(r, elem, flags.mr, flags.nr, flags.kr);
  const ParallelSpec par{parse_parallel_loop(flags.parallel_loop), flags.threads};
  const GemmPlan plan = make_plan(v, elem, d, shape, cache, parse_pack_config(flags.pack), par);

  // A, B and C share one buffer so a single checksum covers all operands.
  std::vector<T> buf(d.m * d.k + d.k * d.n + d.m * d.n);
  fill_uniform<T>(buf, flags.seed);
  const std::string sum = checksum<T>(buf);
  const std::span<const T> all(buf);
  const MatrixView<const T> a(all.subspan(0, d.m * d.k), d.m, d.k);
  const MatrixView<const T> b(all.subspan(d.m * d.k, d.k * d.n), d.k, d.n);
  std::vector<T> c(buf.end() - static_cast<std::ptrdiff_t>(d.m * d.n), buf.end());
  const MatrixView<T> cv(std::span<T>(c), d.m, d.n);

  bool verified = false;
  if (flags.check) {
    parallel_execute<T>(plan, a, b, cv);
    const MatrixView<const T> c0(all.subspan(buf.size() - d.m * d.n), d.m, d.n);
    verified = check_against_oracle<T>(d, a, b, c0, MatrixView<const T>(cv)).within;
  }
  WallTimer timer;
  std::vector<double> times;
  for (index_t rep = 0; rep < flags.reps; ++rep) {
    times.push_back(timer.measure(TrialKey{d, elem, v, shape, rep}, [&] { parallel_execute<T>(plan, a, b, cv); }));
  }
  const double secs = median(times);
  out << "1," << w.id << ',' << d.m << ',' << d.n << ',' << d.k << ',' << to_string(v) << ','
      << to_string(elem) << ',' << shape.mr << ',' << shape.nr << ',' << shape.kr << ','
      << plan.blocking.mc << ',' << plan.blocking.nc << ',' << plan.blocking.kc << ','
      << to_string(plan.pack) << ',' << to_string(par.loop) << ',' << par.threads << ',' << flags.reps
      << ',' << fmt("%.9g", secs) << ',' << fmt("%.4f", gflops_rate(d, secs)) << ','
      << (flags.check ? (verified ? "true" : "false") : "skipped") << ',' << sum << '\n';
  return !flags.check || verified;
}

int cmd_bench(const BenchFlags& flags, std::ostream& stdout_, std::ostream& err) {
  if (flags.reps == 0) throw Error(ErrorCode::InvalidArgument, "--reps must be >= 1");
  const auto workloads = workloads_from(flags.workload, flags.csv, flags.dims, flags.scale_divisor);
  const auto variants = variants_from(flags.variant);
  const auto dtypes = dtypes_from(flags.dtype);
  const CacheSpec cache = cache_from(flags.cache_spec);
  Output out(flags.output, stdout_);
  *out << kSchema
       << ",workload,m,n,k,variant,dtype,mr,nr,kr,mc,nc,kc,pack,parallel_loop,threads,reps,"
          "median_seconds,gflops,verified,checksum\n";
  int failures = 0;
  for (const auto& w : workloads) {
    for (ElemType elem : dtypes) {
      for (Variant v : variants) {
        const bool ok = elem == ElemType::F32 ? bench_row<float>(flags, w, v, cache, *out)
                                              : bench_row<double>(flags, w, v, cache, *out);
        if (!ok) {
          err << "verification failed: " << w.id << " " << to_string(v) << " " << to_string(elem) << '\n';
          ++failures;
        }
      }
    }
  }
  return failures == 0 ? kPass : kFail;
}

// ---------------------------------------------------------------- tune

struct TuneFlags {
  std::string workload = "resnet50";
  std::string csv;
  std::string dims;
  std::string variant = "B3A2C0";
  std::string dtype = "f32";
  std::optional<std::string> shapes;
  index_t budget = kDefaultRegisterBudget;
  index_t reps = 3;
  index_t scale_divisor = 1;
  std::uint64_t seed = 42;
  std::string cache_spec;
  std::string tune_cache;
  bool no_save = false;
  bool no_verify = false;
  std::string replay;
  std::string record;
  std::string output;
};

std::vector<MicroShape> grid_from(const TuneFlags& flags, Residency r, ElemType elem) {
  if (!flags.shapes) return default_grid(r, elem, flags.budget);
  std::vector<MicroShape> grid;
  std::stringstream in(*flags.shapes);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) grid.push_back(parse_shape(item, r));
  }
  if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "--shapes lists no micro shapes");
  return grid;
}

int cmd_tune(const TuneFlags& flags, std::ostream& stdout_, std::ostream&) {
  if (flags.shapes && flags.shapes->find_first_not_of(", ") == std::string::npos) {
    throw Error(ErrorCode::EmptyGrid, "--shapes lists no micro shapes");
  }
  const auto workloads = workloads_from(flags.workload, flags.csv, flags.dims, flags.scale_divisor);
  const CacheSpec cache = cache_from(flags.cache_spec);

  WallTimer wall;
  std::optional<RecordedTimer> replay;
  if (!flags.replay.empty()) replay = RecordedTimer::load(flags.replay);
  Timer& base = replay ? static_cast<Timer&>(*replay) : static_cast<Timer&>(wall);
  RecordingTimer timer(base);

  TuneOptions opt;
  opt.cache = cache;
  opt.reps = flags.reps;
  opt.verify = !flags.no_verify;
  opt.seed = flags.seed;

  const std::filesystem::path cache_path =
      flags.tune_cache.empty() ? default_tune_cache_path() : std::filesystem::path(flags.tune_cache);
  TuneCache persisted;
  persisted.machine.cache = cache;
  persisted.machine.lane_bytes = kVectorBytes;
  if (!flags.no_save && std::filesystem::exists(cache_path)) {
    persisted = load_results(cache_path);
    if (!(persisted.machine == MachineInfo{cache, kVectorBytes})) {
      persisted.entries.clear();
      persisted.machine = MachineInfo{cache, kVectorBytes};
    }
  }

  Output out(flags.output, stdout_);
  *out << kSchema << ",workload,m,n,k,variant,dtype,mr,nr,kr,mc,nc,kc,median_seconds,gflops,status\n";
  for (const auto& w : workloads) {
    for (ElemType elem : dtypes_from(flags.dtype)) {
      for (Variant v : variants_from(flags.variant)) {
        const auto grid = grid_from(flags, residency(v), elem);
        const TuneResult result = tune(TuneProblem{w.dims, elem, v}, grid, timer, opt);
        auto prefix = [&](const MicroShape& s) {
          std::ostringstream row;
          row << "1," << w.id << ',' << w.dims.m << ',' << w.dims.n << ',' << w.dims.k << ','
              << to_string(v) << ',' << to_string(elem) << ',' << s.mr << ',' << s.nr << ',' << s.kr;
          return row.str();
        };
        for (const auto& t : result.trials) {
          *out << prefix(t.shape) << ',' << t.blocking.mc << ',' << t.blocking.nc << ','
               << t.blocking.kc << ',' << fmt("%.17g", t.median_seconds) << ','
               << fmt("%.17g", t.gflops) << ',' << (t.shape == result.best ? "best" : "timed") << '\n';
        }
        for (const auto& s : result.rejected) *out << prefix(s) << ",,,,,,rejected\n";

        const TuneEntry entry = to_entry(result);
        std::erase_if(persisted.entries, [&](const TuneEntry& e) {
          return e.dims == entry.dims && e.elem == entry.elem && e.variant == entry.variant;
        });
        persisted.entries.push_back(entry);
      }
    }
  }
  if (!flags.record.empty()) timer.save(flags.record);
  if (!flags.no_save) save_results(persisted, cache_path);
  return kPass;
}

// ---------------------------------------------------------------- model

struct ModelFlags {
  std::string cache_spec;
  std::string variant = "B3A2C0";
  std::string dtype = "f32";
  index_t mr = 0, nr = 0, kr = 0;
  std::string dims;
  int layer = 0;
};

int cmd_model(const ModelFlags& flags, std::ostream& out, std::ostream&) {
  const CacheSpec cache = cache_from(flags.cache_spec);
  const Variant v = parse_variant(flags.variant);
  const ElemType elem = parse_elem_type(flags.dtype);
  const Residency r = residency(v);
  const MicroShape shape = shape_from_flags(r, elem, flags.mr, flags.nr, flags.kr);
  Dims dims;
  if (flags.layer != 0) {
    const auto& shapes = resnet50_shapes();
    auto it = std::find_if(shapes.begin(), shapes.end(), [&](const LayerShape& s) { return s.id == flags.layer; });
    if (it == shapes.end()) throw Error(ErrorCode::InvalidArgument, "no layer " + std::to_string(flags.layer));
    dims = it->dims();
  } else if (!flags.dims.empty()) {
    dims = parse_dims(flags.dims);
  } else {
    throw Error(ErrorCode::InvalidArgument, "model needs --dims or --layer");
  }
  const auto result = derive_blocking_for(v, cache, shape, elem, dims);
  const auto& b = result.blocking;
  const auto& o = result.occupancy;
  out << "variant " << to_string(v) << "  dtype " << to_string(elem) << "  shape " << to_string(shape, r)
      << "  dims " << to_string(dims) << '\n';
  out << "mc = " << b.mc << "  nc = " << b.nc << "  kc = " << b.kc << '\n';
  out << "L1 = " << fmt("%.2f", 100 * o.l1_fraction) << "%  L2 = " << fmt("%.2f", 100 * o.l2_fraction)
      << "%  L3 = " << fmt("%.2f", 100 * o.l3_fraction) << "%\n\n";
  out << kSchema << ",m,n,k,variant,dtype,mr,nr,kr,mc,nc,kc,l1_pct,l2_pct,l3_pct\n";
  out << "1," << dims.m << ',' << dims.n << ',' << dims.k << ',' << to_string(v) << ',' << to_string(elem)
      << ',' << shape.mr << ',' << shape.nr << ',' << shape.kr << ',' << b.mc << ',' << b.nc << ','
      << b.kc << ',' << fmt("%.2f", 100 * o.l1_fraction) << ',' << fmt("%.2f", 100 * o.l2_fraction)
      << ',' << fmt("%.2f", 100 * o.l3_fraction) << '\n';
  return kPass;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError:
    case ErrorCode::EmptyGrid:
    case ErrorCode::UnsupportedPlan:
    case ErrorCode::UnsupportedResidency:
    case ErrorCode::FormatVersionMismatch:
      return kUsage;
    default:
      return kFail;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cache-blocked GEMM variants: verification, benchmarking, tuning and model inspection"};
  app.require_subcommand(1);

  VerifyFlags vf;
  auto* verify = app.add_subcommand("verify", "Check every variant against the naive oracle");
  verify->add_option("--dims", vf.dims, "Single problem MxNxK instead of the built-in matrix");
  verify->add_option("--variant", vf.variant, "Variant name or 'all'");
  verify->add_option("--dtype", vf.dtype, "f32, f64 or all");
#ifdef PANELFORGE_FAULT_INJECTION
  verify->add_flag("--inject-fault", vf.inject_fault, "Flip the sign of one C-resident kernel");
#endif

  BenchFlags bf;
  auto* bench = app.add_subcommand("bench", "Time workloads and emit CSV");
  bench->add_option("--workload", bf.workload, "resnet50, square, dims or csv")
      ->check(CLI::IsMember({"resnet50", "square", "dims", "csv"}));
  bench->add_option("--csv", bf.csv, "Shape file (id,m,n,k) for --workload csv");
  bench->add_option("--dims", bf.dims, "MxNxK, or N for square");
  bench->add_option("--variant", bf.variant, "Variant name or 'all'");
  bench->add_option("--dtype", bf.dtype, "f32, f64 or all");
  bench->add_option("--mr", bf.mr);
  bench->add_option("--nr", bf.nr);
  bench->add_option("--kr", bf.kr);
  bench->add_option("--pack", bf.pack, "AB, A, B or none");
  bench->add_option("--parallel-loop", bf.parallel_loop, "none, jc, ic, jr or ir");
  bench->add_option("--threads", bf.threads);
  bench->add_option("--reps", bf.reps);
  bench->add_option("--scale-divisor", bf.scale_divisor, "Divide m by this (ceil)")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bf.seed);
  bench->add_option("--cache-spec", bf.cache_spec, "Cache geometry file");
  bench->add_option("--output", bf.output, "CSV path (default stdout)");
  bench->add_flag("--check", bf.check, "Verify each run against the oracle first");

  TuneFlags tf;
  auto* tune_cmd = app.add_subcommand("tune", "Search the micro-kernel grid per workload");
  tune_cmd->add_option("--workload", tf.workload, "resnet50, square, dims or csv")
      ->check(CLI::IsMember({"resnet50", "square", "dims", "csv"}));
  tune_cmd->add_option("--csv", tf.csv);
  tune_cmd->add_option("--dims", tf.dims);
  tune_cmd->add_option("--variant", tf.variant, "Variant name or 'all'");
  tune_cmd->add_option("--dtype", tf.dtype, "f32, f64 or all");
  tune_cmd->add_option("--shapes", tf.shapes, "Comma-separated grid, e.g. 4x16,8x12");
  tune_cmd->add_option("--budget", tf.budget, "Vector register budget for the default grid");
  tune_cmd->add_option("--reps", tf.reps);
  tune_cmd->add_option("--scale-divisor", tf.scale_divisor)->check(CLI::PositiveNumber);
  tune_cmd->add_option("--seed", tf.seed);
  tune_cmd->add_option("--cache-spec", tf.cache_spec);
  tune_cmd->add_option("--cache", tf.tune_cache, "Tuning cache JSON (default $PANELFORGE_TUNE_CACHE)");
  tune_cmd->add_flag("--no-save", tf.no_save, "Do not touch the tuning cache");
  tune_cmd->add_flag("--no-verify", tf.no_verify);
  tune_cmd->add_option("--replay", tf.replay, "Timing record to replay instead of running");
  tune_cmd->add_option("--record", tf.record, "Write the measured timings here");
  tune_cmd->add_option("--output", tf.output, "Trial CSV path (default stdout)");

  ModelFlags mf;
  auto* model = app.add_subcommand("model", "Print the analytical blocking and cache occupancy");
  model->add_option("--cache-spec", mf.cache_spec);
  model->add_option("--variant", mf.variant);
  model->add_option("--dtype", mf.dtype);
  model->add_option("--mr", mf.mr);
  model->add_option("--nr", mf.nr);
  model->add_option("--kr", mf.kr);
  model->add_option("--dims", mf.dims);
  model->add_option("--layer", mf.layer, "ResNet50 layer id (1-20)");

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kUsage;
  }

  try {
    if (verify->parsed()) return cmd_verify(vf, out, err);
    if (bench->parsed()) return cmd_bench(bf, out, err);
    if (tune_cmd->parsed()) return cmd_tune(tf, out, err);
    if (model->parsed()) return cmd_model(mf, out, err);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kFail;
  }
  return kUsage;
}

}  // namespace panelforge::cli
