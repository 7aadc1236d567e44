#include "panelforge/tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "panelforge/cache_model.hpp"
#include "panelforge/operands.hpp"
#include "panelforge/oracle.hpp"

namespace panelforge {

using ojson = nlohmann::ordered_json;

double WallTimer::measure(const TrialKey&, const std::function<void()>& work) {
  const auto t0 = std::chrono::steady_clock::now();
  work();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

double FixedTimer::measure(const TrialKey& key, const std::function<void()>&) {
  auto it = seconds_.find(key.shape);
  if (it == seconds_.end()) {
    throw Error(ErrorCode::InvalidArgument, "fixed timer has no entry for shape (" +
                                                std::to_string(key.shape.mr) + "," +
                                                std::to_string(key.shape.nr) + "," +
                                                std::to_string(key.shape.kr) + ")");
  }
  return it->second;
}

namespace {

constexpr const char* kTimingHeader = "m,n,k,dtype,variant,mr,nr,kr,rep,seconds";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  return out;
}

}  // namespace

RecordedTimer RecordedTimer::parse(const std::string& csv) {
  RecordedTimer timer;
  std::istringstream in(csv);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == kTimingHeader) continue;
    const auto f = split(line, ',');
    try {
      if (f.size() != 10) throw std::invalid_argument("expected 10 fields");
      const Key key{std::stoull(f[0]), std::stoull(f[1]), std::stoull(f[2]), parse_elem_type(f[3]),
                    parse_variant(f[4]), MicroShape{std::stoull(f[5]), std::stoull(f[6]),
                                                    std::stoull(f[7])},
                    std::stoull(f[8])};
      timer.seconds_[key] = std::stod(f[9]);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ParseError,
                  "timing record line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return timer;
}

RecordedTimer RecordedTimer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open timing record '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

double RecordedTimer::measure(const TrialKey& key, const std::function<void()>&) {
  const Key k{key.dims.m, key.dims.n, key.dims.k, key.elem, key.variant, key.shape, key.rep};
  auto it = seconds_.find(k);
  if (it == seconds_.end()) {
    throw Error(ErrorCode::InvalidArgument,
                "no recorded timing for " + to_string(key.dims) + " " +
                    std::string(to_string(key.variant)) + " shape (" +
                    std::to_string(key.shape.mr) + "," + std::to_string(key.shape.nr) + "," +
                    std::to_string(key.shape.kr) + ") rep " + std::to_string(key.rep));
  }
  return it->second;
}

double RecordingTimer::measure(const TrialKey& key, const std::function<void()>& work) {
  const double s = inner_.measure(key, work);
  log_.emplace_back(key, s);
  return s;
}

std::string RecordingTimer::csv() const {
  std::ostringstream out;
  out << kTimingHeader << '\n';
  for (const auto& [key, s] : log_) {
    out << key.dims.m << ',' << key.dims.n << ',' << key.dims.k << ',' << to_string(key.elem)
        << ',' << to_string(key.variant) << ',' << key.shape.mr << ',' << key.shape.nr << ','
        << key.shape.kr << ',' << key.rep << ',' << format_double(s) << '\n';
  }
  return out.str();
}

void RecordingTimer::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
  out << csv();
}

double gflops_rate(const Dims& dims, double seconds) { return dims.flops() / seconds / 1e9; }

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

namespace {

template <class T>
struct Operands {
  std::vector<T> a, b, c;

  Operands(const Dims& d, std::uint64_t seed) : a(d.m * d.k), b(d.k * d.n), c(d.m * d.n) {
    OperandEngine engine(seed);
    fill_uniform<T>(a, engine);
    fill_uniform<T>(b, engine);
    fill_uniform<T>(c, engine);
  }
};

template <class T>
bool verify_shape(const TuneProblem& problem, const MicroShape& shape, const TuneOptions& opt,
                  const KernelRegistry<T>& registry) {
  const Dims d{std::min(problem.dims.m, opt.verify_extent), std::min(problem.dims.n, opt.verify_extent),
               std::min(problem.dims.k, opt.verify_extent)};
  const GemmPlan plan =
      make_plan(problem.variant, problem.elem, d, shape, opt.cache, opt.pack, ParallelSpec{});
  Operands<T> ops(d, opt.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<T> c0 = ops.c;
  MatrixView<const T> a(std::span<const T>(ops.a), d.m, d.k);
  MatrixView<const T> b(std::span<const T>(ops.b), d.k, d.n);
  MatrixView<T> c(std::span<T>(ops.c), d.m, d.n);
  gemm_blocked<T>(plan, a, b, c, registry);
  const auto report = check_against_oracle<T>(d, a, b, MatrixView<const T>(std::span<const T>(c0), d.m, d.n),
                                              MatrixView<const T>(c));
  return report.within;
}

bool better(const TrialRecord& x, const TrialRecord& best) {
  if (x.gflops != best.gflops) return x.gflops > best.gflops;
  return std::tie(x.shape.mr, x.shape.nr, x.shape.kr) <
         std::tie(best.shape.mr, best.shape.nr, best.shape.kr);
}

template <class T>
TuneResult tune_impl(const TuneProblem& problem, std::span<const MicroShape> grid, Timer& timer,
                     const TuneOptions& opt, const KernelRegistry<T>& registry) {
  TuneResult result;
  result.problem = problem;
  std::optional<Operands<T>> ops;

  for (const MicroShape& shape : grid) {
    GemmPlan plan;
    try {
      plan = make_plan(problem.variant, problem.elem, problem.dims, shape, opt.cache, opt.pack,
                       opt.parallel);
      if (opt.verify && !verify_shape<T>(problem, shape, opt, registry)) {
        result.rejected.push_back(shape);
        continue;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CacheTooSmall) throw;
      result.rejected.push_back(shape);
      continue;
    }

    auto work = [&] {
      if (!ops) ops.emplace(problem.dims, opt.seed);
      const Dims& d = problem.dims;
      gemm_blocked<T>(plan, MatrixView<const T>(std::span<const T>(ops->a), d.m, d.k),
                      MatrixView<const T>(std::span<const T>(ops->b), d.k, d.n),
                      MatrixView<T>(std::span<T>(ops->c), d.m, d.n), registry);
    };
    std::vector<double> times;
    for (index_t rep = 0; rep < opt.reps; ++rep) {
      times.push_back(timer.measure(
          TrialKey{problem.dims, problem.elem, problem.variant, shape, rep}, work));
    }
    TrialRecord trial;
    trial.shape = shape;
    trial.blocking = plan.blocking;
    trial.median_seconds = median(times);
    trial.gflops = gflops_rate(problem.dims, trial.median_seconds);
    result.trials.push_back(trial);
  }

  if (result.trials.empty()) {
    throw Error(ErrorCode::VerificationFailed, "no micro shape in the grid passed verification");
  }
  const TrialRecord* best = &result.trials.front();
  for (const auto& t : result.trials) {
    if (better(t, *best)) best = &t;
  }
  result.best = best->shape;
  result.blocking = best->blocking;
  result.gflops = best->gflops;
  return result;
}

ojson shape_json(const MicroShape& s) { return ojson{{"mr", s.mr}, {"nr", s.nr}, {"kr", s.kr}}; }

ojson cache_json(const CacheSpec& c) {
  auto level = [](const CacheLevel& l) {
    return ojson{{"size_bytes", l.size_bytes}, {"ways", l.ways}, {"line_bytes", l.line_bytes}};
  };
  return ojson{{"l1", level(c.l1)}, {"l2", level(c.l2)}, {"l3", level(c.l3)}};
}

CacheSpec cache_from_json(const ojson& j) {
  auto level = [](const ojson& l) {
    return CacheLevel{l.at("size_bytes").get<index_t>(), l.at("ways").get<index_t>(),
                      l.at("line_bytes").get<index_t>()};
  };
  CacheSpec spec{level(j.at("l1")), level(j.at("l2")), level(j.at("l3"))};
  spec.validate();
  return spec;
}

int line_of(const std::string& text, std::size_t byte) {
  const auto end = text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size()));
  return 1 + static_cast<int>(std::count(text.begin(), end, '\n'));
}

}  // namespace

TuneResult tune(const TuneProblem& problem, std::span<const MicroShape> grid, Timer& timer,
                const TuneOptions& options) {
  if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "the micro-kernel grid is empty");
  if (options.reps < 3) throw Error(ErrorCode::InvalidArgument, "tuning needs reps >= 3");
  if (problem.elem == ElemType::F32) {
    const auto& reg = options.registry_f32 ? *options.registry_f32 : default_registry<float>();
    return tune_impl<float>(problem, grid, timer, options, reg);
  }
  const auto& reg = options.registry_f64 ? *options.registry_f64 : default_registry<double>();
  return tune_impl<double>(problem, grid, timer, options, reg);
}

std::string serialize(const TuneResult& r) {
  ojson trials = ojson::array();
  for (const auto& t : r.trials) {
    trials.push_back(ojson{{"mr", t.shape.mr},
                           {"nr", t.shape.nr},
                           {"kr", t.shape.kr},
                           {"mc", t.blocking.mc},
                           {"nc", t.blocking.nc},
                           {"kc", t.blocking.kc},
                           {"median_seconds", t.median_seconds},
                           {"gflops", t.gflops}});
  }
  ojson rejected = ojson::array();
  for (const auto& s : r.rejected) rejected.push_back(shape_json(s));
  const ojson j{
      {"problem",
       {{"m", r.problem.dims.m},
        {"n", r.problem.dims.n},
        {"k", r.problem.dims.k},
        {"dtype", to_string(r.problem.elem)},
        {"variant", to_string(r.problem.variant)}}},
      {"best", shape_json(r.best)},
      {"blocking", {{"mc", r.blocking.mc}, {"nc", r.blocking.nc}, {"kc", r.blocking.kc}}},
      {"gflops", r.gflops},
      {"trials", trials},
      {"rejected", rejected},
  };
  return j.dump(2);
}

TuneEntry to_entry(const TuneResult& r) {
  return TuneEntry{r.problem.dims, r.problem.elem, r.problem.variant, r.best, r.blocking, r.gflops};
}

std::string format_results(const TuneCache& cache) {
  ojson entries = ojson::array();
  for (const auto& e : cache.entries) {
    entries.push_back(ojson{{"m", e.dims.m},
                            {"n", e.dims.n},
                            {"k", e.dims.k},
                            {"dtype", to_string(e.elem)},
                            {"variant", to_string(e.variant)},
                            {"mr", e.shape.mr},
                            {"nr", e.shape.nr},
                            {"kr", e.shape.kr},
                            {"mc", e.blocking.mc},
                            {"nc", e.blocking.nc},
                            {"kc", e.blocking.kc},
                            {"gflops", e.gflops}});
  }
  const ojson j{
      {"version", kTuneCacheVersion},
      {"machine", {{"cache", cache_json(cache.machine.cache)}, {"lane_bytes", cache.machine.lane_bytes}}},
      {"entries", entries},
  };
  return j.dump(2) + "\n";
}

TuneCache parse_results(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("version")) {
    throw Error(ErrorCode::ParseError, "line 1: tuning cache has no version field");
  }
  if (!j.at("version").is_number_integer() || j.at("version").get<int>() != kTuneCacheVersion) {
    throw Error(ErrorCode::FormatVersionMismatch,
                "expected version " + std::to_string(kTuneCacheVersion) + ", found " +
                    j.at("version").dump());
  }
  TuneCache cache;
  try {
    const auto& machine = j.at("machine");
    cache.machine.cache = cache_from_json(machine.at("cache"));
    cache.machine.lane_bytes = machine.at("lane_bytes").get<index_t>();
    for (const auto& e : j.at("entries")) {
      TuneEntry entry;
      entry.dims = Dims::checked(e.at("m").get<index_t>(), e.at("n").get<index_t>(),
                                 e.at("k").get<index_t>());
      entry.elem = parse_elem_type(e.at("dtype").get<std::string>());
      entry.variant = parse_variant(e.at("variant").get<std::string>());
      entry.shape = MicroShape{e.value("mr", index_t{0}), e.value("nr", index_t{0}),
                               e.value("kr", index_t{0})};
      entry.blocking = BlockingParams{e.at("mc").get<index_t>(), e.at("nc").get<index_t>(),
                                      e.at("kc").get<index_t>()};
      entry.gflops = e.at("gflops").get<double>();
      cache.entries.push_back(entry);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed tuning cache: ") + e.what());
  }
  return cache;
}

void save_results(const TuneCache& cache, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
  out << format_results(cache);
}

TuneCache load_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open tuning cache '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_results(buf.str());
}

std::filesystem::path default_tune_cache_path() {
  if (const char* env = std::getenv("PANELFORGE_TUNE_CACHE"); env != nullptr && *env != '\0') {
    return env;
  }
  return "panelforge_tune.json";
}

}  // namespace panelforge
