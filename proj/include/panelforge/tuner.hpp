#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "panelforge/blocked.hpp"
#include "panelforge/core.hpp"

namespace panelforge {

struct TuneProblem {
  Dims dims;
  ElemType elem = ElemType::F32;
  Variant variant = Variant::B3A2C0;
};

// Identifies one timed repetition.
struct TrialKey {
  Dims dims;
  ElemType elem = ElemType::F32;
  Variant variant = Variant::B3A2C0;
  MicroShape shape;
  index_t rep = 0;
};

// Times one repetition of `work`. Implementations may skip running it
// (replayed and fixed timers do).
class Timer {
 public:
  virtual ~Timer() = default;
  virtual double measure(const TrialKey& key, const std::function<void()>& work) = 0;
};

// Monotonic wall clock.
class WallTimer final : public Timer {
 public:
  double measure(const TrialKey& key, const std::function<void()>& work) override;
};

// Returns a fixed duration per micro shape; throws InvalidArgument for
// shapes it does not know.
class FixedTimer final : public Timer {
 public:
  explicit FixedTimer(std::map<MicroShape, double> seconds) : seconds_(std::move(seconds)) {}
  double measure(const TrialKey& key, const std::function<void()>& work) override;

 private:
  std::map<MicroShape, double> seconds_;
};

// Replays timings captured by RecordingTimer. CSV columns:
//   m,n,k,dtype,variant,mr,nr,kr,rep,seconds
class RecordedTimer final : public Timer {
 public:
  static RecordedTimer load(const std::filesystem::path& path);
  static RecordedTimer parse(const std::string& csv);
  double measure(const TrialKey& key, const std::function<void()>& work) override;

 private:
  using Key = std::tuple<index_t, index_t, index_t, ElemType, Variant, MicroShape, index_t>;
  std::map<Key, double> seconds_;
};

// Forwards to another timer and keeps every measurement.
class RecordingTimer final : public Timer {
 public:
  explicit RecordingTimer(Timer& inner) : inner_(inner) {}
  double measure(const TrialKey& key, const std::function<void()>& work) override;
  std::string csv() const;
  void save(const std::filesystem::path& path) const;

 private:
  Timer& inner_;
  std::vector<std::pair<TrialKey, double>> log_;
};

struct TrialRecord {
  MicroShape shape;
  BlockingParams blocking;
  double median_seconds = 0;
  double gflops = 0;
};

struct TuneResult {
  TuneProblem problem;
  MicroShape best;
  BlockingParams blocking;
  double gflops = 0;
  std::vector<TrialRecord> trials;
  // Shapes dropped before timing: failed verification or no valid blocking.
  std::vector<MicroShape> rejected;
};

struct TuneOptions {
  CacheSpec cache = CacheSpec::carmel();
  index_t reps = 3;
  bool verify = true;
  // Verification runs on min(extent, verify_extent) in each dimension.
  index_t verify_extent = 48;
  PackConfig pack;
  ParallelSpec parallel;
  std::uint64_t seed = 42;
  const KernelRegistry<float>* registry_f32 = nullptr;
  const KernelRegistry<double>* registry_f64 = nullptr;
};

double gflops_rate(const Dims& dims, double seconds);
double median(std::vector<double> values);

// Exhaustive search over `grid`. Each shape gets its own blocking from the
// cache model, an optional oracle check on a truncated instance, and
// `reps` timed runs; the median decides. Highest GFLOPS wins, ties go to the
// smaller (mr, nr, kr). Throws EmptyGrid, InvalidArgument when reps < 3, and
// VerificationFailed when every shape was rejected.
TuneResult tune(const TuneProblem& problem, std::span<const MicroShape> grid, Timer& timer,
                const TuneOptions& options = {});

// Canonical JSON text of a result (stable key order, round-trip doubles).
std::string serialize(const TuneResult& result);

// Persistent tuning cache.
struct MachineInfo {
  CacheSpec cache = CacheSpec::carmel();
  index_t lane_bytes = 16;

  friend bool operator==(const MachineInfo&, const MachineInfo&) = default;
};

struct TuneEntry {
  Dims dims;
  ElemType elem = ElemType::F32;
  Variant variant = Variant::B3A2C0;
  MicroShape shape;
  BlockingParams blocking;
  double gflops = 0;

  friend bool operator==(const TuneEntry&, const TuneEntry&) = default;
};

struct TuneCache {
  MachineInfo machine;
  std::vector<TuneEntry> entries;

  friend bool operator==(const TuneCache&, const TuneCache&) = default;
};

inline constexpr int kTuneCacheVersion = 1;

TuneEntry to_entry(const TuneResult& result);

std::string format_results(const TuneCache& cache);
// Throws FormatVersionMismatch or ParseError (with line number).
TuneCache parse_results(const std::string& text);
void save_results(const TuneCache& cache, const std::filesystem::path& path);
TuneCache load_results(const std::filesystem::path& path);

// $PANELFORGE_TUNE_CACHE, or "panelforge_tune.json" in the working directory.
std::filesystem::path default_tune_cache_path();

}  // namespace panelforge
