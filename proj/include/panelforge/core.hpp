#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

namespace panelforge {

using index_t = std::size_t;

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  BufferTooShort,
  UnsupportedResidency,
  UnsupportedPlan,
  CacheTooSmall,
  EmptyGrid,
  VerificationFailed,
  FormatVersionMismatch,
  ParseError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline constexpr index_t ceil_div(index_t a, index_t b) { return (a + b - 1) / b; }
inline constexpr index_t round_up(index_t a, index_t b) { return ceil_div(a, b) * b; }
inline constexpr index_t round_down(index_t a, index_t b) { return a / b * b; }

struct Dims {
  index_t m = 1;
  index_t n = 1;
  index_t k = 1;

  // Throws InvalidArgument unless every extent is positive.
  static Dims checked(index_t m, index_t n, index_t k);

  double flops() const { return 2.0 * double(m) * double(n) * double(k); }

  friend bool operator==(const Dims&, const Dims&) = default;
};

// Parses "MxNxK" (or a single "N" meaning N x N x N).
Dims parse_dims(std::string_view text);
std::string to_string(const Dims& dims);

enum class ElemType { F32, F64 };

constexpr index_t size_bytes(ElemType t) { return t == ElemType::F32 ? 4 : 8; }
std::string_view to_string(ElemType t);
ElemType parse_elem_type(std::string_view text);

template <class T>
constexpr ElemType elem_type_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                "only float and double are supported");
  return std::is_same_v<T, float> ? ElemType::F32 : ElemType::F64;
}

// Dense row-major window. The view itself performs no validation so that
// validate_problem can report malformed inputs; use well_formed() to check.
template <class T>
class MatrixView {
 public:
  MatrixView() = default;
  MatrixView(std::span<T> data, index_t rows, index_t cols, index_t row_stride)
      : data_(data), rows_(rows), cols_(cols), row_stride_(row_stride) {}
  MatrixView(std::span<T> data, index_t rows, index_t cols)
      : MatrixView(data, rows, cols, cols) {}

  // Implicit conversion to a read-only view.
  operator MatrixView<const T>() const  // NOLINT
    requires(!std::is_const_v<T>)
  {
    return MatrixView<const T>(std::span<const T>(data_), rows_, cols_, row_stride_);
  }

  index_t rows() const { return rows_; }
  index_t cols() const { return cols_; }
  index_t row_stride() const { return row_stride_; }
  std::span<T> span() const { return data_; }
  T* data() const { return data_.data(); }

  T& operator()(index_t i, index_t j) const { return data_[i * row_stride_ + j]; }
  T* ptr(index_t i, index_t j) const { return data_.data() + i * row_stride_ + j; }

  bool well_formed() const {
    if (row_stride_ < cols_) return false;
    if (rows_ == 0 || cols_ == 0) return true;
    return data_.size() >= (rows_ - 1) * row_stride_ + cols_;
  }

  // Sub-window starting at (i, j). Caller guarantees it lies inside the view.
  MatrixView block(index_t i, index_t j, index_t rows, index_t cols) const {
    const index_t offset = i * row_stride_ + j;
    const index_t extent = rows == 0 ? 0 : (rows - 1) * row_stride_ + cols;
    return MatrixView(data_.subspan(offset, extent), rows, cols, row_stride_);
  }

 private:
  std::span<T> data_;
  index_t rows_ = 0;
  index_t cols_ = 0;
  index_t row_stride_ = 0;
};

enum class Variant { B3A2C0, A3B2C0, B3C2A0, A3C2B0, C3B2A0, C3A2B0 };

inline constexpr std::array<Variant, 6> kAllVariants = {
    Variant::B3A2C0, Variant::A3B2C0, Variant::B3C2A0,
    Variant::A3C2B0, Variant::C3B2A0, Variant::C3A2B0};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);

// Which operand's tile stays in registers for the micro-kernel's duration.
enum class Residency { CReg, AReg, BReg };

std::string_view to_string(Residency r);
Residency residency(Variant v);

// Register-tile extents. Fields a residency does not use are 0:
// CReg uses (mr, nr), AReg uses (mr, kr), BReg uses (kr, nr).
struct MicroShape {
  index_t mr = 0;
  index_t nr = 0;
  index_t kr = 0;

  friend auto operator<=>(const MicroShape&, const MicroShape&) = default;
};

bool valid_for(const MicroShape& shape, Residency r);
// "MRxNR" for CReg, "MRxKR" for AReg, "KRxNR" for BReg.
std::string to_string(const MicroShape& shape, Residency r);
MicroShape parse_shape(std::string_view text, Residency r);

struct BlockingParams {
  index_t mc = 0;
  index_t nc = 0;
  index_t kc = 0;

  friend bool operator==(const BlockingParams&, const BlockingParams&) = default;
};

struct CacheLevel {
  index_t size_bytes = 0;
  index_t ways = 0;
  index_t line_bytes = 0;

  index_t sets() const { return size_bytes / (ways * line_bytes); }
  index_t way_bytes() const { return sets() * line_bytes; }

  friend bool operator==(const CacheLevel&, const CacheLevel&) = default;
};

struct CacheSpec {
  CacheLevel l1;
  CacheLevel l2;
  CacheLevel l3;

  // Throws InvalidArgument when a level has a zero field or a
  // non-integral number of sets.
  void validate() const;

  // NVIDIA Carmel-like geometry: 64 KiB/4-way L1, 2 MiB/16-way L2,
  // 4 MiB/16-way L3, 64-byte lines.
  static CacheSpec carmel();

  friend bool operator==(const CacheSpec&, const CacheSpec&) = default;
};

// key = value lines; '#' starts a comment. Keys: l{1,2,3}.{size_bytes,ways,line_bytes}.
CacheSpec parse_cache_spec(std::string_view text);
CacheSpec load_cache_spec(const std::filesystem::path& path);
std::string format_cache_spec(const CacheSpec& spec);

struct PackConfig {
  bool pack_a = true;
  bool pack_b = true;

  friend bool operator==(const PackConfig&, const PackConfig&) = default;
};

std::string to_string(const PackConfig& p);  // "AB", "A", "B" or "none"
PackConfig parse_pack_config(std::string_view text);

enum class ParallelLoop { None, Jc, Ic, Jr, Ir };

std::string_view to_string(ParallelLoop l);
ParallelLoop parse_parallel_loop(std::string_view text);

struct ParallelSpec {
  ParallelLoop loop = ParallelLoop::None;
  index_t threads = 1;

  static ParallelSpec sequential() { return {}; }
  // Throws InvalidArgument on threads == 0 or loop == None with threads > 1.
  void validate() const;
};

template <class T>
void validate_problem(const Dims& dims, MatrixView<const T> a, MatrixView<const T> b,
                      MatrixView<const T> c);

}  // namespace panelforge
