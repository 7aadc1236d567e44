#include "panelforge/core.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace panelforge {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

index_t parse_count(std::string_view text, std::string_view what) {
  text = trim(text);
  index_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "expected a non-negative integer for " + std::string(what) + ", got '" +
                    std::string(text) + "'");
  }
  return value;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BufferTooShort: return "BufferTooShort";
    case ErrorCode::UnsupportedResidency: return "UnsupportedResidency";
    case ErrorCode::UnsupportedPlan: return "UnsupportedPlan";
    case ErrorCode::CacheTooSmall: return "CacheTooSmall";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::VerificationFailed: return "VerificationFailed";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Dims Dims::checked(index_t m, index_t n, index_t k) {
  if (m == 0 || n == 0 || k == 0) {
    throw Error(ErrorCode::InvalidArgument, "dimensions must be positive, got " +
                                                to_string(Dims{m, n, k}));
  }
  return Dims{m, n, k};
}

Dims parse_dims(std::string_view text) {
  const std::string s = lower(trim(text));
  std::array<index_t, 3> v{};
  std::size_t count = 0;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find('x', start);
    if (count == 3) throw Error(ErrorCode::InvalidArgument, "too many extents in '" + s + "'");
    v[count++] = parse_count(std::string_view(s).substr(start, pos - start), "dims");
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (count == 1) return Dims::checked(v[0], v[0], v[0]);
  if (count != 3) throw Error(ErrorCode::InvalidArgument, "dims must be MxNxK or N, got '" + s + "'");
  return Dims::checked(v[0], v[1], v[2]);
}

std::string to_string(const Dims& d) {
  return std::to_string(d.m) + "x" + std::to_string(d.n) + "x" + std::to_string(d.k);
}

std::string_view to_string(ElemType t) { return t == ElemType::F32 ? "f32" : "f64"; }

ElemType parse_elem_type(std::string_view text) {
  const auto s = lower(trim(text));
  if (s == "f32" || s == "float" || s == "fp32") return ElemType::F32;
  if (s == "f64" || s == "double" || s == "fp64") return ElemType::F64;
  throw Error(ErrorCode::InvalidArgument, "unknown dtype '" + s + "'");
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::B3A2C0: return "B3A2C0";
    case Variant::A3B2C0: return "A3B2C0";
    case Variant::B3C2A0: return "B3C2A0";
    case Variant::A3C2B0: return "A3C2B0";
    case Variant::C3B2A0: return "C3B2A0";
    case Variant::C3A2B0: return "C3A2B0";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  const auto t = trim(text);
  for (auto v : kAllVariants) {
    if (lower(t) == lower(to_string(v))) return v;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown variant '" + std::string(t) + "'");
}

std::string_view to_string(Residency r) {
  switch (r) {
    case Residency::CReg: return "CReg";
    case Residency::AReg: return "AReg";
    case Residency::BReg: return "BReg";
  }
  return "?";
}

Residency residency(Variant v) {
  switch (v) {
    case Variant::B3A2C0:
    case Variant::A3B2C0: return Residency::CReg;
    case Variant::B3C2A0:
    case Variant::C3B2A0: return Residency::AReg;
    case Variant::A3C2B0:
    case Variant::C3A2B0: return Residency::BReg;
  }
  return Residency::CReg;
}

bool valid_for(const MicroShape& s, Residency r) {
  switch (r) {
    case Residency::CReg: return s.mr >= 1 && s.nr >= 1 && s.kr == 0;
    case Residency::AReg: return s.mr >= 1 && s.kr >= 1 && s.nr == 0;
    case Residency::BReg: return s.kr >= 1 && s.nr >= 1 && s.mr == 0;
  }
  return false;
}

std::string to_string(const MicroShape& s, Residency r) {
  switch (r) {
    case Residency::CReg: return std::to_string(s.mr) + "x" + std::to_string(s.nr);
    case Residency::AReg: return std::to_string(s.mr) + "x" + std::to_string(s.kr);
    case Residency::BReg: return std::to_string(s.kr) + "x" + std::to_string(s.nr);
  }
  return "?";
}

MicroShape parse_shape(std::string_view text, Residency r) {
  const auto t = lower(trim(text));
  const auto pos = t.find('x');
  if (pos == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "micro shape must look like 8x12, got '" + t + "'");
  }
  const index_t first = parse_count(std::string_view(t).substr(0, pos), "micro shape");
  const index_t second = parse_count(std::string_view(t).substr(pos + 1), "micro shape");
  MicroShape s;
  switch (r) {
    case Residency::CReg: s = {first, second, 0}; break;
    case Residency::AReg: s = {first, 0, second}; break;
    case Residency::BReg: s = {0, second, first}; break;
  }
  if (!valid_for(s, r)) throw Error(ErrorCode::InvalidArgument, "micro shape extents must be >= 1");
  return s;
}

void CacheSpec::validate() const {
  const std::array<std::pair<const char*, const CacheLevel*>, 3> levels = {
      {{"l1", &l1}, {"l2", &l2}, {"l3", &l3}}};
  for (const auto& [name, level] : levels) {
    if (level->size_bytes == 0 || level->ways == 0 || level->line_bytes == 0) {
      throw Error(ErrorCode::InvalidArgument, std::string(name) + " has a zero field");
    }
    if (level->size_bytes % (level->ways * level->line_bytes) != 0) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string(name) + ".size_bytes is not divisible by ways * line_bytes");
    }
  }
}

CacheSpec CacheSpec::carmel() {
  return CacheSpec{
      .l1 = {64 * 1024, 4, 64},
      .l2 = {2 * 1024 * 1024, 16, 64},
      .l3 = {4 * 1024 * 1024, 16, 64},
  };
}

CacheSpec parse_cache_spec(std::string_view text) {
  CacheSpec spec{};
  std::array<bool, 9> seen{};
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = lower(trim(line.substr(0, eq)));
    const auto value_text = line.substr(eq + 1);

    CacheLevel* level = nullptr;
    std::size_t level_idx = 0;
    if (key.rfind("l1.", 0) == 0) { level = &spec.l1; level_idx = 0; }
    else if (key.rfind("l2.", 0) == 0) { level = &spec.l2; level_idx = 1; }
    else if (key.rfind("l3.", 0) == 0) { level = &spec.l3; level_idx = 2; }
    if (level == nullptr) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    const std::string field = key.substr(3);
    index_t* target = nullptr;
    std::size_t field_idx = 0;
    if (field == "size_bytes") { target = &level->size_bytes; field_idx = 0; }
    else if (field == "ways") { target = &level->ways; field_idx = 1; }
    else if (field == "line_bytes") { target = &level->line_bytes; field_idx = 2; }
    if (target == nullptr) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    try {
      *target = parse_count(value_text, key);
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    seen[level_idx * 3 + field_idx] = true;
  }
  for (bool s : seen) {
    if (!s) throw Error(ErrorCode::ParseError, "cache spec is missing one of the nine required keys");
  }
  spec.validate();
  return spec;
}

CacheSpec load_cache_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open cache spec '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_cache_spec(buf.str());
}

std::string format_cache_spec(const CacheSpec& spec) {
  std::ostringstream out;
  const std::array<std::pair<const char*, const CacheLevel*>, 3> levels = {
      {{"l1", &spec.l1}, {"l2", &spec.l2}, {"l3", &spec.l3}}};
  for (const auto& [name, level] : levels) {
    out << name << ".size_bytes = " << level->size_bytes << '\n'
        << name << ".ways = " << level->ways << '\n'
        << name << ".line_bytes = " << level->line_bytes << '\n';
  }
  return out.str();
}

std::string to_string(const PackConfig& p) {
  if (p.pack_a && p.pack_b) return "AB";
  if (p.pack_a) return "A";
  if (p.pack_b) return "B";
  return "none";
}

PackConfig parse_pack_config(std::string_view text) {
  const auto s = lower(trim(text));
  if (s == "ab" || s == "both") return {true, true};
  if (s == "a") return {true, false};
  if (s == "b") return {false, true};
  if (s == "none") return {false, false};
  throw Error(ErrorCode::InvalidArgument, "pack config must be one of AB, A, B, none; got '" + s + "'");
}

std::string_view to_string(ParallelLoop l) {
  switch (l) {
    case ParallelLoop::None: return "none";
    case ParallelLoop::Jc: return "jc";
    case ParallelLoop::Ic: return "ic";
    case ParallelLoop::Jr: return "jr";
    case ParallelLoop::Ir: return "ir";
  }
  return "?";
}

ParallelLoop parse_parallel_loop(std::string_view text) {
  const auto s = lower(trim(text));
  if (s == "none") return ParallelLoop::None;
  if (s == "jc") return ParallelLoop::Jc;
  if (s == "ic") return ParallelLoop::Ic;
  if (s == "jr") return ParallelLoop::Jr;
  if (s == "ir") return ParallelLoop::Ir;
  if (s == "pc") {
    throw Error(ErrorCode::InvalidArgument, "loop pc cannot be parallelized (race on C)");
  }
  throw Error(ErrorCode::InvalidArgument, "unknown parallel loop '" + s + "'");
}

void ParallelSpec::validate() const {
  if (threads == 0) throw Error(ErrorCode::InvalidArgument, "threads must be >= 1");
  if (loop == ParallelLoop::None && threads != 1) {
    throw Error(ErrorCode::InvalidArgument, "threads > 1 requires a parallel loop");
  }
}

template <class T>
void validate_problem(const Dims& dims, MatrixView<const T> a, MatrixView<const T> b,
                      MatrixView<const T> c) {
  if (dims.m == 0 || dims.n == 0 || dims.k == 0) {
    throw Error(ErrorCode::InvalidArgument, "dimensions must be positive, got " + to_string(dims));
  }
  auto check = [](const char* name, MatrixView<const T> v, index_t rows, index_t cols) {
    if (v.rows() != rows || v.cols() != cols) {
      throw Error(ErrorCode::DimensionMismatch,
                  std::string(name) + " is " + std::to_string(v.rows()) + "x" +
                      std::to_string(v.cols()) + ", expected " + std::to_string(rows) + "x" +
                      std::to_string(cols));
    }
  };
  check("A", a, dims.m, dims.k);
  check("B", b, dims.k, dims.n);
  check("C", c, dims.m, dims.n);
  auto buffer = [](const char* name, MatrixView<const T> v) {
    if (!v.well_formed()) {
      throw Error(ErrorCode::BufferTooShort,
                  std::string(name) + " buffer of " + std::to_string(v.span().size()) +
                      " elements cannot hold " + std::to_string(v.rows()) + "x" +
                      std::to_string(v.cols()) + " with row stride " +
                      std::to_string(v.row_stride()));
    }
  };
  buffer("A", a);
  buffer("B", b);
  buffer("C", c);
}

template void validate_problem<float>(const Dims&, MatrixView<const float>, MatrixView<const float>,
                                      MatrixView<const float>);
template void validate_problem<double>(const Dims&, MatrixView<const double>,
                                       MatrixView<const double>, MatrixView<const double>);

}  // namespace panelforge
