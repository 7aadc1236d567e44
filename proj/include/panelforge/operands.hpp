#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

#include "panelforge/core.hpp"

namespace panelforge {

// Knuth's MMIX 64-bit linear congruential generator (modulus 2^64). Fully
// specified by the standard, so streams are identical on every platform.
using OperandEngine =
    std::linear_congruential_engine<std::uint64_t, 6364136223846793005ULL, 1442695040888963407ULL, 0>;

// Uniform values in [-1, 1): the top 53 bits of each draw scaled to [0, 1),
// then mapped affinely. Avoids std::uniform_real_distribution, whose output
// is implementation defined.
template <class T>
void fill_uniform(std::span<T> out, OperandEngine& engine) {
  for (auto& x : out) {
    const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    x = static_cast<T>(2.0 * u - 1.0);
  }
}

template <class T>
void fill_uniform(std::span<T> out, std::uint64_t seed) {
  OperandEngine engine(seed);
  fill_uniform(out, engine);
}

// FNV-1a over the element bytes, as 16 hex digits.
template <class T>
std::string checksum(std::span<const T> data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  for (std::size_t i = 0; i < data.size_bytes(); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
  return out;
}

}  // namespace panelforge
