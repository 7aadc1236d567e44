#pragma once

#include <vector>

#include "panelforge/detail/kernels.hpp"

namespace pftest {

// Store policy that logs the element range of every C store.
struct StoreLog {
  struct Entry {
    const void* first;
    std::size_t elems;
  };
  static inline std::vector<Entry> entries;

  template <class V, class T>
  static void store(T* p, const V& v) {
    entries.push_back({p, sizeof(V) / sizeof(T)});
    panelforge::detail::DirectStore::store<V>(p, v);
  }
};

}  // namespace pftest
