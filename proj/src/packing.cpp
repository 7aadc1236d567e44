#include "panelforge/packing.hpp"

#include <algorithm>

namespace panelforge {

PanelLayout row_panel_layout(index_t rows, index_t cols, index_t height) {
  return PanelLayout{height, cols, ceil_div(rows, height)};
}

PanelLayout col_panel_layout(index_t rows, index_t cols, index_t width) {
  return PanelLayout{width, rows, ceil_div(cols, width)};
}

template <class T>
PanelLayout pack_row_panels(MatrixView<const T> src, index_t height, std::span<T> out) {
  const auto layout = row_panel_layout(src.rows(), src.cols(), height);
  const index_t cols = src.cols();
  T* dst = out.data();
  for (index_t p = 0; p < layout.panels; ++p) {
    const index_t row0 = p * height;
    const index_t valid = std::min(height, src.rows() - row0);
    T* panel = dst + p * layout.panel_len();
    for (index_t r = 0; r < valid; ++r) {
      const T* row = src.ptr(row0 + r, 0);
      for (index_t q = 0; q < cols; ++q) panel[q * height + r] = row[q];
    }
    if (valid < height) {
      for (index_t q = 0; q < cols; ++q) {
        std::fill(panel + q * height + valid, panel + (q + 1) * height, T(0));
      }
    }
  }
  return layout;
}

template <class T>
PanelLayout pack_col_panels(MatrixView<const T> src, index_t width, std::span<T> out) {
  const auto layout = col_panel_layout(src.rows(), src.cols(), width);
  const index_t rows = src.rows();
  T* dst = out.data();
  for (index_t p = 0; p < layout.panels; ++p) {
    const index_t col0 = p * width;
    const index_t valid = std::min(width, src.cols() - col0);
    T* panel = dst + p * layout.panel_len();
    for (index_t q = 0; q < rows; ++q) {
      const T* row = src.ptr(q, col0);
      T* line = panel + q * width;
      std::copy(row, row + valid, line);
      std::fill(line + valid, line + width, T(0));
    }
  }
  return layout;
}

template <class T>
void unpack_row_panels(std::span<const T> in, index_t height, MatrixView<T> dst) {
  const auto layout = row_panel_layout(dst.rows(), dst.cols(), height);
  for (index_t p = 0; p < layout.panels; ++p) {
    const index_t row0 = p * height;
    const index_t valid = std::min(height, dst.rows() - row0);
    const T* panel = in.data() + p * layout.panel_len();
    for (index_t r = 0; r < valid; ++r) {
      T* row = dst.ptr(row0 + r, 0);
      for (index_t q = 0; q < dst.cols(); ++q) row[q] = panel[q * height + r];
    }
  }
}

template <class T>
void unpack_col_panels(std::span<const T> in, index_t width, MatrixView<T> dst) {
  const auto layout = col_panel_layout(dst.rows(), dst.cols(), width);
  for (index_t p = 0; p < layout.panels; ++p) {
    const index_t col0 = p * width;
    const index_t valid = std::min(width, dst.cols() - col0);
    const T* panel = in.data() + p * layout.panel_len();
    for (index_t q = 0; q < dst.rows(); ++q) {
      const T* line = panel + q * width;
      std::copy(line, line + valid, dst.ptr(q, col0));
    }
  }
}

namespace {

template <class T>
PackedPanels<T> packed_rows(MatrixView<const T> src, index_t height) {
  if (height == 0) throw Error(ErrorCode::InvalidArgument, "panel height must be >= 1");
  PackedPanels<T> out;
  out.data.resize(row_panel_layout(src.rows(), src.cols(), height).size());
  out.layout = pack_row_panels<T>(src, height, out.data);
  return out;
}

template <class T>
PackedPanels<T> packed_cols(MatrixView<const T> src, index_t width) {
  if (width == 0) throw Error(ErrorCode::InvalidArgument, "panel width must be >= 1");
  PackedPanels<T> out;
  out.data.resize(col_panel_layout(src.rows(), src.cols(), width).size());
  out.layout = pack_col_panels<T>(src, width, out.data);
  return out;
}

}  // namespace

template <class T>
PackedPanels<T> pack_a_block(MatrixView<const T> src, index_t mr) {
  return packed_rows(src, mr);
}

template <class T>
PackedPanels<T> pack_b_block(MatrixView<const T> src, index_t nr) {
  return packed_cols(src, nr);
}

template <class T>
PackedPanels<T> pack_a_for_breg(MatrixView<const T> src, index_t kr) {
  return packed_cols(src, kr);
}

template <class T>
PackedPanels<T> pack_b_for_areg(MatrixView<const T> src, index_t kr) {
  return packed_rows(src, kr);
}

template <class T>
PackedPanels<T> pack_c_block(MatrixView<const T> src, Residency residency, const MicroShape& shape) {
  switch (residency) {
    case Residency::AReg: return packed_rows(src, shape.mr);
    case Residency::BReg: return packed_cols(src, shape.nr);
    case Residency::CReg: break;
  }
  throw Error(ErrorCode::UnsupportedResidency, "C is never packed for C-resident kernels");
}

template <class T>
void unpack_c_block(const PackedPanels<T>& packed, MatrixView<T> dst, Residency residency,
                    const MicroShape& shape) {
  switch (residency) {
    case Residency::AReg: unpack_row_panels<T>(packed.data, shape.mr, dst); return;
    case Residency::BReg: unpack_col_panels<T>(packed.data, shape.nr, dst); return;
    case Residency::CReg: break;
  }
  throw Error(ErrorCode::UnsupportedResidency, "C is never packed for C-resident kernels");
}

#define PANELFORGE_INSTANTIATE_PACKING(T)                                                       \
  template PanelLayout pack_row_panels<T>(MatrixView<const T>, index_t, std::span<T>);          \
  template PanelLayout pack_col_panels<T>(MatrixView<const T>, index_t, std::span<T>);          \
  template void unpack_row_panels<T>(std::span<const T>, index_t, MatrixView<T>);               \
  template void unpack_col_panels<T>(std::span<const T>, index_t, MatrixView<T>);               \
  template PackedPanels<T> pack_a_block<T>(MatrixView<const T>, index_t);                       \
  template PackedPanels<T> pack_b_block<T>(MatrixView<const T>, index_t);                       \
  template PackedPanels<T> pack_a_for_breg<T>(MatrixView<const T>, index_t);                    \
  template PackedPanels<T> pack_b_for_areg<T>(MatrixView<const T>, index_t);                    \
  template PackedPanels<T> pack_c_block<T>(MatrixView<const T>, Residency, const MicroShape&);  \
  template void unpack_c_block<T>(const PackedPanels<T>&, MatrixView<T>, Residency,             \
                                  const MicroShape&);

PANELFORGE_INSTANTIATE_PACKING(float)
PANELFORGE_INSTANTIATE_PACKING(double)

#undef PANELFORGE_INSTANTIATE_PACKING

}  // namespace panelforge
