#pragma once

#include <span>
#include <vector>

#include "panelforge/core.hpp"

namespace panelforge {

// Geometry of a packed buffer: `panels` micro-panels, each `panel_dim` wide on
// the register-facing axis and `depth` long on the other axis.
struct PanelLayout {
  index_t panel_dim = 0;
  index_t depth = 0;
  index_t panels = 0;

  index_t panel_len() const { return panel_dim * depth; }
  index_t size() const { return panels * panel_len(); }

  friend bool operator==(const PanelLayout&, const PanelLayout&) = default;
};

template <class T>
struct PackedPanels {
  std::vector<T> data;
  PanelLayout layout;

  index_t panel_len() const { return layout.panel_len(); }
  index_t panels() const { return layout.panels; }
  index_t panel_dim() const { return layout.panel_dim; }
  index_t depth() const { return layout.depth; }
};

// Two layouts cover every packed buffer in the family.
//
// Row panels (the Ac layout): rows are grouped into panels of `height`; each
// panel is stored column by column with `height` contiguous elements per
// column. Offset p*(height*cols) + q*height + r holds src(p*height + r, q).
//
// Column panels (the Bc layout): columns are grouped into panels of `width`;
// each panel is stored row by row. Offset p*(rows*width) + q*width + r holds
// src(q, p*width + r).
//
// Lanes past the source extent are written as zero. `out` must hold at least
// the returned layout's size().
PanelLayout row_panel_layout(index_t rows, index_t cols, index_t height);
PanelLayout col_panel_layout(index_t rows, index_t cols, index_t width);

template <class T>
PanelLayout pack_row_panels(MatrixView<const T> src, index_t height, std::span<T> out);
template <class T>
PanelLayout pack_col_panels(MatrixView<const T> src, index_t width, std::span<T> out);
// Inverse maps; padded lanes are never written to dst.
template <class T>
void unpack_row_panels(std::span<const T> in, index_t height, MatrixView<T> dst);
template <class T>
void unpack_col_panels(std::span<const T> in, index_t width, MatrixView<T> dst);

// mc x kc block of A into mr-row micro-panels (C-resident kernels).
template <class T>
PackedPanels<T> pack_a_block(MatrixView<const T> src, index_t mr);
// kc x nc block of B into nr-column micro-panels (C-resident kernels).
template <class T>
PackedPanels<T> pack_b_block(MatrixView<const T> src, index_t nr);
// mc x kc block of A into kr-column micro-panels (B-resident kernels).
template <class T>
PackedPanels<T> pack_a_for_breg(MatrixView<const T> src, index_t kr);
// kc x nc block of B into kr-row micro-panels (A-resident kernels).
template <class T>
PackedPanels<T> pack_b_for_areg(MatrixView<const T> src, index_t kr);

// C is packed like Ac (mr-row panels) for AReg and like Bc (nr-column panels)
// for BReg. CReg never packs C and yields UnsupportedResidency.
template <class T>
PackedPanels<T> pack_c_block(MatrixView<const T> src, Residency residency, const MicroShape& shape);
template <class T>
void unpack_c_block(const PackedPanels<T>& packed, MatrixView<T> dst, Residency residency,
                    const MicroShape& shape);

}  // namespace panelforge
