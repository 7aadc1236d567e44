#include "panelforge/blocked.hpp"

#include <algorithm>
#include <cstdlib>
#include <memory>
#include <new>

#include "panelforge/cache_model.hpp"
#include "panelforge/packing.hpp"

namespace panelforge {

void GemmPlan::validate() const {
  const Residency r = residency(variant);
  if (!valid_for(shape, r)) {
    throw Error(ErrorCode::InvalidArgument, "micro shape does not match the " +
                                                std::string(to_string(r)) + " residency of " +
                                                std::string(to_string(variant)));
  }
  if (blocking.mc == 0 || blocking.nc == 0 || blocking.kc == 0) {
    throw Error(ErrorCode::InvalidArgument, "blocking parameters must be positive");
  }
  if (r != Residency::CReg && !(pack.pack_a && pack.pack_b)) {
    throw Error(ErrorCode::UnsupportedPlan,
                std::string(to_string(variant)) + " always packs per its residency scheme");
  }
  parallel.validate();
}

GemmPlan make_plan(Variant variant, ElemType elem, const Dims& dims, const MicroShape& shape,
                   const CacheSpec& cache, PackConfig pack, ParallelSpec parallel) {
  GemmPlan plan;
  plan.variant = variant;
  plan.elem = elem;
  plan.shape = shape;
  plan.pack = pack;
  plan.parallel = parallel;
  plan.blocking = derive_blocking_for(variant, cache, shape, elem, dims).blocking;
  plan.validate();
  return plan;
}

WorkspaceSizes workspace_sizes(const GemmPlan& plan, const Dims& dims) {
  const index_t mc = std::min(plan.blocking.mc, dims.m);
  const index_t nc = std::min(plan.blocking.nc, dims.n);
  const index_t kc = std::min(plan.blocking.kc, dims.k);
  const auto& s = plan.shape;
  WorkspaceSizes out;
  switch (residency(plan.variant)) {
    case Residency::CReg:
      if (plan.pack.pack_a) out.a = row_panel_layout(mc, kc, s.mr).size();
      if (plan.pack.pack_b) out.b = col_panel_layout(kc, nc, s.nr).size();
      break;
    case Residency::AReg:
      out.b = row_panel_layout(kc, nc, s.kr).size();
      out.c = row_panel_layout(mc, nc, s.mr).size();
      break;
    case Residency::BReg:
      out.a = col_panel_layout(mc, kc, s.kr).size();
      out.c = col_panel_layout(mc, nc, s.nr).size();
      break;
  }
  return out;
}

namespace {

inline constexpr std::size_t kBufferAlignment = 64;

template <class T>
class AlignedBuffer {
 public:
  std::span<T> get(index_t n) {
    if (n > capacity_) {
      const std::size_t bytes = round_up(n * sizeof(T), kBufferAlignment);
      data_.reset(static_cast<T*>(std::aligned_alloc(kBufferAlignment, bytes)));
      if (!data_) throw std::bad_alloc();
      capacity_ = n;
    }
    return {data_.get(), n};
  }

 private:
  struct Free {
    void operator()(T* p) const { std::free(p); }
  };
  std::unique_ptr<T, Free> data_;
  index_t capacity_ = 0;
};

// Per-thread packing buffers. When a parallel loop forks, each thread gets a
// fresh workspace for whatever it packs inside the loop body; buffers packed
// outside remain in the parent's workspace and are only read.
template <class T>
struct Workspace {
  AlignedBuffer<T> a;
  AlignedBuffer<T> b;
  AlignedBuffer<T> c;
  AlignedBuffer<T> tile;
};

template <class T, class Body>
void run_loop(const ParallelSpec& ps, ParallelLoop here, index_t begin, index_t end, index_t align,
              Workspace<T>& ws, Body&& body) {
  if (ps.loop != here || ps.threads <= 1 || end - begin <= align) {
    body(begin, end, ws);
    return;
  }
  const index_t units = ceil_div(end - begin, align);
  const index_t threads = std::min<index_t>(ps.threads, units);
  const index_t chunk = ceil_div(units, threads) * align;
  // Chunks are fixed up front, so the work each thread does does not depend
  // on scheduling.
#pragma omp parallel for num_threads(static_cast<int>(threads)) schedule(static, 1)
  for (index_t t = 0; t < threads; ++t) {
    const index_t lo = begin + t * chunk;
    const index_t hi = std::min(end, lo + chunk);
    if (lo < hi) {
      Workspace<T> own;
      body(lo, hi, own);
    }
  }
}

template <class T>
class Driver {
 public:
  Driver(const GemmPlan& plan, MatrixView<const T> a, MatrixView<const T> b, MatrixView<T> c,
         const KernelRegistry<T>& registry)
      : plan_(plan),
        ps_(plan.parallel),
        s_(plan.shape),
        a_(a),
        b_(b),
        c_(c),
        m_(a.rows()),
        n_(b.cols()),
        k_(a.cols()),
        mc_(plan.blocking.mc),
        nc_(plan.blocking.nc),
        kc_(plan.blocking.kc),
        registry_(registry) {}

  void run() {
    Workspace<T> ws;
    switch (plan_.variant) {
      case Variant::B3A2C0: b3a2c0(ws); break;
      case Variant::A3B2C0: a3b2c0(ws); break;
      case Variant::B3C2A0: b3c2a0(ws); break;
      case Variant::A3C2B0: a3c2b0(ws); break;
      case Variant::C3B2A0: c3b2a0(ws); break;
      case Variant::C3A2B0: c3a2b0(ws); break;
    }
  }

 private:
  // Operand access for C-resident kernels: packed buffer or in-place view.
  struct APanels {
    const T* base;
    index_t row_stride;  // a_rs
    index_t col_stride;  // a_cs
    index_t panel_step;  // elements between consecutive mr-row panels
    bool packed;
  };
  struct BPanels {
    const T* base;
    index_t row_stride;  // b_rs
    index_t panel_step;  // elements between consecutive nr-column panels
    bool packed;
  };

  APanels a_panels(index_t ic, index_t pc, index_t mcb, index_t kcb, Workspace<T>& ws) const {
    if (!plan_.pack.pack_a) {
      return {a_.ptr(ic, pc), a_.row_stride(), 1, s_.mr * a_.row_stride(), false};
    }
    auto buf = ws.a.get(row_panel_layout(mcb, kcb, s_.mr).size());
    pack_row_panels<T>(a_.block(ic, pc, mcb, kcb), s_.mr, buf);
    return {buf.data(), 1, s_.mr, s_.mr * kcb, true};
  }

  BPanels b_panels(index_t pc, index_t jc, index_t kcb, index_t ncb, Workspace<T>& ws) const {
    if (!plan_.pack.pack_b) {
      return {b_.ptr(pc, jc), b_.row_stride(), s_.nr, false};
    }
    auto buf = ws.b.get(col_panel_layout(kcb, ncb, s_.nr).size());
    pack_col_panels<T>(b_.block(pc, jc, kcb, ncb), s_.nr, buf);
    return {buf.data(), s_.nr, s_.nr * kcb, true};
  }

  void creg_tile(const APanels& ap, index_t ir, const BPanels& bp, index_t jr, index_t kcb,
                 index_t ci, index_t cj, index_t mr_eff, index_t nr_eff, Workspace<T>& ws) const {
    const index_t mr = s_.mr;
    const index_t nr = s_.nr;
    const T* a = ap.base + (ir / mr) * ap.panel_step;
    const T* b = bp.base + (jr / nr) * bp.panel_step;
    T* c = c_.ptr(ci, cj);
    const index_t ldc = c_.row_stride();
    if (mr_eff == mr && nr_eff == nr) {
      creg_(s_, kcb, a, ap.row_stride, ap.col_stride, b, bp.row_stride, c, ldc);
    } else if (ap.packed && bp.packed) {
      auto scratch = ws.tile.get(mr * nr);
      std::fill(scratch.begin(), scratch.end(), T(0));
      creg_(s_, kcb, a, ap.row_stride, ap.col_stride, b, bp.row_stride, scratch.data(), nr);
      for (index_t i = 0; i < mr_eff; ++i) {
        for (index_t j = 0; j < nr_eff; ++j) c[i * ldc + j] += scratch[i * nr + j];
      }
    } else {
      // An in-place operand cannot be read past its edge.
      ukr_creg_generic<T>(MicroShape{mr_eff, nr_eff, 0}, kcb, a, ap.row_stride, ap.col_stride, b,
                          bp.row_stride, c, ldc);
    }
  }

  void b3a2c0(Workspace<T>& ws0) {
    run_loop(ps_, ParallelLoop::Jc, 0, n_, s_.nr, ws0, [&](index_t j0, index_t j1, Workspace<T>& ws1) {
      for (index_t jc = j0; jc < j1; jc += nc_) {
        const index_t ncb = std::min(nc_, j1 - jc);
        for (index_t pc = 0; pc < k_; pc += kc_) {
          const index_t kcb = std::min(kc_, k_ - pc);
          const BPanels bp = b_panels(pc, jc, kcb, ncb, ws1);
          run_loop(ps_, ParallelLoop::Ic, 0, m_, s_.mr, ws1, [&](index_t i0, index_t i1, Workspace<T>& ws2) {
            for (index_t ic = i0; ic < i1; ic += mc_) {
              const index_t mcb = std::min(mc_, i1 - ic);
              const APanels ap = a_panels(ic, pc, mcb, kcb, ws2);
              run_loop(ps_, ParallelLoop::Jr, 0, ncb, s_.nr, ws2, [&](index_t r0, index_t r1, Workspace<T>& ws3) {
                for (index_t jr = r0; jr < r1; jr += s_.nr) {
                  run_loop(ps_, ParallelLoop::Ir, 0, mcb, s_.mr, ws3, [&](index_t q0, index_t q1, Workspace<T>& ws4) {
                    for (index_t ir = q0; ir < q1; ir += s_.mr) {
                      creg_tile(ap, ir, bp, jr, kcb, ic + ir, jc + jr, std::min(s_.mr, mcb - ir),
                                std::min(s_.nr, ncb - jr), ws4);
                    }
                  });
                }
              });
            }
          });
        }
      }
    });
  }

  void a3b2c0(Workspace<T>& ws0) {
    run_loop(ps_, ParallelLoop::Ic, 0, m_, s_.mr, ws0, [&](index_t i0, index_t i1, Workspace<T>& ws1) {
      for (index_t ic = i0; ic < i1; ic += mc_) {
        const index_t mcb = std::min(mc_, i1 - ic);
        for (index_t pc = 0; pc < k_; pc += kc_) {
          const index_t kcb = std::min(kc_, k_ - pc);
          const APanels ap = a_panels(ic, pc, mcb, kcb, ws1);
          run_loop(ps_, ParallelLoop::Jc, 0, n_, s_.nr, ws1, [&](index_t j0, index_t j1, Workspace<T>& ws2) {
            for (index_t jc = j0; jc < j1; jc += nc_) {
              const index_t ncb = std::min(nc_, j1 - jc);
              const BPanels bp = b_panels(pc, jc, kcb, ncb, ws2);
              run_loop(ps_, ParallelLoop::Ir, 0, mcb, s_.mr, ws2, [&](index_t q0, index_t q1, Workspace<T>& ws3) {
                for (index_t ir = q0; ir < q1; ir += s_.mr) {
                  run_loop(ps_, ParallelLoop::Jr, 0, ncb, s_.nr, ws3, [&](index_t r0, index_t r1, Workspace<T>& ws4) {
                    for (index_t jr = r0; jr < r1; jr += s_.nr) {
                      creg_tile(ap, ir, bp, jr, kcb, ic + ir, jc + jr, std::min(s_.mr, mcb - ir),
                                std::min(s_.nr, ncb - jr), ws4);
                    }
                  });
                }
              });
            }
          });
        }
      }
    });
  }

  // mr x kr tile of A at (row, col), column-major and zero-padded.
  const T* a_tile(index_t row, index_t col, index_t rows, index_t cols, Workspace<T>& ws) const {
    auto tile = ws.tile.get(s_.mr * s_.kr);
    for (index_t p = 0; p < s_.kr; ++p) {
      for (index_t i = 0; i < s_.mr; ++i) {
        tile[p * s_.mr + i] = (i < rows && p < cols) ? a_(row + i, col + p) : T(0);
      }
    }
    return tile.data();
  }

  // kr x nr tile of B at (row, col), row-major and zero-padded.
  const T* b_tile(index_t row, index_t col, index_t rows, index_t cols, Workspace<T>& ws) const {
    auto tile = ws.tile.get(s_.kr * s_.nr);
    for (index_t p = 0; p < s_.kr; ++p) {
      for (index_t j = 0; j < s_.nr; ++j) {
        tile[p * s_.nr + j] = (p < rows && j < cols) ? b_(row + p, col + j) : T(0);
      }
    }
    return tile.data();
  }

  // ir -> pr -> A-resident kernel over the ncb columns of a packed C block.
  void areg_block(index_t ic, index_t pc, index_t mcb, index_t kcb, index_t ncb, const T* bc,
                  T* cc, Workspace<T>& ws) {
    run_loop(ps_, ParallelLoop::Ir, 0, mcb, s_.mr, ws, [&](index_t q0, index_t q1, Workspace<T>& ws1) {
      for (index_t ir = q0; ir < q1; ir += s_.mr) {
        T* c_panel = cc + (ir / s_.mr) * s_.mr * ncb;
        for (index_t pr = 0; pr < kcb; pr += s_.kr) {
          const T* tile = a_tile(ic + ir, pc + pr, std::min(s_.mr, mcb - ir),
                                 std::min(s_.kr, kcb - pr), ws1);
          const T* b_panel = bc + (pr / s_.kr) * s_.kr * ncb;
          run_loop(ps_, ParallelLoop::Jr, 0, ncb, 1, ws1, [&](index_t j0, index_t j1, Workspace<T>&) {
            areg_(s_, j1 - j0, tile, b_panel + j0 * s_.kr, c_panel + j0 * s_.mr);
          });
        }
      }
    });
  }

  // jr -> pr -> B-resident kernel over the mcb rows of a packed C block.
  void breg_block(index_t jc, index_t pc, index_t mcb, index_t kcb, index_t ncb, const T* ac,
                  T* cc, Workspace<T>& ws) {
    run_loop(ps_, ParallelLoop::Jr, 0, ncb, s_.nr, ws, [&](index_t r0, index_t r1, Workspace<T>& ws1) {
      for (index_t jr = r0; jr < r1; jr += s_.nr) {
        T* c_panel = cc + (jr / s_.nr) * s_.nr * mcb;
        for (index_t pr = 0; pr < kcb; pr += s_.kr) {
          const T* tile = b_tile(pc + pr, jc + jr, std::min(s_.kr, kcb - pr),
                                 std::min(s_.nr, ncb - jr), ws1);
          const T* a_panel = ac + (pr / s_.kr) * s_.kr * mcb;
          run_loop(ps_, ParallelLoop::Ir, 0, mcb, 1, ws1, [&](index_t i0, index_t i1, Workspace<T>&) {
            breg_(s_, i1 - i0, tile, a_panel + i0 * s_.kr, c_panel + i0 * s_.nr);
          });
        }
      }
    });
  }

  T* pack_c_rows(index_t ic, index_t jc, index_t mcb, index_t ncb, Workspace<T>& ws) {
    auto buf = ws.c.get(row_panel_layout(mcb, ncb, s_.mr).size());
    pack_row_panels<T>(MatrixView<const T>(c_.block(ic, jc, mcb, ncb)), s_.mr, buf);
    return buf.data();
  }

  T* pack_c_cols(index_t ic, index_t jc, index_t mcb, index_t ncb, Workspace<T>& ws) {
    auto buf = ws.c.get(col_panel_layout(mcb, ncb, s_.nr).size());
    pack_col_panels<T>(MatrixView<const T>(c_.block(ic, jc, mcb, ncb)), s_.nr, buf);
    return buf.data();
  }

  void b3c2a0(Workspace<T>& ws0) {
    run_loop(ps_, ParallelLoop::Jc, 0, n_, 1, ws0, [&](index_t j0, index_t j1, Workspace<T>& ws1) {
      for (index_t jc = j0; jc < j1; jc += nc_) {
        const index_t ncb = std::min(nc_, j1 - jc);
        for (index_t pc = 0; pc < k_; pc += kc_) {
          const index_t kcb = std::min(kc_, k_ - pc);
          auto bbuf = ws1.b.get(row_panel_layout(kcb, ncb, s_.kr).size());
          pack_row_panels<T>(b_.block(pc, jc, kcb, ncb), s_.kr, bbuf);
          run_loop(ps_, ParallelLoop::Ic, 0, m_, s_.mr, ws1, [&](index_t i0, index_t i1, Workspace<T>& ws2) {
            for (index_t ic = i0; ic < i1; ic += mc_) {
              const index_t mcb = std::min(mc_, i1 - ic);
              T* cc = pack_c_rows(ic, jc, mcb, ncb, ws2);
              areg_block(ic, pc, mcb, kcb, ncb, bbuf.data(), cc, ws2);
              unpack_row_panels<T>(std::span<const T>(cc, row_panel_layout(mcb, ncb, s_.mr).size()),
                                   s_.mr, c_.block(ic, jc, mcb, ncb));
            }
          });
        }
      }
    });
  }

  void c3b2a0(Workspace<T>& ws0) {
    run_loop(ps_, ParallelLoop::Ic, 0, m_, s_.mr, ws0, [&](index_t i0, index_t i1, Workspace<T>& ws1) {
      for (index_t ic = i0; ic < i1; ic += mc_) {
        const index_t mcb = std::min(mc_, i1 - ic);
        run_loop(ps_, ParallelLoop::Jc, 0, n_, 1, ws1, [&](index_t j0, index_t j1, Workspace<T>& ws2) {
          for (index_t jc = j0; jc < j1; jc += nc_) {
            const index_t ncb = std::min(nc_, j1 - jc);
            T* cc = pack_c_rows(ic, jc, mcb, ncb, ws2);
            for (index_t pc = 0; pc < k_; pc += kc_) {
              const index_t kcb = std::min(kc_, k_ - pc);
              auto bbuf = ws2.b.get(row_panel_layout(kcb, ncb, s_.kr).size());
              pack_row_panels<T>(b_.block(pc, jc, kcb, ncb), s_.kr, bbuf);
              areg_block(ic, pc, mcb, kcb, ncb, bbuf.data(), cc, ws2);
            }
            unpack_row_panels<T>(std::span<const T>(cc, row_panel_layout(mcb, ncb, s_.mr).size()),
                                 s_.mr, c_.block(ic, jc, mcb, ncb));
          }
        });
      }
    });
  }

  void a3c2b0(Workspace<T>& ws0) {
    run_loop(ps_, ParallelLoop::Ic, 0, m_, 1, ws0, [&](index_t i0, index_t i1, Workspace<T>& ws1) {
      for (index_t ic = i0; ic < i1; ic += mc_) {
        const index_t mcb = std::min(mc_, i1 - ic);
        for (index_t pc = 0; pc < k_; pc += kc_) {
          const index_t kcb = std::min(kc_, k_ - pc);
          auto abuf = ws1.a.get(col_panel_layout(mcb, kcb, s_.kr).size());
          pack_col_panels<T>(a_.block(ic, pc, mcb, kcb), s_.kr, abuf);
          run_loop(ps_, ParallelLoop::Jc, 0, n_, s_.nr, ws1, [&](index_t j0, index_t j1, Workspace<T>& ws2) {
            for (index_t jc = j0; jc < j1; jc += nc_) {
              const index_t ncb = std::min(nc_, j1 - jc);
              T* cc = pack_c_cols(ic, jc, mcb, ncb, ws2);
              breg_block(jc, pc, mcb, kcb, ncb, abuf.data(), cc, ws2);
              unpack_col_panels<T>(std::span<const T>(cc, col_panel_layout(mcb, ncb, s_.nr).size()),
                                   s_.nr, c_.block(ic, jc, mcb, ncb));
            }
          });
        }
      }
    });
  }

  void c3a2b0(Workspace<T>& ws0) {
    run_loop(ps_, ParallelLoop::Jc, 0, n_, s_.nr, ws0, [&](index_t j0, index_t j1, Workspace<T>& ws1) {
      for (index_t jc = j0; jc < j1; jc += nc_) {
        const index_t ncb = std::min(nc_, j1 - jc);
        run_loop(ps_, ParallelLoop::Ic, 0, m_, 1, ws1, [&](index_t i0, index_t i1, Workspace<T>& ws2) {
          for (index_t ic = i0; ic < i1; ic += mc_) {
            const index_t mcb = std::min(mc_, i1 - ic);
            T* cc = pack_c_cols(ic, jc, mcb, ncb, ws2);
            for (index_t pc = 0; pc < k_; pc += kc_) {
              const index_t kcb = std::min(kc_, k_ - pc);
              auto abuf = ws2.a.get(col_panel_layout(mcb, kcb, s_.kr).size());
              pack_col_panels<T>(a_.block(ic, pc, mcb, kcb), s_.kr, abuf);
              breg_block(jc, pc, mcb, kcb, ncb, abuf.data(), cc, ws2);
            }
            unpack_col_panels<T>(std::span<const T>(cc, col_panel_layout(mcb, ncb, s_.nr).size()),
                                 s_.nr, c_.block(ic, jc, mcb, ncb));
          }
        });
      }
    });
  }

  const GemmPlan& plan_;
  const ParallelSpec& ps_;
  const MicroShape s_;
  MatrixView<const T> a_;
  MatrixView<const T> b_;
  MatrixView<T> c_;
  index_t m_, n_, k_;
  index_t mc_, nc_, kc_;
  const KernelRegistry<T>& registry_;
  CRegKernel<T> creg_ = residency(plan_.variant) == Residency::CReg ? registry_.creg(s_) : nullptr;
  ARegKernel<T> areg_ = residency(plan_.variant) == Residency::AReg ? registry_.areg(s_) : nullptr;
  BRegKernel<T> breg_ = residency(plan_.variant) == Residency::BReg ? registry_.breg(s_) : nullptr;
};

}  // namespace

template <class T>
void gemm_blocked(const GemmPlan& plan, MatrixView<const T> a, MatrixView<const T> b,
                  MatrixView<T> c, const KernelRegistry<T>& registry) {
  plan.validate();
  if (plan.elem != elem_type_of<T>()) {
    throw Error(ErrorCode::InvalidArgument, "plan element type does not match the operands");
  }
  const Dims dims{a.rows(), b.cols(), a.cols()};
  validate_problem<T>(dims, a, b, c);
  Driver<T>(plan, a, b, c, registry).run();
}

template <class T>
void gemm_unpacked_paths(const GemmPlan& plan, MatrixView<const T> a, MatrixView<const T> b,
                         MatrixView<T> c, const KernelRegistry<T>& registry) {
  if (residency(plan.variant) != Residency::CReg) {
    throw Error(ErrorCode::UnsupportedPlan, "operand packing can only be skipped for C-resident variants");
  }
  gemm_blocked(plan, a, b, c, registry);
}

template <class T>
void parallel_execute(const GemmPlan& plan, MatrixView<const T> a, MatrixView<const T> b,
                      MatrixView<T> c, const KernelRegistry<T>& registry) {
  gemm_blocked(plan, a, b, c, registry);
}

#define PANELFORGE_INSTANTIATE_BLOCKED(T)                                                      \
  template void gemm_blocked<T>(const GemmPlan&, MatrixView<const T>, MatrixView<const T>,     \
                                MatrixView<T>, const KernelRegistry<T>&);                      \
  template void gemm_unpacked_paths<T>(const GemmPlan&, MatrixView<const T>,                   \
                                       MatrixView<const T>, MatrixView<T>,                     \
                                       const KernelRegistry<T>&);                              \
  template void parallel_execute<T>(const GemmPlan&, MatrixView<const T>, MatrixView<const T>, \
                                    MatrixView<T>, const KernelRegistry<T>&);

PANELFORGE_INSTANTIATE_BLOCKED(float)
PANELFORGE_INSTANTIATE_BLOCKED(double)

#undef PANELFORGE_INSTANTIATE_BLOCKED

}  // namespace panelforge
