#pragma once

#include "panelforge/core.hpp"

namespace panelforge {

// Reference C += A * B. Fixed i -> j -> p nest with scalar accumulation in
// ascending p; every optimized path is checked against this.
template <class T>
void gemm_naive(const Dims& dims, MatrixView<const T> a, MatrixView<const T> b, MatrixView<T> c);


// Componentwise comparison of an optimized result against gemm_naive. The
// bound for C(i,j) is ulps_per_k * k * eps * (|C0(i,j)| + sum_p |A(i,p)| |B(p,j)|).
struct OracleReport {
  double max_abs_error = 0;
  double max_bound_ratio = 0;  // max of error / bound (0/0 counts as 0)
  index_t worst_i = 0;
  index_t worst_j = 0;
  bool within = true;
};

template <class T>
OracleReport check_against_oracle(const Dims& dims, MatrixView<const T> a, MatrixView<const T> b,
                                  MatrixView<const T> c_before, MatrixView<const T> c_after,
                                  double ulps_per_k = 4.0);

}  // namespace panelforge
