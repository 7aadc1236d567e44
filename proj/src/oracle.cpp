#include "panelforge/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace panelforge {

template <class T>
void gemm_naive(const Dims& dims, MatrixView<const T> a, MatrixView<const T> b, MatrixView<T> c) {
  validate_problem<T>(dims, a, b, c);
  for (index_t i = 0; i < dims.m; ++i) {
    for (index_t j = 0; j < dims.n; ++j) {
      T acc = c(i, j);
      for (index_t p = 0; p < dims.k; ++p) acc += a(i, p) * b(p, j);
      c(i, j) = acc;
    }
  }
}

template void gemm_naive<float>(const Dims&, MatrixView<const float>, MatrixView<const float>,
                                MatrixView<float>);
template void gemm_naive<double>(const Dims&, MatrixView<const double>, MatrixView<const double>,
                                 MatrixView<double>);


template <class T>
OracleReport check_against_oracle(const Dims& dims, MatrixView<const T> a, MatrixView<const T> b,
                                  MatrixView<const T> c_before, MatrixView<const T> c_after,
                                  double ulps_per_k) {
  validate_problem<T>(dims, a, b, c_before);
  validate_problem<T>(dims, a, b, c_after);
  std::vector<T> ref(dims.m * dims.n);
  MatrixView<T> ref_view(std::span<T>(ref), dims.m, dims.n);
  for (index_t i = 0; i < dims.m; ++i) {
    for (index_t j = 0; j < dims.n; ++j) ref_view(i, j) = c_before(i, j);
  }
  gemm_naive<T>(dims, a, b, ref_view);

  const double eps = std::numeric_limits<T>::epsilon();
  OracleReport report;
  for (index_t i = 0; i < dims.m; ++i) {
    for (index_t j = 0; j < dims.n; ++j) {
      double magnitude = std::abs(double(c_before(i, j)));
      for (index_t p = 0; p < dims.k; ++p) magnitude += std::abs(double(a(i, p)) * double(b(p, j)));
      const double bound = ulps_per_k * double(dims.k) * eps * magnitude;
      const double err = std::abs(double(c_after(i, j)) - double(ref_view(i, j)));
      const double ratio = err == 0 ? 0.0 : (bound == 0 ? std::numeric_limits<double>::infinity()
                                                          : err / bound);
      if (!(err <= bound)) report.within = false;
      if (ratio > report.max_bound_ratio || std::isnan(err)) {
        report.max_bound_ratio = std::isnan(err) ? std::numeric_limits<double>::infinity() : ratio;
        report.worst_i = i;
        report.worst_j = j;
      }
      report.max_abs_error = std::max(report.max_abs_error, err);
    }
  }
  return report;
}

template OracleReport check_against_oracle<float>(const Dims&, MatrixView<const float>,
                                                  MatrixView<const float>, MatrixView<const float>,
                                                  MatrixView<const float>, double);
template OracleReport check_against_oracle<double>(const Dims&, MatrixView<const double>,
                                                   MatrixView<const double>,
                                                   MatrixView<const double>,
                                                   MatrixView<const double>, double);

}  // namespace panelforge
