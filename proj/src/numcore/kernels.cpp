#include "dslm/numcore/kernels.hpp"

#include <algorithm>
#include <vector>

namespace dslm::num::kernels {

template <typename Real>
void gemm_nn(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, Real(0));
  for (std::size_t i = 0; i < m; ++i) {
    Real* __restrict crow = c + i * n;
    const Real* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = arow[p];
      const Real* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename Real>
void gemm_nt(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
  // Transpose B once so the inner loop runs over contiguous memory.
  std::vector<Real> bt(k * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  }
  gemm_nn(a, bt.data(), c, m, k, n, accumulate);
}

template <typename Real>
void gemm_tn(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, Real(0));
  for (std::size_t p = 0; p < k; ++p) {
    const Real* arow = a + p * m;
    const Real* __restrict brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const Real av = arow[i];
      if (av == Real(0)) continue;
      Real* __restrict crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template void gemm_nn(const float*, const float*, float*, std::size_t, std::size_t, std::size_t, bool);
template void gemm_nn(const double*, const double*, double*, std::size_t, std::size_t, std::size_t, bool);
template void gemm_nt(const float*, const float*, float*, std::size_t, std::size_t, std::size_t, bool);
template void gemm_nt(const double*, const double*, double*, std::size_t, std::size_t, std::size_t, bool);
template void gemm_tn(const float*, const float*, float*, std::size_t, std::size_t, std::size_t, bool);
template void gemm_tn(const double*, const double*, double*, std::size_t, std::size_t, std::size_t, bool);

}  // namespace dslm::num::kernels
