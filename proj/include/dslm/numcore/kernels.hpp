#pragma once

#include <cstddef>

// Raw dense kernels behind the differentiable ops. Every output element is
// accumulated over the inner dimension in ascending order, so a row computed
// on its own is bitwise identical to the same row inside a larger product.
namespace dslm::num::kernels {

// C[m x n] (+)= A[m x k] * B[k x n]
template <typename Real>
void gemm_nn(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);

// C[m x n] (+)= A[m x k] * B[n x k]^T
template <typename Real>
void gemm_nt(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);

// C[m x n] (+)= A[k x m]^T * B[k x n]
template <typename Real>
void gemm_tn(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);

}  // namespace dslm::num::kernels
