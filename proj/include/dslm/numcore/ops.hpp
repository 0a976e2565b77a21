#pragma once

#include <span>

#include "dslm/common/tokens.hpp"
#include "dslm/numcore/graph.hpp"

// Differentiable operations. Shapes are checked eagerly and a mismatch throws
// dslm::Error with both shapes in the message. Broadcasting exists only where
// named: a rank-2 right operand of matmul is shared across leading axes,
// add_bias adds a vector to every row, and a softmax mask may cover only the
// trailing two axes.
namespace dslm::num {

inline constexpr double kLayerNormEps = 1e-5;

// [.., m, k] x [k, n] -> [.., m, n], or batched [B, m, k] x [B, k, n].
template <typename Real>
Var<Real> matmul(Var<Real> a, Var<Real> b);

// a x b^T over the last two axes: [.., m, k] x [.., n, k] -> [.., m, n].
template <typename Real>
Var<Real> matmul_nt(Var<Real> a, Var<Real> b);

template <typename Real>
Var<Real> add(Var<Real> a, Var<Real> b);

template <typename Real>
Var<Real> mul(Var<Real> a, Var<Real> b);

template <typename Real>
Var<Real> add_bias(Var<Real> x, Var<Real> bias);

template <typename Real>
Var<Real> scale(Var<Real> x, Real factor);

template <typename Real>
Var<Real> gelu(Var<Real> x);

template <typename Real>
Var<Real> sum(Var<Real> x);

template <typename Real>
Var<Real> layer_norm(Var<Real> x, Var<Real> gain, Var<Real> bias);

// softmax(x + mask) along the last axis. `mask` holds 0 (attend) or -inf
// (blocked) and has either x's shape or x's trailing two extents. A row with
// every entry blocked is rejected.
template <typename Real>
Var<Real> softmax_masked(Var<Real> x, const Tensor<Real>& mask);

template <typename Real>
Var<Real> softmax(Var<Real> x);

// Rows of table[V x d] selected by ids -> [ids.size() x d].
template <typename Real>
Var<Real> embedding(Var<Real> table, std::span<const TokenId> ids);

// [R x d1] ++ [R x d2] -> [R x (d1 + d2)]
template <typename Real>
Var<Real> concat_cols(Var<Real> a, Var<Real> b);

// [T x (H*dk)] -> [H x T x dk] and back.
template <typename Real>
Var<Real> split_heads(Var<Real> x, std::size_t heads);

template <typename Real>
Var<Real> merge_heads(Var<Real> x);

// (sum_t w_t * -log softmax(logits_t)[target_t]) / max(1, sum_t w_t).
// All-zero weights give exactly 0 with zero gradient.
template <typename Real>
Var<Real> cross_entropy(Var<Real> logits, std::span<const TokenId> targets, std::span<const double> weights);

}  // namespace dslm::num
