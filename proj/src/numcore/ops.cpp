#include "dslm/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dslm/common/error.hpp"
#include "dslm/numcore/kernels.hpp"

namespace dslm::num {
namespace {

template <typename Real>
void check_same_graph(Var<Real> a, Var<Real> b, const char* op) {
  if (a.graph != b.graph) throw Error(std::string(op) + ": operands belong to different graphs");
}

template <typename Real>
[[noreturn]] void shape_error(const char* op, const Tensor<Real>& a, const Tensor<Real>& b) {
  throw Error(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
              shape_string(b.shape()));
}

template <typename Real>
Real* grad_if_needed(Graph<Real>& g, std::uint32_t id) {
  return g.needs_grad(Var<Real>{&g, id}) ? g.grad_buffer(id).data() : nullptr;
}

}  // namespace

template <typename Real>
Var<Real> matmul(Var<Real> a, Var<Real> b) {
  check_same_graph(a, b, "matmul");
  Graph<Real>& g = *a.graph;
  const Tensor<Real>& av = a.value();
  const Tensor<Real>& bv = b.value();
  if (av.rank() < 2 || bv.rank() < 2) shape_error("matmul", av, bv);
  const std::size_t k = av.cols();
  if (bv.rank() == 2) {
    if (bv.dim(0) != k) shape_error("matmul", av, bv);
    const std::size_t m = av.rows();
    const std::size_t n = bv.dim(1);
    Shape out_shape = av.shape();
    out_shape.back() = n;
    Tensor<Real> out(out_shape);
    kernels::gemm_nn(av.data(), bv.data(), out.data(), m, k, n, false);
    return g.record(std::move(out), {a, b}, [a = a.id, b = b.id, m, k, n](Graph<Real>& g, std::uint32_t self) {
      const Real* dc = g.grad_of(self).data();
      if (Real* da = grad_if_needed(g, a)) kernels::gemm_nt(dc, g.value_of(b).data(), da, m, n, k, true);
      if (Real* db = grad_if_needed(g, b)) kernels::gemm_tn(g.value_of(a).data(), dc, db, k, m, n, true);
    });
  }
  if (av.rank() != 3 || bv.rank() != 3 || av.dim(0) != bv.dim(0) || bv.dim(1) != k) shape_error("matmul", av, bv);
  const std::size_t batch = av.dim(0);
  const std::size_t m = av.dim(1);
  const std::size_t n = bv.dim(2);
  Tensor<Real> out(Shape{batch, m, n});
  for (std::size_t i = 0; i < batch; ++i) {
    kernels::gemm_nn(av.data() + i * m * k, bv.data() + i * k * n, out.data() + i * m * n, m, k, n, false);
  }
  return g.record(std::move(out), {a, b},
                  [a = a.id, b = b.id, batch, m, k, n](Graph<Real>& g, std::uint32_t self) {
                    const Real* dc = g.grad_of(self).data();
                    const Real* avd = g.value_of(a).data();
                    const Real* bvd = g.value_of(b).data();
                    Real* da = grad_if_needed(g, a);
                    Real* db = grad_if_needed(g, b);
                    for (std::size_t i = 0; i < batch; ++i) {
                      if (da) kernels::gemm_nt(dc + i * m * n, bvd + i * k * n, da + i * m * k, m, n, k, true);
                      if (db) kernels::gemm_tn(avd + i * m * k, dc + i * m * n, db + i * k * n, k, m, n, true);
                    }
                  });
}

template <typename Real>
Var<Real> matmul_nt(Var<Real> a, Var<Real> b) {
  check_same_graph(a, b, "matmul_nt");
  Graph<Real>& g = *a.graph;
  const Tensor<Real>& av = a.value();
  const Tensor<Real>& bv = b.value();
  if (av.rank() != bv.rank() || (av.rank() != 2 && av.rank() != 3) || av.cols() != bv.cols()) {
    shape_error("matmul_nt", av, bv);
  }
  const bool batched = av.rank() == 3;
  if (batched && av.dim(0) != bv.dim(0)) shape_error("matmul_nt", av, bv);
  const std::size_t batch = batched ? av.dim(0) : 1;
  const std::size_t m = av.dim(av.rank() - 2);
  const std::size_t n = bv.dim(bv.rank() - 2);
  const std::size_t k = av.cols();
  Tensor<Real> out(batched ? Shape{batch, m, n} : Shape{m, n});
  for (std::size_t i = 0; i < batch; ++i) {
    kernels::gemm_nt(av.data() + i * m * k, bv.data() + i * n * k, out.data() + i * m * n, m, k, n, false);
  }
  return g.record(std::move(out), {a, b},
                  [a = a.id, b = b.id, batch, m, k, n](Graph<Real>& g, std::uint32_t self) {
                    const Real* dc = g.grad_of(self).data();
                    const Real* avd = g.value_of(a).data();
                    const Real* bvd = g.value_of(b).data();
                    Real* da = grad_if_needed(g, a);
                    Real* db = grad_if_needed(g, b);
                    for (std::size_t i = 0; i < batch; ++i) {
                      if (da) kernels::gemm_nn(dc + i * m * n, bvd + i * n * k, da + i * m * k, m, n, k, true);
                      if (db) kernels::gemm_tn(dc + i * m * n, avd + i * m * k, db + i * n * k, n, m, k, true);
                    }
                  });
}

template <typename Real>
Var<Real> add(Var<Real> a, Var<Real> b) {
  check_same_graph(a, b, "add");
  const Tensor<Real>& av = a.value();
  const Tensor<Real>& bv = b.value();
  if (av.shape() != bv.shape()) shape_error("add", av, bv);
  Tensor<Real> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return a.graph->record(std::move(out), {a, b}, [a = a.id, b = b.id](Graph<Real>& g, std::uint32_t self) {
    const Tensor<Real>& dc = g.grad_of(self);
    for (auto id : {a, b}) {
      if (Real* d = grad_if_needed(g, id)) {
        for (std::size_t i = 0; i < dc.size(); ++i) d[i] += dc[i];
      }
    }
  });
}

template <typename Real>
Var<Real> mul(Var<Real> a, Var<Real> b) {
  check_same_graph(a, b, "mul");
  const Tensor<Real>& av = a.value();
  const Tensor<Real>& bv = b.value();
  if (av.shape() != bv.shape()) shape_error("mul", av, bv);
  Tensor<Real> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.graph->record(std::move(out), {a, b}, [a = a.id, b = b.id](Graph<Real>& g, std::uint32_t self) {
    const Tensor<Real>& dc = g.grad_of(self);
    if (Real* da = grad_if_needed(g, a)) {
      const Tensor<Real>& bv = g.value_of(b);
      for (std::size_t i = 0; i < dc.size(); ++i) da[i] += dc[i] * bv[i];
    }
    if (Real* db = grad_if_needed(g, b)) {
      const Tensor<Real>& av = g.value_of(a);
      for (std::size_t i = 0; i < dc.size(); ++i) db[i] += dc[i] * av[i];
    }
  });
}

template <typename Real>
Var<Real> add_bias(Var<Real> x, Var<Real> bias) {
  check_same_graph(x, bias, "add_bias");
  const Tensor<Real>& xv = x.value();
  const Tensor<Real>& bv = bias.value();
  if (bv.rank() != 1 || bv.dim(0) != xv.cols()) shape_error("add_bias", xv, bv);
  Tensor<Real> out(xv.shape());
  const std::size_t n = xv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = xv[r * n + j] + bv[j];
  }
  return x.graph->record(std::move(out), {x, bias},
                         [x = x.id, b = bias.id, n](Graph<Real>& g, std::uint32_t self) {
                           const Tensor<Real>& dc = g.grad_of(self);
                           if (Real* dx = grad_if_needed(g, x)) {
                             for (std::size_t i = 0; i < dc.size(); ++i) dx[i] += dc[i];
                           }
                           if (Real* db = grad_if_needed(g, b)) {
                             for (std::size_t i = 0; i < dc.size(); ++i) db[i % n] += dc[i];
                           }
                         });
}

template <typename Real>
Var<Real> scale(Var<Real> x, Real factor) {
  const Tensor<Real>& xv = x.value();
  Tensor<Real> out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * factor;
  return x.graph->record(std::move(out), {x}, [x = x.id, factor](Graph<Real>& g, std::uint32_t self) {
    const Tensor<Real>& dc = g.grad_of(self);
    Real* dx = g.grad_buffer(x).data();
    for (std::size_t i = 0; i < dc.size(); ++i) dx[i] += dc[i] * factor;
  });
}

template <typename Real>
Var<Real> gelu(Var<Real> x) {
  // Exact form x * Phi(x); smooth everywhere, which keeps gradchecks clean.
  const Tensor<Real>& xv = x.value();
  Tensor<Real> out(xv.shape());
  const Real inv_sqrt2 = Real(1) / std::sqrt(Real(2));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = Real(0.5) * xv[i] * (Real(1) + std::erf(xv[i] * inv_sqrt2));
  }
  return x.graph->record(std::move(out), {x}, [x = x.id, inv_sqrt2](Graph<Real>& g, std::uint32_t self) {
    const Tensor<Real>& dc = g.grad_of(self);
    const Tensor<Real>& xv = g.value_of(x);
    Real* dx = g.grad_buffer(x).data();
    const Real inv_sqrt_2pi = Real(1) / std::sqrt(Real(2) * std::numbers::pi_v<Real>);
    for (std::size_t i = 0; i < dc.size(); ++i) {
      const Real v = xv[i];
      const Real cdf = Real(0.5) * (Real(1) + std::erf(v * inv_sqrt2));
      const Real pdf = inv_sqrt_2pi * std::exp(Real(-0.5) * v * v);
      dx[i] += dc[i] * (cdf + v * pdf);
    }
  });
}

template <typename Real>
Var<Real> sum(Var<Real> x) {
  const Tensor<Real>& xv = x.value();
  Real s = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i];
  return x.graph->record(Tensor<Real>::scalar(s), {x}, [x = x.id](Graph<Real>& g, std::uint32_t self) {
    const Real d = g.grad_of(self)[0];
    Tensor<Real>& dx = g.grad_buffer(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += d;
  });
}

template <typename Real>
Var<Real> layer_norm(Var<Real> x, Var<Real> gain, Var<Real> bias) {
  check_same_graph(x, gain, "layer_norm");
  check_same_graph(x, bias, "layer_norm");
  const Tensor<Real>& xv = x.value();
  const Tensor<Real>& gv = gain.value();
  const Tensor<Real>& bv = bias.value();
  const std::size_t d = xv.cols();
  if (d == 0 || gv.rank() != 1 || gv.dim(0) != d) shape_error("layer_norm", xv, gv);
  if (bv.rank() != 1 || bv.dim(0) != d) shape_error("layer_norm", xv, bv);
  const std::size_t rows = xv.rows();
  Tensor<Real> out(xv.shape());
  std::vector<Real> xhat(xv.size());
  std::vector<Real> rstd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* xr = xv.data() + r * d;
    Real mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<Real>(d);
    Real var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<Real>(d);
    const Real rs = Real(1) / std::sqrt(var + static_cast<Real>(kLayerNormEps));
    rstd[r] = rs;
    for (std::size_t j = 0; j < d; ++j) {
      const Real h = (xr[j] - mean) * rs;
      xhat[r * d + j] = h;
      out[r * d + j] = h * gv[j] + bv[j];
    }
  }
  if (!x.graph->recording()) return x.graph->record(std::move(out), {x, gain, bias}, nullptr);
  return x.graph->record(
      std::move(out), {x, gain, bias},
      [x = x.id, gn = gain.id, bs = bias.id, d, rows, xhat = std::move(xhat), rstd = std::move(rstd)](
          Graph<Real>& g, std::uint32_t self) {
        const Tensor<Real>& dy = g.grad_of(self);
        const Tensor<Real>& gv = g.value_of(gn);
        if (Real* dg = grad_if_needed(g, gn)) {
          for (std::size_t i = 0; i < dy.size(); ++i) dg[i % d] += dy[i] * xhat[i];
        }
        if (Real* db = grad_if_needed(g, bs)) {
          for (std::size_t i = 0; i < dy.size(); ++i) db[i % d] += dy[i];
        }
        if (Real* dx = grad_if_needed(g, x)) {
          for (std::size_t r = 0; r < rows; ++r) {
            Real mean_dh = 0;
            Real mean_dh_h = 0;
            for (std::size_t j = 0; j < d; ++j) {
              const Real dh = dy[r * d + j] * gv[j];
              mean_dh += dh;
              mean_dh_h += dh * xhat[r * d + j];
            }
            mean_dh /= static_cast<Real>(d);
            mean_dh_h /= static_cast<Real>(d);
            for (std::size_t j = 0; j < d; ++j) {
              const Real dh = dy[r * d + j] * gv[j];
              dx[r * d + j] += rstd[r] * (dh - mean_dh - xhat[r * d + j] * mean_dh_h);
            }
          }
        }
      });
}

namespace {

template <typename Real>
Var<Real> softmax_impl(Var<Real> x, const Tensor<Real>* mask) {
  const Tensor<Real>& xv = x.value();
  const std::size_t cols = xv.cols();
  const std::size_t rows = xv.rows();
  std::size_t mask_rows = 0;
  if (mask) {
    const Shape& ms = mask->shape();
    const Shape& xs = xv.shape();
    const bool trailing = ms.size() <= xs.size() && std::equal(ms.rbegin(), ms.rend(), xs.rbegin());
    if (!trailing || ms.empty()) shape_error("softmax_masked", xv, *mask);
    mask_rows = mask->rows();
    for (std::size_t i = 0; i < mask->size(); ++i) {
      const Real m = (*mask)[i];
      if (!(m == Real(0) || (std::isinf(m) && m < 0))) {
        throw Error("softmax_masked: mask entries must be 0 or -inf");
      }
    }
  }
  Tensor<Real> out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* xr = xv.data() + r * cols;
    const Real* mr = mask ? mask->data() + (r % mask_rows) * cols : nullptr;
    Real* yr = out.data() + r * cols;
    Real mx = -std::numeric_limits<Real>::infinity();
    for (std::size_t j = 0; j < cols; ++j) {
      const Real z = mr ? xr[j] + mr[j] : xr[j];
      yr[j] = z;
      mx = std::max(mx, z);
    }
    if (mr && std::none_of(mr, mr + cols, [](Real m) { return m == Real(0); })) {
      throw Error("softmax_masked: row " + std::to_string(r) + " has no attendable entry");
    }
    if (!std::isfinite(mx)) {
      // Overflowed scores: let the NaN reach the loss, where it is reported.
      std::fill(yr, yr + cols, std::numeric_limits<Real>::quiet_NaN());
      continue;
    }
    Real total = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      yr[j] = std::exp(yr[j] - mx);
      total += yr[j];
    }
    for (std::size_t j = 0; j < cols; ++j) yr[j] /= total;
  }
  return x.graph->record(std::move(out), {x}, [x = x.id, cols, rows](Graph<Real>& g, std::uint32_t self) {
    const Tensor<Real>& dy = g.grad_of(self);
    const Tensor<Real>& y = g.value_of(self);
    Real* dx = g.grad_buffer(x).data();
    for (std::size_t r = 0; r < rows; ++r) {
      Real dot = 0;
      for (std::size_t j = 0; j < cols; ++j) dot += dy[r * cols + j] * y[r * cols + j];
      for (std::size_t j = 0; j < cols; ++j) dx[r * cols + j] += y[r * cols + j] * (dy[r * cols + j] - dot);
    }
  });
}

}  // namespace

template <typename Real>
Var<Real> softmax_masked(Var<Real> x, const Tensor<Real>& mask) {
  return softmax_impl(x, &mask);
}

template <typename Real>
Var<Real> softmax(Var<Real> x) {
  return softmax_impl<Real>(x, nullptr);
}

template <typename Real>
Var<Real> embedding(Var<Real> table, std::span<const TokenId> ids) {
  const Tensor<Real>& tv = table.value();
  if (tv.rank() != 2) throw Error("embedding: table must be rank 2, got " + shape_string(tv.shape()));
  const std::size_t vocab = tv.dim(0);
  const std::size_t d = tv.dim(1);
  Tensor<Real> out(Shape{ids.size(), d});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= vocab) {
      throw Error("embedding: id " + std::to_string(ids[t]) + " outside vocabulary of " + std::to_string(vocab));
    }
    std::copy_n(tv.data() + static_cast<std::size_t>(ids[t]) * d, d, out.data() + t * d);
  }
  std::vector<TokenId> kept;
  if (table.graph->recording()) kept.assign(ids.begin(), ids.end());
  return table.graph->record(std::move(out), {table},
                             [tb = table.id, d, ids = std::move(kept)](Graph<Real>& g, std::uint32_t self) {
                               const Tensor<Real>& dy = g.grad_of(self);
                               Real* dt = g.grad_buffer(tb).data();
                               for (std::size_t t = 0; t < ids.size(); ++t) {
                                 Real* row = dt + static_cast<std::size_t>(ids[t]) * d;
                                 for (std::size_t j = 0; j < d; ++j) row[j] += dy[t * d + j];
                               }
                             });
}

template <typename Real>
Var<Real> concat_cols(Var<Real> a, Var<Real> b) {
  check_same_graph(a, b, "concat_cols");
  const Tensor<Real>& av = a.value();
  const Tensor<Real>& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(0) != bv.dim(0)) shape_error("concat_cols", av, bv);
  const std::size_t rows = av.dim(0);
  const std::size_t da = av.dim(1);
  const std::size_t db = bv.dim(1);
  Tensor<Real> out(Shape{rows, da + db});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.data() + r * da, da, out.data() + r * (da + db));
    std::copy_n(bv.data() + r * db, db, out.data() + r * (da + db) + da);
  }
  return a.graph->record(std::move(out), {a, b},
                         [a = a.id, b = b.id, rows, da, db](Graph<Real>& g, std::uint32_t self) {
                           const Real* dy = g.grad_of(self).data();
                           if (Real* ga = grad_if_needed(g, a)) {
                             for (std::size_t r = 0; r < rows; ++r) {
                               for (std::size_t j = 0; j < da; ++j) ga[r * da + j] += dy[r * (da + db) + j];
                             }
                           }
                           if (Real* gb = grad_if_needed(g, b)) {
                             for (std::size_t r = 0; r < rows; ++r) {
                               for (std::size_t j = 0; j < db; ++j) gb[r * db + j] += dy[r * (da + db) + da + j];
                             }
                           }
                         });
}

template <typename Real>
Var<Real> split_heads(Var<Real> x, std::size_t heads) {
  const Tensor<Real>& xv = x.value();
  if (xv.rank() != 2 || heads == 0 || xv.dim(1) % heads != 0) {
    throw Error("split_heads: cannot split " + shape_string(xv.shape()) + " into " + std::to_string(heads) +
                " heads");
  }
  const std::size_t t_len = xv.dim(0);
  const std::size_t dk = xv.dim(1) / heads;
  Tensor<Real> out(Shape{heads, t_len, dk});
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t h = 0; h < heads; ++h) {
      std::copy_n(xv.data() + t * heads * dk + h * dk, dk, out.data() + (h * t_len + t) * dk);
    }
  }
  return x.graph->record(std::move(out), {x}, [x = x.id, heads, t_len, dk](Graph<Real>& g, std::uint32_t self) {
    const Real* dy = g.grad_of(self).data();
    Real* dx = g.grad_buffer(x).data();
    for (std::size_t t = 0; t < t_len; ++t) {
      for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t j = 0; j < dk; ++j) dx[t * heads * dk + h * dk + j] += dy[(h * t_len + t) * dk + j];
      }
    }
  });
}

template <typename Real>
Var<Real> merge_heads(Var<Real> x) {
  const Tensor<Real>& xv = x.value();
  if (xv.rank() != 3) throw Error("merge_heads: expected rank 3, got " + shape_string(xv.shape()));
  const std::size_t heads = xv.dim(0);
  const std::size_t t_len = xv.dim(1);
  const std::size_t dk = xv.dim(2);
  Tensor<Real> out(Shape{t_len, heads * dk});
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t t = 0; t < t_len; ++t) {
      std::copy_n(xv.data() + (h * t_len + t) * dk, dk, out.data() + t * heads * dk + h * dk);
    }
  }
  return x.graph->record(std::move(out), {x}, [x = x.id, heads, t_len, dk](Graph<Real>& g, std::uint32_t self) {
    const Real* dy = g.grad_of(self).data();
    Real* dx = g.grad_buffer(x).data();
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t j = 0; j < dk; ++j) dx[(h * t_len + t) * dk + j] += dy[t * heads * dk + h * dk + j];
      }
    }
  });
}

template <typename Real>
Var<Real> cross_entropy(Var<Real> logits, std::span<const TokenId> targets, std::span<const double> weights) {
  const Tensor<Real>& lv = logits.value();
  if (lv.rank() != 2) throw Error("cross_entropy: logits must be rank 2, got " + shape_string(lv.shape()));
  const std::size_t t_len = lv.dim(0);
  const std::size_t vocab = lv.dim(1);
  if (targets.size() != t_len || weights.size() != t_len) {
    throw Error("cross_entropy: " + std::to_string(t_len) + " logit rows but " + std::to_string(targets.size()) +
                " targets and " + std::to_string(weights.size()) + " weights");
  }
  double weight_total = 0;
  for (std::size_t t = 0; t < t_len; ++t) {
    if (targets[t] < 0 || static_cast<std::size_t>(targets[t]) >= vocab) {
      throw Error("cross_entropy: target " + std::to_string(targets[t]) + " at position " + std::to_string(t) +
                  " outside vocabulary of " + std::to_string(vocab));
    }
    weight_total += weights[t];
  }
  const Real denom = static_cast<Real>(std::max(1.0, weight_total));
  Real loss = 0;
  std::vector<Real> probs;
  if (logits.graph->recording()) probs.resize(lv.size());
  for (std::size_t t = 0; t < t_len; ++t) {
    if (weights[t] == 0.0) continue;
    const Real* row = lv.data() + t * vocab;
    Real mx = *std::max_element(row, row + vocab);
    Real total = 0;
    for (std::size_t j = 0; j < vocab; ++j) total += std::exp(row[j] - mx);
    const Real log_z = mx + std::log(total);
    loss += static_cast<Real>(weights[t]) * (log_z - row[targets[t]]);
    if (!probs.empty()) {
      for (std::size_t j = 0; j < vocab; ++j) probs[t * vocab + j] = std::exp(row[j] - log_z);
    }
  }
  loss /= denom;
  std::vector<TokenId> tg(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  return logits.graph->record(
      Tensor<Real>::scalar(loss), {logits},
      [lg = logits.id, vocab, denom, probs = std::move(probs), tg = std::move(tg), w = std::move(w)](
          Graph<Real>& g, std::uint32_t self) {
        const Real d = g.grad_of(self)[0];
        Real* dl = g.grad_buffer(lg).data();
        for (std::size_t t = 0; t < tg.size(); ++t) {
          if (w[t] == 0.0) continue;
          const Real coef = d * static_cast<Real>(w[t]) / denom;
          for (std::size_t j = 0; j < vocab; ++j) dl[t * vocab + j] += coef * probs[t * vocab + j];
          dl[t * vocab + static_cast<std::size_t>(tg[t])] -= coef;
        }
      });
}

#define DSLM_INSTANTIATE_OPS(Real)                                                                       \
  template Var<Real> matmul(Var<Real>, Var<Real>);                                                      \
  template Var<Real> matmul_nt(Var<Real>, Var<Real>);                                                   \
  template Var<Real> add(Var<Real>, Var<Real>);                                                         \
  template Var<Real> mul(Var<Real>, Var<Real>);                                                         \
  template Var<Real> add_bias(Var<Real>, Var<Real>);                                                    \
  template Var<Real> scale(Var<Real>, Real);                                                            \
  template Var<Real> gelu(Var<Real>);                                                                   \
  template Var<Real> sum(Var<Real>);                                                                    \
  template Var<Real> layer_norm(Var<Real>, Var<Real>, Var<Real>);                                       \
  template Var<Real> softmax_masked(Var<Real>, const Tensor<Real>&);                                    \
  template Var<Real> softmax(Var<Real>);                                                                \
  template Var<Real> embedding(Var<Real>, std::span<const TokenId>);                                    \
  template Var<Real> concat_cols(Var<Real>, Var<Real>);                                                 \
  template Var<Real> split_heads(Var<Real>, std::size_t);                                               \
  template Var<Real> merge_heads(Var<Real>);                                                            \
  template Var<Real> cross_entropy(Var<Real>, std::span<const TokenId>, std::span<const double>);

DSLM_INSTANTIATE_OPS(float)
DSLM_INSTANTIATE_OPS(double)

}  // namespace dslm::num
