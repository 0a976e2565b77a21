#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "dslm/common/error.hpp"
#include "dslm/common/rng.hpp"
#include "dslm/numcore/gradcheck.hpp"
#include "dslm/numcore/kernels.hpp"
#include "dslm/numcore/ops.hpp"

using namespace dslm;
using namespace dslm::num;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Tensor<double> random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.storage()) v = rng.normal(0.0, scale);
  return t;
}

Tensor<double> naive_matmul(const Tensor<double>& a, const Tensor<double>& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<double> c(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long double acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += static_cast<long double>(a.at(i, p)) * b.at(p, j);
      c.at(i, j) = static_cast<double>(acc);
    }
  }
  return c;
}

// Checks d/dx of sum(op(inputs) * probe) for every input element.
double op_gradcheck(std::vector<Tensor<double>> inputs,
                    const std::function<Var<double>(Graph<double>&, std::vector<Var<double>>&)>& op,
                    std::uint64_t seed = 1) {
  Rng rng(seed);
  Tensor<double> probe;
  std::vector<Tensor<double>> grads(inputs.size());
  auto loss = [&](bool with_grad) {
    Graph<double> g(with_grad);
    std::vector<Var<double>> vars;
    for (auto& in : inputs) {
      in.set_requires_grad(true);
      vars.push_back(g.leaf(in));
    }
    Var<double> out = op(g, vars);
    if (probe.empty()) probe = random_tensor(out.shape(), rng);
    Var<double> l = sum(mul(out, g.constant(probe)));
    if (with_grad) {
      g.backward(l);
      for (std::size_t i = 0; i < inputs.size(); ++i) grads[i] = g.grad(vars[i]);
    }
    return l.value().item();
  };
  loss(false);
  std::vector<GradcheckParam> params;
  for (std::size_t i = 0; i < inputs.size(); ++i) params.push_back({"x" + std::to_string(i), &inputs[i], &grads[i], {}});
  return gradcheck(loss, params).max_rel_error;
}

}  // namespace

TEST(Matmul, IdentityAndDot) {
  Graph<double> g(false);
  auto a = g.constant(Tensor<double>({2, 2}, {1, 0, 0, 1}));
  auto b = g.constant(Tensor<double>({2, 2}, {5, 6, 7, 8}));
  EXPECT_EQ(matmul(a, b).value().storage(), (std::vector<double>{5, 6, 7, 8}));
  auto r = g.constant(Tensor<double>({1, 2}, {1, 2}));
  auto c = g.constant(Tensor<double>({2, 1}, {3, 4}));
  EXPECT_EQ(matmul(r, c).value().item(), 11.0);
}

TEST(Matmul, AgreesWithTripleLoop) {
  Rng rng(3);
  for (std::size_t m = 1; m <= 16; m += 5) {
    for (std::size_t k = 1; k <= 16; k += 3) {
      for (std::size_t n = 1; n <= 16; n += 7) {
        const auto a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
        Graph<double> g(false);
        const auto c = matmul(g.constant(a), g.constant(b)).value();
        EXPECT_LE(max_abs_diff(c, naive_matmul(a, b)), 1e-12);
      }
    }
  }
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  Graph<double> g(false);
  auto a = g.constant(Tensor<double>({2, 3}));
  auto b = g.constant(Tensor<double>({2, 2}));
  try {
    matmul(a, b);
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("2x2"), std::string::npos) << msg;
  }
}

TEST(Kernels, RowOfProductIsBitwiseRowOfLargerProduct) {
  Rng rng(4);
  const auto a = random_tensor({7, 13}, rng), b = random_tensor({13, 5}, rng);
  std::vector<double> full(7 * 5), row(5);
  kernels::gemm_nn(a.data(), b.data(), full.data(), 7, 13, 5, false);
  kernels::gemm_nn(a.data() + 4 * 13, b.data(), row.data(), 1, 13, 5, false);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(row[j], full[4 * 5 + j]);
}

TEST(Kernels, TransposedVariantsMatchOracle) {
  Rng rng(5);
  const auto a = random_tensor({6, 4}, rng), b = random_tensor({3, 4}, rng);
  std::vector<double> c(6 * 3);
  kernels::gemm_nt(a.data(), b.data(), c.data(), 6, 4, 3, false);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double acc = 0;
      for (std::size_t p = 0; p < 4; ++p) acc += a.at(i, p) * b.at(j, p);
      EXPECT_NEAR(c[i * 3 + j], acc, 1e-12);
    }
  }
  const auto at = random_tensor({4, 6}, rng), bt = random_tensor({4, 3}, rng);
  kernels::gemm_tn(at.data(), bt.data(), c.data(), 6, 4, 3, false);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double acc = 0;
      for (std::size_t p = 0; p < 4; ++p) acc += at.at(p, i) * bt.at(p, j);
      EXPECT_NEAR(c[i * 3 + j], acc, 1e-12);
    }
  }
}

TEST(SoftmaxMasked, WorkedExamples) {
  Graph<double> g(false);
  auto s1 = softmax_masked(g.constant(Tensor<double>({1, 3}, {1, 1, 1})), Tensor<double>({1, 3}, {0, 0, 0}));
  for (double v : s1.value().storage()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  auto s2 = softmax_masked(g.constant(Tensor<double>({1, 2}, {5, 0})), Tensor<double>({1, 2}, {0, -kInf}));
  EXPECT_EQ(s2.value()[0], 1.0);
  EXPECT_EQ(s2.value()[1], 0.0);
  auto s3 = softmax_masked(g.constant(Tensor<double>({1, 3}, {2, 1, 0})), Tensor<double>({1, 3}, {0, 0, -kInf}));
  const double e = std::exp(1.0);
  EXPECT_NEAR(s3.value()[0], e / (e + 1), 1e-15);
  EXPECT_NEAR(s3.value()[1], 1 / (e + 1), 1e-15);
  EXPECT_EQ(s3.value()[2], 0.0);
}

TEST(SoftmaxMasked, RowsSumToOneAndMaskedExactlyZero) {
  Rng rng(6);
  const auto x = random_tensor({2, 5, 5}, rng, 10.0);
  Tensor<double> mask({5, 5});
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) mask.at(i, j) = j <= i ? 0.0 : -kInf;
  }
  Graph<double> g(false);
  const auto y = softmax_masked(g.constant(x), mask).value();
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double total = 0;
    for (std::size_t j = 0; j < 5; ++j) {
      total += y.at(r, j);
      if (j > r % 5) {
        EXPECT_EQ(y.at(r, j), 0.0);
      }
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(SoftmaxMasked, FullyMaskedRowRejected) {
  Graph<double> g(false);
  EXPECT_THROW(softmax_masked(g.constant(Tensor<double>({1, 2}, {1, 2})), Tensor<double>({1, 2}, {-kInf, -kInf})),
               Error);
}

TEST(LayerNorm, WorkedExamples) {
  Graph<double> g(false);
  auto ones = g.constant(Tensor<double>({3}, 1.0));
  auto zeros = g.constant(Tensor<double>({3}, 0.0));
  auto c = layer_norm(g.constant(Tensor<double>({1, 3}, {3, 3, 3})), ones, zeros).value();
  for (double v : c.storage()) EXPECT_EQ(v, 0.0);

  auto one2 = g.constant(Tensor<double>({2}, 1.0));
  auto zero2 = g.constant(Tensor<double>({2}, 0.0));
  auto y = layer_norm(g.constant(Tensor<double>({1, 2}, {1, -1})), one2, zero2).value();
  const double expected = 1.0 / std::sqrt(1.0 + 1e-5);
  EXPECT_NEAR(y[0], expected, 1e-15);
  EXPECT_NEAR(y[1], -expected, 1e-15);

  Rng rng(7);
  auto b = Tensor<double>({3}, {0.5, -2, 7});
  auto z = layer_norm(g.constant(random_tensor({4, 3}, rng)), zeros, g.constant(b)).value();
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(z.at(r, j), b[j]);
  }
}

TEST(CrossEntropy, WorkedExamples) {
  Graph<double> g(false);
  const std::vector<TokenId> t0 = {2};
  const std::vector<double> w1 = {1.0};
  Tensor<double> confident({1, 4});
  confident.at(0, 2) = 1e6;
  EXPECT_NEAR(cross_entropy(g.constant(confident), t0, w1).value().item(), 0.0, 1e-12);

  const std::vector<TokenId> t3 = {0, 3, 1};
  const std::vector<double> w3 = {1, 1, 1};
  EXPECT_NEAR(cross_entropy(g.constant(Tensor<double>({3, 4})), t3, w3).value().item(), std::log(4.0), 1e-15);

  Tensor<double> two({2, 3}, {1.0, 2.0, 0.5, -1.0, 4.0, 0.0});
  const std::vector<TokenId> t2 = {1, 0};
  const std::vector<double> w10 = {1, 0};
  const double hand = -(2.0 - std::log(std::exp(1.0) + std::exp(2.0) + std::exp(0.5)));
  EXPECT_NEAR(cross_entropy(g.constant(two), t2, w10).value().item(), hand, 1e-14);
}

TEST(CrossEntropy, AllZeroWeightsGiveZeroWithZeroGradient) {
  Rng rng(8);
  Tensor<double> logits = random_tensor({3, 5}, rng);
  logits.set_requires_grad(true);
  Graph<double> g;
  auto x = g.leaf(logits);
  const std::vector<TokenId> t = {1, 2, 3};
  const std::vector<double> w = {0, 0, 0};
  auto l = cross_entropy(x, t, w);
  EXPECT_EQ(l.value().item(), 0.0);
  g.backward(l);
  const auto dx = g.grad(x);
  for (double v : dx.storage()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, WorkedExamples) {
  {
    Graph<double> g;
    Tensor<double> x0 = Tensor<double>::scalar(3.0);
    x0.set_requires_grad(true);
    auto x = g.leaf(x0);
    auto f = sum(mul(x, x));
    g.backward(f);
    EXPECT_EQ(g.grad(x).item(), 6.0);
  }
  {
    Rng rng(9);
    Tensor<double> x0 = random_tensor({2, 4}, rng);
    x0.set_requires_grad(true);
    Graph<double> g;
    auto x = g.leaf(x0);
    auto unused = g.leaf(x0);
    g.backward(sum(softmax(x)));
    const auto dx = g.grad(x), du = g.grad(unused);
    for (double v : dx.storage()) EXPECT_NEAR(v, 0.0, 1e-15);
    for (double v : du.storage()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Backward, SecondSweepRejected) {
  Graph<double> g;
  Tensor<double> x0 = Tensor<double>::scalar(1.0);
  x0.set_requires_grad(true);
  auto f = sum(mul(g.leaf(x0), g.leaf(x0)));
  g.backward(f);
  EXPECT_THROW(g.backward(f), Error);
}

TEST(Backward, ParameterGradientsAccumulateIntoSink) {
  Tensor<double> w({2}, {1.5, -2.0});
  Tensor<double> sink({2}, {10.0, 10.0});
  Graph<double> g;
  auto p = g.parameter(w, &sink);
  EXPECT_EQ(g.parameter(w, &sink).id, p.id);
  g.backward(sum(mul(p, p)));
  EXPECT_EQ(sink[0], 13.0);
  EXPECT_EQ(sink[1], 6.0);
}

TEST(Gradcheck, QuadraticInThreeParams) {
  Tensor<double> x({3}, {0.3, -1.2, 2.0});
  Tensor<double> grad({3});
  auto loss = [&](bool with_grad) {
    const double a = x[0], b = x[1], c = x[2];
    if (with_grad) {
      grad[0] = 2 * a + b;
      grad[1] = a + 6 * b;
      grad[2] = 2 * c;
    }
    return a * a + a * b + 3 * b * b + c * c;
  };
  std::vector<GradcheckParam> params = {{"x", &x, &grad, {}}};
  EXPECT_LT(gradcheck(loss, params).max_rel_error, 1e-9);
}

TEST(Gradcheck, DetectsWrongGradient) {
  Tensor<double> x({1}, {1.0});
  Tensor<double> grad({1});
  auto loss = [&](bool with_grad) {
    if (with_grad) grad[0] = 3 * x[0];
    return x[0] * x[0];
  };
  std::vector<GradcheckParam> params = {{"x", &x, &grad, {}}};
  EXPECT_GT(gradcheck(loss, params).max_rel_error, 0.1);
}

TEST(Gradcheck, NonFiniteLossRejected) {
  Tensor<double> x({1}, {1.0});
  Tensor<double> grad({1});
  auto loss = [&](bool) { return std::numeric_limits<double>::quiet_NaN(); };
  std::vector<GradcheckParam> params = {{"x", &x, &grad, {}}};
  EXPECT_THROW(gradcheck(loss, params), Error);
}

TEST(OpGradients, EachOpInIsolation) {
  Rng rng(10);
  constexpr double kTol = 1e-6;
  EXPECT_LT(op_gradcheck({random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)},
                         [](auto&, auto& v) { return matmul(v[0], v[1]); }),
            kTol);
  EXPECT_LT(op_gradcheck({random_tensor({2, 3, 4}, rng), random_tensor({2, 4, 2}, rng)},
                         [](auto&, auto& v) { return matmul(v[0], v[1]); }),
            kTol);
  EXPECT_LT(op_gradcheck({random_tensor({2, 3, 4}, rng), random_tensor({2, 5, 4}, rng)},
                         [](auto&, auto& v) { return matmul_nt(v[0], v[1]); }),
            kTol);
  EXPECT_LT(op_gradcheck({random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)},
                         [](auto&, auto& v) { return add(v[0], v[1]); }),
            kTol);
  EXPECT_LT(op_gradcheck({random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)},
                         [](auto&, auto& v) { return mul(v[0], v[1]); }),
            kTol);
  EXPECT_LT(op_gradcheck({random_tensor({3, 4}, rng), random_tensor({4}, rng)},
                         [](auto&, auto& v) { return add_bias(v[0], v[1]); }),
            kTol);
  EXPECT_LT(op_gradcheck({random_tensor({3, 4}, rng)}, [](auto&, auto& v) { return scale(v[0], 0.37); }), kTol);
  EXPECT_LT(op_gradcheck({random_tensor({3, 4}, rng)}, [](auto&, auto& v) { return gelu(v[0]); }), kTol);
  EXPECT_LT(op_gradcheck({random_tensor({3, 6}, rng), random_tensor({6}, rng), random_tensor({6}, rng)},
                         [](auto&, auto& v) { return layer_norm(v[0], v[1], v[2]); }),
            kTol);
  EXPECT_LT(op_gradcheck({random_tensor({3, 5}, rng)}, [](auto&, auto& v) { return softmax(v[0]); }), kTol);
  Tensor<double> mask({4, 4});
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) mask.at(i, j) = -kInf;
  }
  EXPECT_LT(op_gradcheck({random_tensor({2, 4, 4}, rng)},
                         [&](auto&, auto& v) { return softmax_masked(v[0], mask); }),
            kTol);
  const std::vector<TokenId> ids = {3, 0, 3, 1};
  EXPECT_LT(op_gradcheck({random_tensor({5, 3}, rng)}, [&](auto&, auto& v) { return embedding(v[0], ids); }),
            kTol);
  EXPECT_LT(op_gradcheck({random_tensor({3, 2}, rng), random_tensor({3, 4}, rng)},
                         [](auto&, auto& v) { return concat_cols(v[0], v[1]); }),
            kTol);
  EXPECT_LT(op_gradcheck({random_tensor({3, 6}, rng)},
                         [](auto&, auto& v) { return merge_heads(scale(split_heads(v[0], 2), 1.5)); }),
            kTol);
  const std::vector<TokenId> targets = {1, 4, 0};
  const std::vector<double> weights = {1, 0, 1};
  EXPECT_LT(op_gradcheck({random_tensor({3, 5}, rng)},
                         [&](auto& g, auto& v) {
                           auto l = cross_entropy(v[0], targets, weights);
                           return mul(l, g.constant(Tensor<double>::scalar(1.0)));
                         }),
            kTol);
}

TEST(OpGradients, SingleAttentionLayer) {
  Rng rng(11);
  const std::size_t t = 5, d = 8, heads = 2;
  Tensor<double> mask({t, t});
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = i + 1; j < t; ++j) mask.at(i, j) = -kInf;
  }
  const double err = op_gradcheck(
      {random_tensor({t, d}, rng), random_tensor({d, d}, rng, 0.3), random_tensor({d, d}, rng, 0.3),
       random_tensor({d, d}, rng, 0.3), random_tensor({d, d}, rng, 0.3)},
      [&](auto&, auto& v) {
        auto q = split_heads(matmul(v[0], v[1]), heads);
        auto k = split_heads(matmul(v[0], v[2]), heads);
        auto vv = split_heads(matmul(v[0], v[3]), heads);
        auto a = softmax_masked(scale(matmul_nt(q, k), 1.0 / 2.0), mask);
        return matmul(merge_heads(matmul(a, vv)), v[4]);
      });
  EXPECT_LT(err, 1e-6);
}

TEST(Determinism, ForwardIsBitwiseRepeatable) {
  Rng rng(12);
  const auto a = random_tensor({9, 11}, rng), b = random_tensor({11, 7}, rng);
  Graph<double> g1(false), g2(false);
  EXPECT_TRUE(bitwise_equal(gelu(matmul(g1.constant(a), g1.constant(b))).value(),
                            gelu(matmul(g2.constant(a), g2.constant(b))).value()));
}
