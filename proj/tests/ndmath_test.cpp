#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vcell/ndmath/adam.hpp"
#include "vcell/ndmath/grad_check.hpp"
#include "vcell/ndmath/layers.hpp"
#include "vcell/ndmath/ops.hpp"
#include "vcell/ndmath/tape.hpp"

using namespace vcell;

namespace {

Tensor random_tensor(Index r, Index c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(r, c);
  for (Index i = 0; i < t.size(); ++i) t(i) = d(rng);
  return t;
}

Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor out = Tensor::Zero(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.cols(); ++j)
      for (Index k = 0; k < a.cols(); ++k) out(i, j) += a(i, k) * b(k, j);
  return out;
}

// Sum of op(x) weighted by a fixed random matrix, so every output entry gets a distinct seed.
Var weighted(Tape& t, Var y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ad::sum(ad::hadamard(y, t.constant(random_tensor(y.rows(), y.cols(), rng))));
}

}  // namespace

TEST(Matmul, IdentityAndScalar) {
  std::mt19937_64 rng(1);
  Tensor b = random_tensor(3, 2, rng);
  EXPECT_EQ(matmul(Tensor::Identity(3, 3), b), b);
  Tensor a(1, 1), c(1, 1);
  a << 2;
  c << 3;
  EXPECT_EQ(matmul(a, c)(0, 0), 6.0);
}

TEST(Matmul, MatchesTripleLoop) {
  std::mt19937_64 rng(2);
  Tensor a = random_tensor(5, 4, rng), b = random_tensor(4, 3, rng);
  EXPECT_LE((matmul(a, b) - naive_matmul(a, b)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Matmul, IdentityExactOnPowersOfTwo) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> e(-8, 8);
  Tensor b(6, 4);
  for (Index i = 0; i < b.size(); ++i) b(i) = std::ldexp(1.0, e(rng));
  EXPECT_TRUE(matmul(Tensor::Identity(6, 6), b) == b);
}

TEST(Matmul, ShapeMismatch) {
  EXPECT_THROW(matmul(Tensor::Zero(2, 3), Tensor::Zero(2, 3)), DimensionError);
}

TEST(Softmax, UniformAndClosedForm) {
  RowVector<double> z = RowVector<double>::Zero(3);
  auto s = softmax(z);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(s(i), 1.0 / 3.0, 1e-15);
  RowVector<double> v(2);
  v << std::log(1.0), std::log(3.0);
  auto p = softmax(v);
  EXPECT_NEAR(p(0), 0.25, 1e-15);
  EXPECT_NEAR(p(1), 0.75, 1e-15);
  EXPECT_THROW(softmax(RowVector<double>(0)), ArgumentError);
}

TEST(Softmax, SimplexAndShiftInvariance) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    RowVector<double> v = random_tensor(1, 1 + trial % 9, rng, -20, 20);
    auto p = softmax(v);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_TRUE((p.array() > 0).all());
    RowVector<double> shifted = (v.array() + 100.0).matrix();
    EXPECT_LE((softmax(shifted) - p).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(RmsNorm, HandValues) {
  RowVector<double> ones = RowVector<double>::Ones(5);
  EXPECT_LE((rmsnorm(ones, ones, 0.0) - ones).cwiseAbs().maxCoeff(), 1e-15);
  RowVector<double> zero = RowVector<double>::Zero(4);
  EXPECT_EQ(rmsnorm(zero, RowVector<double>::Ones(4), 1e-6), zero);
  RowVector<double> x(2);
  x << 3, 4;
  auto y = rmsnorm(x, RowVector<double>::Ones(2), 0.0);
  EXPECT_NEAR(y(0), 3.0 / std::sqrt(12.5), 1e-15);
  EXPECT_NEAR(y(1), 4.0 / std::sqrt(12.5), 1e-15);
  EXPECT_NEAR(y(0), 0.8485, 1e-4);
  EXPECT_NEAR(y(1), 1.1314, 1e-4);
}

TEST(Attention, SingleKeyCopiesValue) {
  std::mt19937_64 rng(5);
  Tensor q = random_tensor(4, 3, rng), k = random_tensor(1, 3, rng), v = random_tensor(1, 3, rng);
  Tensor o = attention(q, k, v);
  for (Index r = 0; r < 4; ++r) EXPECT_LE((o.row(r) - v.row(0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Attention, IdenticalKeysAverageValues) {
  std::mt19937_64 rng(6);
  Tensor q = random_tensor(3, 2, rng), v = random_tensor(5, 2, rng);
  Tensor k = random_tensor(1, 2, rng).replicate(5, 1);
  Tensor o = attention(q, k, v);
  RowVector<double> mean = v.colwise().mean();
  for (Index r = 0; r < 3; ++r) EXPECT_LE((o.row(r) - mean).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Attention, TwoTokenHandCase) {
  Tensor q(1, 1), k(2, 1), v(2, 1);
  q << 1;
  k << 1, 2;
  v << 10, 20;
  // scores 1 and 2, weights e/(e+e^2) and e^2/(e+e^2)
  const double w0 = 1.0 / (1.0 + std::exp(1.0));
  EXPECT_NEAR(attention(q, k, v)(0, 0), 10 * w0 + 20 * (1 - w0), 1e-12);
  EXPECT_THROW(attention(q, Tensor(0, 1), Tensor(0, 1)), ArgumentError);
}

TEST(Attention, OutputsInConvexHullOfValues) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor q = random_tensor(4, 3, rng, -5, 5), k = random_tensor(6, 3, rng, -5, 5), v = random_tensor(6, 3, rng);
    Tensor o = attention(q, k, v);
    for (Index c = 0; c < 3; ++c) {
      EXPECT_GE(o.col(c).minCoeff(), v.col(c).minCoeff() - 1e-12);
      EXPECT_LE(o.col(c).maxCoeff(), v.col(c).maxCoeff() + 1e-12);
    }
  }
}

TEST(Tape, GroupedAttentionMatchesPerGroupKernel) {
  std::mt19937_64 rng(8);
  Tape t;
  Tensor q = random_tensor(6, 4, rng), k = random_tensor(6, 4, rng), v = random_tensor(6, 4, rng);
  AttentionLayout layout{3, 3, 2, false};
  Tensor o = ad::attention(t.constant(q), t.constant(k), t.constant(v), layout).value();
  for (Index g = 0; g < 2; ++g) {
    for (Index h = 0; h < 2; ++h) {
      Tensor ref = attention(q.block(g * 3, h * 2, 3, 2), k.block(g * 3, h * 2, 3, 2), v.block(g * 3, h * 2, 3, 2));
      EXPECT_LE((o.block(g * 3, h * 2, 3, 2) - ref).cwiseAbs().maxCoeff(), 1e-14);
    }
  }
}

TEST(Backward, IdentityAndSquare) {
  Tape t;
  Tensor x0(1, 2);
  x0 << 1, 2;
  Var x = t.leaf("x", x0);
  t.backward(x, Tensor::Ones(1, 2));
  EXPECT_EQ(t.grad(x), Tensor::Ones(1, 2));

  Tape t2;
  Var y = t2.leaf("x", x0);
  Var f = ad::sum(ad::hadamard(y, y));
  t2.backward(f);
  Tensor expect(1, 2);
  expect << 2, 4;
  EXPECT_EQ(t2.grad(y), expect);
}

TEST(Backward, FanOutAccumulatesAndUnreachedIsZero) {
  Tape t;
  Var x = t.leaf("x", Tensor::Constant(2, 2, 3.0));
  Var unused = t.leaf("unused", Tensor::Ones(1, 3));
  Var f = ad::sum(ad::add(ad::scale(x, 2.0), x));
  t.backward(f);
  EXPECT_EQ(t.grad(x), Tensor::Constant(2, 2, 3.0));
  EXPECT_EQ(t.grad(unused), Tensor::Zero(1, 3));
  auto grads = t.leaf_grads();
  EXPECT_EQ(grads.at("unused"), Tensor::Zero(1, 3));
}

TEST(Backward, SeedShapeMismatch) {
  Tape t;
  Var x = t.leaf("x", Tensor::Ones(2, 2));
  EXPECT_THROW(t.backward(x, Tensor::Ones(1, 2)), DimensionError);
}

TEST(GradCheck, QuadraticForm) {
  std::mt19937_64 rng(9);
  Tensor a = random_tensor(4, 4, rng);
  Tensor sym = a * a.transpose();
  ParamSet p;
  p.add("x", random_tensor(4, 1, rng));
  LossFn f = [&](Tape& t, const ParamSet& ps) {
    Var x = t.param(ps, "x");
    return ad::sum(ad::hadamard(x, ad::matmul(t.constant(sym), x)));
  };
  EXPECT_LT(grad_check(f, p).max_rel_error, 1e-9);
}

TEST(GradCheck, SoftmaxCrossTerm) {
  std::mt19937_64 rng(10);
  ParamSet p;
  p.add("s", random_tensor(6, 1, rng));
  p.add("v", random_tensor(6, 3, rng));
  LossFn f = [](Tape& t, const ParamSet& ps) {
    Var pooled = ad::softmax_pool(t.param(ps, "s"), t.param(ps, "v"), 3);
    return ad::sum(ad::hadamard(pooled, ad::tanh(pooled)));
  };
  EXPECT_LT(grad_check(f, p).max_rel_error, 1e-6);
}

TEST(GradCheck, NonFiniteLoss) {
  ParamSet p;
  p.add("x", Tensor::Ones(1, 1));
  LossFn f = [](Tape& t, const ParamSet& ps) {
    return ad::scale(t.param(ps, "x"), std::numeric_limits<double>::infinity());
  };
  EXPECT_THROW(grad_check(f, p), NumericError);
}

// Every differentiable primitive against central differences on random inputs.
TEST(GradCheck, EveryPrimitive) {
  std::mt19937_64 rng(11);
  ParamSet p;
  p.add("a", random_tensor(6, 4, rng));
  p.add("b", random_tensor(4, 4, rng));
  p.add("c", random_tensor(6, 4, rng));
  p.add("row", random_tensor(1, 4, rng));
  p.add("s", random_tensor(6, 1, rng));
  using Op = std::function<Var(Tape&, const ParamSet&)>;
  std::vector<std::pair<std::string, Op>> ops = {
      {"matmul", [](Tape& t, const ParamSet& ps) { return ad::matmul(t.param(ps, "a"), t.param(ps, "b")); }},
      {"add", [](Tape& t, const ParamSet& ps) { return ad::add(t.param(ps, "a"), t.param(ps, "c")); }},
      {"sub", [](Tape& t, const ParamSet& ps) { return ad::sub(t.param(ps, "a"), t.param(ps, "c")); }},
      {"hadamard", [](Tape& t, const ParamSet& ps) { return ad::hadamard(t.param(ps, "a"), t.param(ps, "c")); }},
      {"add_row", [](Tape& t, const ParamSet& ps) { return ad::add_row(t.param(ps, "a"), t.param(ps, "row")); }},
      {"silu", [](Tape& t, const ParamSet& ps) { return ad::silu(t.param(ps, "a")); }},
      {"tanh", [](Tape& t, const ParamSet& ps) { return ad::tanh(t.param(ps, "a")); }},
      {"rmsnorm",
       [](Tape& t, const ParamSet& ps) { return ad::rmsnorm_rows(t.param(ps, "a"), t.param(ps, "row"), 1e-6); }},
      {"attention",
       [](Tape& t, const ParamSet& ps) {
         return ad::attention(t.param(ps, "a"), t.param(ps, "c"), ad::tanh(t.param(ps, "c")),
                              AttentionLayout{3, 3, 2, false});
       }},
      {"attention_masked",
       [](Tape& t, const ParamSet& ps) {
         return ad::attention(t.param(ps, "a"), t.param(ps, "c"), t.param(ps, "c"), AttentionLayout{2, 2, 1, true});
       }},
      {"gather", [](Tape& t, const ParamSet& ps) { return ad::gather_rows(t.param(ps, "a"), {0, 3, 3, 5, 1}); }},
      {"vstack", [](Tape& t, const ParamSet& ps) { return ad::vstack(t.param(ps, "a"), t.param(ps, "b")); }},
      {"group_mean", [](Tape& t, const ParamSet& ps) { return ad::group_mean(t.param(ps, "a"), 2); }},
      {"softmax_pool",
       [](Tape& t, const ParamSet& ps) { return ad::softmax_pool(t.param(ps, "s"), t.param(ps, "c"), 3); }},
      {"mean_square", [](Tape& t, const ParamSet& ps) { return ad::mean_square(t.param(ps, "a")); }},
  };
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const auto& [name, op] = ops[i];
    LossFn f = [&, i](Tape& t, const ParamSet& ps) { return weighted(t, op(t, ps), 100 + i); };
    auto r = grad_check(f, p, {1e-5, 64, 0});
    EXPECT_LT(r.max_rel_error, 1e-6) << name << " worst " << r.worst_param << "[" << r.worst_index << "]";
  }
}

TEST(Layers, PrenormBlockGradient) {
  std::mt19937_64 rng(12);
  ParamSet p;
  layers::add_prenorm_block(p, "blk", 4, 8, rng);
  Tensor x = random_tensor(6, 4, rng);
  LossFn f = [&](Tape& t, const ParamSet& ps) {
    return weighted(t, layers::prenorm_block(t, ps, "blk", t.constant(x), AttentionLayout{3, 3, 2, false}), 5);
  };
  EXPECT_LT(grad_check(f, p).max_rel_error, 1e-6);
}

TEST(Params, GlorotBoundsAndDeterminism) {
  std::mt19937_64 a(13), b(13);
  Tensor w = glorot_uniform(10, 6, a);
  EXPECT_LE(w.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 16.0));
  EXPECT_EQ(w, glorot_uniform(10, 6, b));
}

TEST(Params, ShapeFixedAndNamesUnique) {
  ParamSet p;
  p.add("w", Tensor::Zero(2, 2));
  EXPECT_THROW(p.add("w", Tensor::Zero(1, 1)), ArgumentError);
  EXPECT_THROW(p.set("w", Tensor::Zero(3, 2)), DimensionError);
  EXPECT_THROW(p.at("missing"), ArgumentError);
}

TEST(Adam, MinimizesQuadratic) {
  ParamSet p;
  p.add("x", Tensor::Constant(3, 1, 5.0));
  Adam opt(AdamConfig{0.1});
  for (int i = 0; i < 500; ++i) {
    Tape t;
    Var loss = ad::mean_square(ad::sub(t.param(p, "x"), t.constant(Tensor::Ones(3, 1))));
    t.backward(loss);
    opt.step(p, t.leaf_grads());
  }
  EXPECT_LE((p.at("x") - Tensor::Ones(3, 1)).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Adam, SkipsFrozenBuffers) {
  ParamSet p;
  p.add("buf", Tensor::Ones(1, 1), false);
  Adam opt;
  opt.step(p, {{"buf", Tensor::Ones(1, 1)}});
  EXPECT_EQ(p.at("buf")(0, 0), 1.0);
}
