#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "vcell/ndmath/adam.hpp"
#include "vcell/ndmath/grad_check.hpp"
#include "vcell/ndmath/layers.hpp"
#include "vcell/ndmath/ops.hpp"
#include "vcell/transport/backbone.hpp"
#include "vcell/transport/conditions.hpp"
#include "vcell/transport/jit.hpp"
#include "vcell/transport/model.hpp"

using namespace vcell;
using namespace vcell::transport;

namespace {

Tensor random_tensor(Index r, Index c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(r, c);
  for (Index i = 0; i < t.size(); ++i) t(i) = d(rng);
  return t;
}

std::vector<Index> random_perm(Index n, std::mt19937_64& rng) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

double max_abs(const Tensor& a, const Tensor& b) { return (a - b).cwiseAbs().maxCoeff(); }

ModelConfig toy_config(PoolingMode pooling = PoolingMode::Seed, JitVariant variant = JitVariant::XPredXLoss) {
  ModelConfig cfg;
  cfg.encoder.genes = 8;
  cfg.encoder.tokens = 2;
  cfg.encoder.cell_width = 8;
  cfg.encoder.phi_width = 8;
  cfg.encoder.summary_width = 8;
  cfg.encoder.latent_width = 8;
  cfg.encoder.encoder_blocks = 2;
  cfg.encoder.hidden = 12;
  cfg.transport.vocab = {3, 4, 2};
  cfg.transport.condition_width = 4;
  cfg.transport.blocks = 2;
  cfg.transport.hidden = 12;
  cfg.transport.time_frequencies = 4;
  cfg.transport.pooling = pooling;
  cfg.transport.variant = variant;
  return cfg;
}

ConditionBatch conds(std::vector<Index> c, std::vector<Index> p, std::vector<Index> b) {
  return ConditionBatch{std::move(c), std::move(p), std::move(b)};
}

CellSetBatch random_cells(Index b, Index n, Index g, std::mt19937_64& rng) {
  return CellSetBatch(b, n, random_tensor(b * n, g, rng, 0.0, 2.0));
}

}  // namespace

TEST(EmbedConditions, RowSelection) {
  Model m = init_model(toy_config(), 1);
  Tape t;
  Tensor c = embed_conditions(t, m.params, m.config.transport.vocab, conds({2, 2}, {1, 1}, {0, 0})).value();
  EXPECT_EQ(c.rows(), 6);
  EXPECT_EQ(c.row(0), m.params.at("cond.W_c").row(2));
  EXPECT_EQ(c.row(1), m.params.at("cond.W_p").row(1));
  EXPECT_EQ(c.row(2), m.params.at("cond.W_b").row(0));
  EXPECT_EQ(c.middleRows(0, 3), c.middleRows(3, 3));
}

TEST(EmbedConditions, HandFilledTable) {
  ModelConfig cfg = toy_config();
  cfg.transport.vocab = {3, 1, 1};
  cfg.transport.condition_width = 2;
  Model m = init_model(cfg, 2);
  Tensor w(3, 2);
  w << 1, 2, 3, 4, 5, 6;
  m.params.set("cond.W_c", w);
  Tape t;
  Tensor c = embed_conditions(t, m.params, cfg.transport.vocab, conds({1, 0, 2}, {0, 0, 0}, {0, 0, 0})).value();
  EXPECT_EQ(c(0, 0), 3);
  EXPECT_EQ(c(0, 1), 4);
  EXPECT_EQ(c(3, 0), 1);
  EXPECT_EQ(c(6, 1), 6);
}

TEST(EmbedConditions, OutOfRange) {
  Model m = init_model(toy_config(), 3);
  Tape t;
  EXPECT_THROW(embed_conditions(t, m.params, m.config.transport.vocab, conds({3}, {0}, {0})), LookupError);
  EXPECT_THROW(embed_conditions(t, m.params, m.config.transport.vocab, conds({0}, {-1}, {0})), LookupError);
  EXPECT_THROW(embed_conditions(t, m.params, m.config.transport.vocab, conds({0}, {0}, {2})), LookupError);
}

TEST(SeedAggregate, IdenticalTokensGiveProjectedValue) {
  Model m = init_model(toy_config(), 4);
  std::mt19937_64 rng(4);
  Tensor tok = random_tensor(1, 8, rng);
  Tape t;
  Tensor out = pool_conditions(t, m.params, PoolingMode::Seed, t.constant(tok.replicate(3, 1))).value();
  EXPECT_LE(max_abs(out, tok * m.params.at("cond.v.w")), 1e-14);
}

TEST(SeedAggregate, WeightsOnSimplexAndMatchTape) {
  std::mt19937_64 rng(5);
  for (PoolingMode mode : {PoolingMode::Seed, PoolingMode::Token, PoolingMode::Mean}) {
    Model m = init_model(toy_config(mode), 5);
    for (int trial = 0; trial < 20; ++trial) {
      Tensor proj = random_tensor(12, 8, rng, -3, 3);
      Tensor alpha = pooling_weights(m.params, mode, proj);
      for (Index b = 0; b < 4; ++b) {
        EXPECT_NEAR(alpha.row(b).sum(), 1.0, 1e-12);
        EXPECT_GT(alpha.row(b).minCoeff(), 0.0);
      }
      Tape t;
      Tensor out = pool_conditions(t, m.params, mode, t.constant(proj)).value();
      Tensor values = proj * m.params.at("cond.v.w");
      for (Index b = 0; b < 4; ++b) {
        EXPECT_LE(max_abs(out.row(b), alpha.row(b) * values.middleRows(b * 3, 3)), 1e-12);
      }
    }
  }
}

TEST(SeedAggregate, OneDimensionalHandCase) {
  ModelConfig cfg = toy_config();
  cfg.encoder.latent_width = 1;
  cfg.encoder.cell_width = 1;
  Model m = init_model(cfg, 6);
  auto set1 = [&](const char* name, double v) { m.params.set(name, Tensor::Constant(1, 1, v)); };
  set1("cond.seed", 0.5);
  set1("cond.q.w", 2.0);
  set1("cond.k.w", 1.5);
  set1("cond.v.w", -1.0);
  Tensor proj(3, 1);
  proj << 1.0, -2.0, 0.5;
  // scores = (0.5*2) * (1.5*x_i) / sqrt(1)
  const double s[3] = {1.5, -3.0, 0.75};
  const double z = std::exp(s[0]) + std::exp(s[1]) + std::exp(s[2]);
  const double expect = -(std::exp(s[0]) * 1.0 + std::exp(s[1]) * -2.0 + std::exp(s[2]) * 0.5) / z;
  Tape t;
  EXPECT_NEAR(pool_conditions(t, m.params, PoolingMode::Seed, t.constant(proj)).value()(0, 0), expect, 1e-12);
}

TEST(InjectBlock, MaskedConditionIsPlainSelfAttention) {
  Model m = init_model(toy_config(), 7);
  std::mt19937_64 rng(7);
  Tensor cells = random_tensor(10, 8, rng), cond = random_tensor(2, 8, rng), tcell = random_tensor(10, 8, rng);
  Tape t;
  Tensor got = inject_block(t, m.params, "bb.block0", t.constant(cells), t.constant(cond), t.constant(tcell), 5, 1,
                            true)
                   .value();
  Var x = t.constant(cells + tcell);
  Var n = layers::rmsnorm(t, m.params, "bb.block0.norm", x);
  AttentionLayout plain;
  plain.key_group = 5;
  Tensor expect =
      ad::add(ad::add(x, layers::self_attention(t, m.params, "bb.block0.attn", n, plain)),
              layers::mlp(t, m.params, "bb.block0.ff", n))
          .value();
  EXPECT_LE(max_abs(got, expect), 1e-12);
}

TEST(InjectBlock, EquivariantAndSingleCell) {
  Model m = init_model(toy_config(), 8);
  std::mt19937_64 rng(8);
  Tensor cells = random_tensor(12, 8, rng), cond = random_tensor(2, 8, rng), tvec = random_tensor(2, 8, rng);
  Tensor tcell(12, 8);
  for (Index r = 0; r < 12; ++r) tcell.row(r) = tvec.row(r / 6);
  Tape t;
  LatentBatch out(2, 6,
                  inject_block(t, m.params, "bb.block0", t.constant(cells), t.constant(cond), t.constant(tcell), 6, 1)
                      .value());
  auto perm = random_perm(6, rng);
  Tensor pc = permute_items(LatentBatch(2, 6, cells), perm).values;
  Tensor pout =
      inject_block(t, m.params, "bb.block0", t.constant(pc), t.constant(cond), t.constant(tcell), 6, 1).value();
  EXPECT_LE(max_abs(pout, permute_items(out, perm).values), 1e-9);

  Tensor single =
      inject_block(t, m.params, "bb.block0", t.constant(cells.topRows(1)), t.constant(cond.topRows(1)),
                   t.constant(tcell.topRows(1)), 1, 1)
          .value();
  EXPECT_EQ(single.rows(), 1);
  EXPECT_TRUE(single.allFinite());
}

TEST(Interpolate, Endpoints) {
  std::mt19937_64 rng(9);
  Tensor z0 = random_tensor(4, 3, rng), z1 = random_tensor(4, 3, rng);
  EXPECT_TRUE(interpolate(z0, z1, 0.0) == z0);
  EXPECT_TRUE(interpolate(z0, z1, 1.0) == z1);
  EXPECT_LE(max_abs(interpolate(z0, z1, 0.5), (z0 + z1) / 2), 1e-15);
  EXPECT_THROW(interpolate(z0, z1, 1.5), ArgumentError);
  EXPECT_THROW(interpolate(z0, z1, -0.1), ArgumentError);
  Tape t;
  Tensor per_set = interpolate(t, t.constant(z0), t.constant(z1), {0.0, 1.0}, 2).value();
  EXPECT_TRUE(per_set.topRows(2) == z0.topRows(2));
  EXPECT_TRUE(per_set.bottomRows(2) == z1.bottomRows(2));
}

TEST(SampleStart, PriorModes) {
  std::mt19937_64 rng(10);
  Tensor z0 = random_tensor(8, 4, rng);
  EXPECT_TRUE(sample_start(z0, PriorMode{PriorMode::Kind::ControlAnchored}, rng) == z0);
  EXPECT_TRUE(sample_start(z0, PriorMode{PriorMode::Kind::MaskedControl, 0.5, 0.0}, rng) == z0);

  Tensor big = Tensor::Constant(1000, 100, 7.0);
  Tensor g = sample_start(big, PriorMode{PriorMode::Kind::GaussianMix, 0.0, 0.0}, rng);
  const double n = static_cast<double>(g.size());
  const double mean = g.mean();
  const double var = (g.array() - mean).square().sum() / (n - 1);
  EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(n));
  EXPECT_LT(std::abs(var - 1.0), 0.05);

  Tensor mix = sample_start(big, PriorMode{PriorMode::Kind::GaussianMix, 0.5, 0.0}, rng);
  EXPECT_NEAR(mix.mean(), 3.5, 3.0 / std::sqrt(n));

  Tensor masked = sample_start(big, PriorMode{PriorMode::Kind::MaskedControl, 0.0, 0.15}, rng);
  const double dropped = static_cast<double>((masked.array() == 0.0).count()) / n;
  EXPECT_NEAR(dropped, 0.15, 0.01);
  EXPECT_THROW(sample_start(z0, PriorMode{PriorMode::Kind::MaskedControl, 0.0, 1.5}, rng), ConfigError);
}

TEST(Backbone, ShapeEquivarianceDeterminism) {
  Model m = init_model(toy_config(), 11);
  std::mt19937_64 rng(11);
  Tensor z = random_tensor(10, 8, rng);
  auto run = [&](const Tensor& zin) {
    Tape t;
    Var c = condition_token(t, m.params, m.config.transport, conds({0, 2}, {3, 1}, {1, 0}));
    return backbone(t, m.params, m.config.transport, t.constant(zin), 5, {0.3, 0.8}, c).value();
  };
  Tensor h = run(z);
  EXPECT_EQ(h.rows(), 10);
  EXPECT_EQ(h.cols(), 8);
  EXPECT_TRUE(h == run(z));
  auto perm = random_perm(5, rng);
  EXPECT_LE(max_abs(run(permute_items(LatentBatch(2, 5, z), perm).values),
                    permute_items(LatentBatch(2, 5, h), perm).values),
            1e-9);
}

TEST(JitPredict, StubsAndRoundTrip) {
  std::mt19937_64 rng(12);
  Tape t;
  Var zs = t.constant(random_tensor(4, 3, rng));
  auto x = jit_assemble(JitVariant::XPredXLoss, zs, zs);
  EXPECT_EQ(x.displacement.value(), Tensor::Zero(4, 3));
  auto v = jit_assemble(JitVariant::VPredVLoss, t.constant(Tensor::Zero(4, 3)), zs);
  EXPECT_TRUE(v.endpoint.value() == zs.value());

  // Dyadic values make the subtraction and re-addition exact.
  Tensor a(2, 2), b(2, 2);
  a << 0.5, 1.25, -3.0, 8.0;
  b << 0.25, -2.5, 1.0, 4.0;
  auto rt = jit_assemble(JitVariant::XPredVLoss, t.constant(a), t.constant(b));
  EXPECT_TRUE((rt.displacement.value() + b) == a);
}

TEST(JitLoss, ZeroAtTargetsAndSpacesAgree) {
  std::mt19937_64 rng(13);
  Tape t;
  Var zs = t.constant(random_tensor(6, 4, rng)), z1 = t.constant(random_tensor(6, 4, rng));
  auto exact_x = jit_assemble(JitVariant::XPredXLoss, z1, zs);
  EXPECT_EQ(jit_loss(exact_x, zs, z1, true).value()(0, 0), 0.0);
  auto exact_v = jit_assemble(JitVariant::VPredVLoss, ad::sub(z1, zs), zs);
  EXPECT_EQ(jit_loss(exact_v, zs, z1, false).value()(0, 0), 0.0);
  for (JitVariant var : {JitVariant::XPredXLoss, JitVariant::XPredVLoss, JitVariant::VPredXLoss,
                         JitVariant::VPredVLoss}) {
    for (int trial = 0; trial < 20; ++trial) {
      auto pred = jit_assemble(var, t.constant(random_tensor(6, 4, rng, -3, 3)), zs);
      EXPECT_NEAR(jit_loss(pred, zs, z1, true).value()(0, 0), jit_loss(pred, zs, z1, false).value()(0, 0), 1e-10);
    }
  }
}

TEST(JitLoss, ShortcutAtTimeOne) {
  std::mt19937_64 rng(14);
  Tape t;
  Var z0 = t.constant(random_tensor(6, 4, rng)), z1 = t.constant(random_tensor(6, 4, rng));
  Var zs = sample_start(t, z0, PriorMode{}, rng);
  Var zt = interpolate(t, zs, z1, {1.0, 1.0}, 3);
  // A backbone that returns its input already hits the target at t = 1.
  auto pred = jit_assemble(JitVariant::XPredXLoss, zt, zs);
  EXPECT_EQ(jit_loss(pred, zs, z1, true).value()(0, 0), 0.0);
}

TEST(JointLoss, GradientAllVariants) {
  std::mt19937_64 data(15);
  TrainBatch batch{random_cells(1, 2, 8, data), random_cells(1, 2, 8, data), conds({1}, {2}, {0})};
  for (JitVariant var : {JitVariant::XPredXLoss, JitVariant::VPredVLoss}) {
    Model m = init_model(toy_config(PoolingMode::Seed, var), 16);
    m.config.transport.prior = PriorMode{PriorMode::Kind::GaussianMix, 0.5, 0.0};
    LossFn f = [&](Tape& t, const ParamSet& ps) {
      Model view{m.config, ps};
      std::mt19937_64 rng(99);
      return joint_loss(t, view, batch, rng, {}).total;
    };
    auto r = grad_check(f, m.params, {1e-5, 6, 2});
    EXPECT_LT(r.max_rel_error, 1e-4) << to_string(var) << " " << r.worst_param;
  }
}

TEST(Generate, ShapeReproducibleAndRejectsNaN) {
  Model m = init_model(toy_config(), 17);
  m.config.transport.prior = PriorMode{PriorMode::Kind::GaussianMix, 0.5, 0.0};
  std::mt19937_64 rng(17);
  CellSetBatch x0 = random_cells(2, 5, 8, rng);
  auto c = conds({0, 1}, {2, 3}, {0, 1});
  CellSetBatch a = generate(m, x0, c, {3});
  EXPECT_EQ(a.values.rows(), 10);
  EXPECT_EQ(a.width(), 8);
  EXPECT_TRUE(a.values == generate(m, x0, c, {3}).values);
  EXPECT_THROW(generate(m, x0, conds({0, 1}, {2, 9}, {0, 1})), LookupError);
  m.params.values("head.x.w")(0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(generate(m, x0, c), NumericError);
}

TEST(Generate, DisplacementVariantTakesEulerSteps) {
  Model m = init_model(toy_config(PoolingMode::Seed, JitVariant::VPredVLoss), 18);
  std::mt19937_64 rng(18);
  CellSetBatch x0 = random_cells(1, 4, 8, rng);
  auto c = conds({0}, {1}, {1});
  LatentBatch one = predict_latent(m, x0, c, {0, 1});
  LatentBatch four = predict_latent(m, x0, c, {0, 4});
  EXPECT_TRUE(one.values.allFinite());
  EXPECT_GT(max_abs(one.values, four.values), 0.0);
  // A zero displacement head leaves the start state in place.
  m.params.set("head.v.w", Tensor::Zero(8, 8));
  m.params.set("head.v.b", Tensor::Zero(1, 8));
  EXPECT_TRUE(predict_latent(m, x0, c, {0, 3}).values == setenc::encode(m.params, m.config.encoder, x0).values);
}

TEST(Generate, IdentityTaskRecoversInput) {
  ModelConfig cfg = toy_config();
  cfg.encoder.lambda_mmd = 0.0;
  cfg.encoder.hidden = 32;
  cfg.transport.hidden = 32;
  Model m = init_model(cfg, 19);
  std::mt19937_64 rng(19);
  CellSetBatch x = CellSetBatch(2, 4, random_tensor(8, 8, rng, 0.0, 1.0));
  auto c = conds({0, 1}, {0, 1}, {0, 0});
  TrainBatch batch{x, x, c};
  Adam opt(AdamConfig{3e-3});
  for (int step = 0; step < 6000; ++step) {
    Tape t;
    auto loss = joint_loss(t, m, batch, rng, {});
    t.backward(loss.total);
    opt.step(m.params, t.leaf_grads());
  }
  CellSetBatch out = generate(m, x, c);
  const double mean_err = (out.values - x.values).cwiseAbs().mean();
  EXPECT_LT(mean_err, 0.05);
}
