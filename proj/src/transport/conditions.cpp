#include "vcell/transport/conditions.hpp"

#include <cmath>

#include "vcell/ndmath/layers.hpp"
#include "vcell/ndmath/ops.hpp"

namespace vcell::transport {

void init_conditions(ParamSet& params, const TransportConfig& cfg, Index latent_width, std::mt19937_64& rng) {
  params.add("cond.W_c", glorot_uniform(cfg.vocab.cell_types, cfg.condition_width, rng));
  params.add("cond.W_p", glorot_uniform(cfg.vocab.perturbations, cfg.condition_width, rng));
  params.add("cond.W_b", glorot_uniform(cfg.vocab.batches, cfg.condition_width, rng));
  layers::add_linear(params, "cond.proj", cfg.condition_width, latent_width, rng, false);
  layers::add_linear(params, "cond.v", latent_width, latent_width, rng, false);
  switch (cfg.pooling) {
    case PoolingMode::Seed:
      params.add("cond.seed", glorot_uniform(1, latent_width, rng));
      layers::add_linear(params, "cond.q", latent_width, latent_width, rng, false);
      layers::add_linear(params, "cond.k", latent_width, latent_width, rng, false);
      break;
    case PoolingMode::Token:
      layers::add_linear(params, "cond.score_hidden", latent_width, latent_width, rng);
      layers::add_linear(params, "cond.score", latent_width, 1, rng, false);
      break;
    case PoolingMode::Mean:
      break;
  }
}

Var embed_conditions(Tape& tape, const ParamSet& params, const ConditionVocab& vocab, const ConditionBatch& ids) {
  ids.validate(vocab);
  const Index b = ids.size();
  // One-hot times W is row selection; stack the three tables and gather.
  Var table = ad::vstack(ad::vstack(tape.param(params, "cond.W_c"), tape.param(params, "cond.W_p")),
                         tape.param(params, "cond.W_b"));
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(3 * b));
  for (Index i = 0; i < b; ++i) {
    const auto k = static_cast<std::size_t>(i);
    rows.push_back(ids.cell_type[k]);
    rows.push_back(vocab.cell_types + ids.perturbation[k]);
    rows.push_back(vocab.cell_types + vocab.perturbations + ids.batch[k]);
  }
  return ad::gather_rows(table, std::move(rows));
}

Var project_conditions(Tape& tape, const ParamSet& params, Var tokens) {
  return layers::linear(tape, params, "cond.proj", tokens);
}

Var pool_conditions(Tape& tape, const ParamSet& params, PoolingMode mode, Var projected) {
  Var values = layers::linear(tape, params, "cond.v", projected);
  switch (mode) {
    case PoolingMode::Mean:
      return ad::group_mean(values, 3);
    case PoolingMode::Token: {
      Var scores = layers::linear(tape, params, "cond.score",
                                  ad::tanh(layers::linear(tape, params, "cond.score_hidden", projected)));
      return ad::softmax_pool(scores, values, 3);
    }
    case PoolingMode::Seed: {
      const Index sets = projected.rows() / 3;
      Var query = layers::linear(tape, params, "cond.q", tape.param(params, "cond.seed"));
      Var keys = layers::linear(tape, params, "cond.k", projected);
      AttentionLayout layout;
      layout.query_group = 1;
      layout.key_group = 3;
      return ad::attention(ad::gather_rows(query, std::vector<Index>(static_cast<std::size_t>(sets), 0)), keys, values,
                           layout);
    }
  }
  throw ConfigError("unknown pooling mode");
}

Tensor pooling_weights(const ParamSet& params, PoolingMode mode, const Tensor& projected) {
  const Index sets = projected.rows() / 3;
  Tensor alpha(sets, 3);
  switch (mode) {
    case PoolingMode::Mean:
      alpha.setConstant(1.0 / 3.0);
      return alpha;
    case PoolingMode::Token: {
      Tensor hidden =
          ((projected * params.at("cond.score_hidden.w")).rowwise() + params.at("cond.score_hidden.b").row(0))
              .array()
              .tanh()
              .matrix();
      Tensor scores = hidden * params.at("cond.score.w");
      for (Index b = 0; b < sets; ++b) alpha.row(b) = softmax(scores.middleRows(b * 3, 3).transpose());
      return alpha;
    }
    case PoolingMode::Seed: {
      const Tensor q = params.at("cond.seed") * params.at("cond.q.w");
      const Tensor k = projected * params.at("cond.k.w");
      const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
      for (Index b = 0; b < sets; ++b) {
        alpha.row(b) = softmax((q * k.middleRows(b * 3, 3).transpose()) * scale);
      }
      return alpha;
    }
  }
  throw ConfigError("unknown pooling mode");
}

Var condition_token(Tape& tape, const ParamSet& params, const TransportConfig& cfg, const ConditionBatch& ids) {
  return pool_conditions(tape, params, cfg.pooling,
                         project_conditions(tape, params, embed_conditions(tape, params, cfg.vocab, ids)));
}

}  // namespace vcell::transport
