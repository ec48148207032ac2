#include "vcell/ndmath/layers.hpp"

namespace vcell::layers {

void add_linear(ParamSet& params, const std::string& prefix, Index in, Index out, std::mt19937_64& rng, bool bias) {
  params.add(prefix + ".w", glorot_uniform(in, out, rng));
  if (bias) {
    params.add(prefix + ".b", Tensor::Zero(1, out));
  }
}

Var linear(Tape& tape, const ParamSet& params, const std::string& prefix, Var x) {
  Var y = ad::matmul(x, tape.param(params, prefix + ".w"));
  if (params.contains(prefix + ".b")) {
    y = ad::add_row(y, tape.param(params, prefix + ".b"));
  }
  return y;
}

void add_mlp(ParamSet& params, const std::string& prefix, Index in, Index hidden, Index out, std::mt19937_64& rng) {
  add_linear(params, prefix + ".fc1", in, hidden, rng);
  add_linear(params, prefix + ".fc2", hidden, out, rng);
}

Var mlp(Tape& tape, const ParamSet& params, const std::string& prefix, Var x) {
  return linear(tape, params, prefix + ".fc2", ad::silu(linear(tape, params, prefix + ".fc1", x)));
}

void add_rmsnorm(ParamSet& params, const std::string& prefix, Index width) {
  params.add(prefix + ".g", Tensor::Ones(1, width));
}

Var rmsnorm(Tape& tape, const ParamSet& params, const std::string& prefix, Var x, double eps) {
  return ad::rmsnorm_rows(x, tape.param(params, prefix + ".g"), eps);
}

void add_self_attention(ParamSet& params, const std::string& prefix, Index width, std::mt19937_64& rng) {
  add_linear(params, prefix + ".q", width, width, rng, false);
  add_linear(params, prefix + ".k", width, width, rng, false);
  add_linear(params, prefix + ".v", width, width, rng, false);
  add_linear(params, prefix + ".o", width, width, rng, false);
}

Var self_attention(Tape& tape, const ParamSet& params, const std::string& prefix, Var x, AttentionLayout layout) {
  layout.query_group = layout.key_group;
  Var q = linear(tape, params, prefix + ".q", x);
  Var k = linear(tape, params, prefix + ".k", x);
  Var v = linear(tape, params, prefix + ".v", x);
  return linear(tape, params, prefix + ".o", ad::attention(q, k, v, layout));
}

void add_prenorm_block(ParamSet& params, const std::string& prefix, Index width, Index hidden, std::mt19937_64& rng) {
  add_rmsnorm(params, prefix + ".norm1", width);
  add_self_attention(params, prefix + ".attn", width, rng);
  add_rmsnorm(params, prefix + ".norm2", width);
  add_mlp(params, prefix + ".ff", width, hidden, width, rng);
}

Var prenorm_block(Tape& tape, const ParamSet& params, const std::string& prefix, Var x, const AttentionLayout& layout) {
  x = ad::add(x, self_attention(tape, params, prefix + ".attn", rmsnorm(tape, params, prefix + ".norm1", x), layout));
  return ad::add(x, mlp(tape, params, prefix + ".ff", rmsnorm(tape, params, prefix + ".norm2", x)));
}

}  // namespace vcell::layers
