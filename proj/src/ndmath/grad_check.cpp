#include "vcell/ndmath/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace vcell {

double evaluate_loss(const LossFn& loss, const ParamSet& params) {
  Tape tape;
  Var out = loss(tape, params);
  if (out.rows() != 1 || out.cols() != 1) {
    throw DimensionError("grad_check: loss must be 1x1");
  }
  const double v = out.value()(0, 0);
  if (!std::isfinite(v)) {
    throw NumericError("grad_check: non-finite loss");
  }
  return v;
}

GradCheckResult grad_check(const LossFn& loss, const ParamSet& params, const GradCheckOptions& opts) {
  if (!(opts.step >= 1e-6 && opts.step <= 1e-4)) {
    throw ArgumentError("grad_check: step must lie in [1e-6, 1e-4]");
  }
  std::map<std::string, Tensor> analytic;
  {
    Tape tape;
    Var out = loss(tape, params);
    if (!std::isfinite(out.value()(0, 0))) {
      throw NumericError("grad_check: non-finite loss");
    }
    tape.backward(out);
    analytic = tape.leaf_grads();
  }

  std::mt19937_64 rng(opts.seed);
  ParamSet probe = params;
  GradCheckResult result;
  for (const std::string& name : params.names()) {
    if (!params.trainable(name)) continue;
    const Tensor& base = params.at(name);
    Tensor grad = Tensor::Zero(base.rows(), base.cols());
    if (auto it = analytic.find(name); it != analytic.end()) grad = it->second;

    std::vector<Index> coords(static_cast<std::size_t>(base.size()));
    std::iota(coords.begin(), coords.end(), Index{0});
    if (base.size() > opts.samples_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<std::size_t>(opts.samples_per_tensor));
    }
    for (Index c : coords) {
      auto view = probe.values(name);
      const double orig = view(c);
      view(c) = orig + opts.step;
      const double up = evaluate_loss(loss, probe);
      probe.values(name)(c) = orig - opts.step;
      const double down = evaluate_loss(loss, probe);
      probe.values(name)(c) = orig;

      const double numeric = (up - down) / (2.0 * opts.step);
      const double a = grad(c);
      const double rel = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      ++result.checked;
      if (rel > result.max_rel_error || result.worst_index < 0) {
        result.max_rel_error = std::max(result.max_rel_error, rel);
        result.worst_param = name;
        result.worst_index = c;
      }
    }
  }
  return result;
}

}  // namespace vcell
