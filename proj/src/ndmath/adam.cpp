#include "vcell/ndmath/adam.hpp"

#include <cmath>

namespace vcell {

void Adam::step(ParamSet& params, const std::map<std::string, Tensor>& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& [name, g] : grads) {
    if (!params.trainable(name)) continue;
    auto [mit, fresh] = m_.try_emplace(name, Tensor::Zero(g.rows(), g.cols()));
    auto vit = v_.try_emplace(name, Tensor::Zero(g.rows(), g.cols())).first;
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseAbs2();
    auto w = params.values(name);
    w.array() -= cfg_.step_size * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.eps);
  }
}

}  // namespace vcell
