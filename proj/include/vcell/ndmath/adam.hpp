#pragma once

#include <map>
#include <string>

#include "vcell/ndmath/params.hpp"

namespace vcell {

struct AdamConfig {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// One bias-corrected update of every parameter that has a gradient.
  void step(ParamSet& params, const std::map<std::string, Tensor>& grads);

  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
};

}  // namespace vcell
