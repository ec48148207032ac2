#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "vcell/ndmath/tensor.hpp"

namespace vcell {

/// Named weights. Shapes are fixed once a name is added; frozen entries
/// (normalization buffers) are stored alongside but never optimized.
class ParamSet {
 public:
  void add(const std::string& name, Tensor value, bool trainable = true);

  const Tensor& at(const std::string& name) const;
  /// Writable view with the registered shape.
  Eigen::Map<Tensor> values(const std::string& name);
  /// Replaces the values of an existing entry; the shape must match.
  void set(const std::string& name, const Tensor& value);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  bool trainable(const std::string& name) const;
  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }
  Index coefficient_count() const;
  bool all_finite() const;

  friend bool operator==(const ParamSet& a, const ParamSet& b);

 private:
  struct Entry {
    Tensor value;
    bool trainable = true;
  };
  std::map<std::string, Entry> entries_;
};

/// uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Index fan_in, Index fan_out, std::mt19937_64& rng);

}  // namespace vcell
