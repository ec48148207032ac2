#include "vcell/ndmath/params.hpp"

#include <cmath>

namespace vcell {

void ParamSet::add(const std::string& name, Tensor value, bool trainable) {
  if (entries_.count(name) != 0) {
    throw ArgumentError("ParamSet: duplicate parameter name '" + name + "'");
  }
  entries_.emplace(name, Entry{std::move(value), trainable});
}

const Tensor& ParamSet::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw ArgumentError("ParamSet: unknown parameter '" + name + "'");
  }
  return it->second.value;
}

Eigen::Map<Tensor> ParamSet::values(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw ArgumentError("ParamSet: unknown parameter '" + name + "'");
  }
  Tensor& v = it->second.value;
  return Eigen::Map<Tensor>(v.data(), v.rows(), v.cols());
}

void ParamSet::set(const std::string& name, const Tensor& value) {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw ArgumentError("ParamSet: unknown parameter '" + name + "'");
  }
  require_same_shape(it->second.value, value, ("ParamSet::set " + name).c_str());
  it->second.value = value;
}

bool ParamSet::trainable(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw ArgumentError("ParamSet: unknown parameter '" + name + "'");
  }
  return it->second.trainable;
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, e] : entries_) {
    out.push_back(name);
  }
  return out;
}

Index ParamSet::coefficient_count() const {
  Index n = 0;
  for (const auto& [name, e] : entries_) {
    n += e.value.size();
  }
  return n;
}

bool ParamSet::all_finite() const {
  for (const auto& [name, e] : entries_) {
    if (!e.value.allFinite()) return false;
  }
  return true;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  auto ib = b.entries_.begin();
  for (const auto& [name, e] : a.entries_) {
    if (name != ib->first || e.trainable != ib->second.trainable) return false;
    const Tensor& x = e.value;
    const Tensor& y = ib->second.value;
    if (x.rows() != y.rows() || x.cols() != y.cols() || x != y) return false;
    ++ib;
  }
  return true;
}

Tensor glorot_uniform(Index fan_in, Index fan_out, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  Tensor w(fan_in, fan_out);
  // Fill in row-major order so the draw sequence does not depend on storage order.
  for (Index r = 0; r < fan_in; ++r) {
    for (Index c = 0; c < fan_out; ++c) {
      w(r, c) = dist(rng);
    }
  }
  return w;
}

}  // namespace vcell
