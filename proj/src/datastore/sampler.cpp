#include "vcell/datastore/sampler.hpp"

#include <algorithm>
#include <numeric>

namespace vcell::datastore {

Strategy parse_strategy(const std::string& name) {
  if (name == "proportional") return Strategy::Proportional;
  if (name == "uniform") return Strategy::Uniform;
  throw ConfigError("unknown sampling strategy '" + name + "' (expected proportional or uniform)");
}

std::string to_string(Strategy s) { return s == Strategy::Proportional ? "proportional" : "uniform"; }

std::vector<Index> draw_rows(Index size, Index n, std::mt19937_64& rng) {
  if (size < 1) throw SamplingError("draw_rows: empty group");
  std::vector<Index> out(static_cast<std::size_t>(n));
  if (size >= n) {
    std::vector<Index> pool(static_cast<std::size_t>(size));
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index i = 0; i < n; ++i) {
      std::uniform_int_distribution<Index> pick(i, size - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
      out[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(i)];
    }
  } else {
    std::uniform_int_distribution<Index> pick(0, size - 1);
    for (auto& r : out) r = pick(rng);
  }
  return out;
}

std::vector<Index> wrap_rows(Index size, Index n) {
  if (size < 1) throw SamplingError("wrap_rows: empty group");
  std::vector<Index> out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i % size;
  return out;
}

Sampler::Sampler(const Dataset& ds, std::vector<GroupKey> keys, Strategy strategy) : keys_(std::move(keys)) {
  if (keys_.empty()) {
    for (const auto& [k, b] : ds.groups) keys_.push_back(k);
  }
  if (keys_.empty()) throw SamplingError("sampler: dataset has no perturbed groups");
  std::sort(keys_.begin(), keys_.end());
  keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
  for (const auto& k : keys_) {
    auto g = ds.groups.find(k);
    if (g == ds.groups.end()) throw LookupError("sampler: no group " + ds.describe(k));
    if (g->second.rows == 0) throw SamplingError("sampler: group " + ds.describe(k) + " is empty");
    auto c = ds.controls.find(control_key(k));
    if (c == ds.controls.end() || c->second.rows == 0) {
      throw SamplingError("sampler: no matched control cells for " + ds.describe(k));
    }
    groups_.push_back(to_dense(g->second));
    if (!controls_.count(control_key(k))) controls_[control_key(k)] = to_dense(c->second);
    weights_.push_back(strategy == Strategy::Proportional ? static_cast<double>(g->second.rows) : 1.0);
  }
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  double run = 0.0;
  for (auto& w : weights_) {
    w /= total;
    run += w;
    cumulative_.push_back(run);
  }
  cumulative_.back() = 1.0;
}

const GroupKey& Sampler::draw_group(std::mt19937_64& rng) const {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return keys_[std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), keys_.size() - 1)];
}

TrainExample Sampler::draw(std::mt19937_64& rng, Index n) const {
  const GroupKey& key = draw_group(rng);
  const auto idx = static_cast<std::size_t>(std::lower_bound(keys_.begin(), keys_.end(), key) - keys_.begin());
  const Tensor& pert = groups_[idx];
  const Tensor& ctrl = controls_.at(control_key(key));
  TrainExample ex{Tensor(n, pert.cols()), Tensor(n, pert.cols()), key};
  const auto rows1 = draw_rows(pert.rows(), n, rng);
  const auto rows0 = draw_rows(ctrl.rows(), n, rng);
  for (Index i = 0; i < n; ++i) {
    ex.x1.row(i) = pert.row(rows1[static_cast<std::size_t>(i)]);
    ex.x0.row(i) = ctrl.row(rows0[static_cast<std::size_t>(i)]);
  }
  return ex;
}

std::vector<TrainExample> Sampler::sample_batch(Index b, Index n, std::mt19937_64& rng) const {
  std::vector<TrainExample> out;
  out.reserve(static_cast<std::size_t>(b));
  for (Index i = 0; i < b; ++i) out.push_back(draw(rng, n));
  return out;
}

}  // namespace vcell::datastore
