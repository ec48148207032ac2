#pragma once

#include <random>
#include <vector>

#include "vcell/datastore/dataset.hpp"

namespace vcell::datastore {

class SamplingError : public DataError {
 public:
  using DataError::DataError;
};

enum class Strategy { Proportional, Uniform };

Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy s);

/// N matched control cells, N perturbed cells and the condition ids.
struct TrainExample {
  Tensor x0;
  Tensor x1;
  GroupKey key;
};

/// N row indices out of `size`: without replacement when size >= n, otherwise with replacement.
std::vector<Index> draw_rows(Index size, Index n, std::mt19937_64& rng);

/// Row `i` of the result is row (i mod size): the deterministic control selection used at generation and evaluation.
std::vector<Index> wrap_rows(Index size, Index n);

/// Draws training examples from a fixed subset of groups. Dense copies of the blocks are cached.
class Sampler {
 public:
  /// Empty `keys` means every group of the dataset.
  Sampler(const Dataset& ds, std::vector<GroupKey> keys = {}, Strategy strategy = Strategy::Proportional);

  const std::vector<GroupKey>& keys() const { return keys_; }
  /// Selection probability of every key, same order as keys().
  const std::vector<double>& weights() const { return weights_; }

  const GroupKey& draw_group(std::mt19937_64& rng) const;
  TrainExample draw(std::mt19937_64& rng, Index n) const;
  std::vector<TrainExample> sample_batch(Index b, Index n, std::mt19937_64& rng) const;

 private:
  std::vector<GroupKey> keys_;
  std::vector<double> weights_;
  std::vector<Tensor> groups_;
  std::map<ControlKey, Tensor> controls_;
  std::vector<double> cumulative_;
};

}  // namespace vcell::datastore
