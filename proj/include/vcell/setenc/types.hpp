#pragma once

#include <vector>

#include "vcell/ndmath/tensor.hpp"

namespace vcell {

/// B unordered sets of N items, stored as (B*N) x width stacked rows.
/// The tag keeps expression batches and latent batches from being mixed up.
template <typename Tag>
struct StackedSets {
  Index sets = 0;
  Index items = 0;
  Tensor values;

  StackedSets() = default;
  StackedSets(Index b, Index n, Tensor v) : sets(b), items(n), values(std::move(v)) {
    if (values.rows() != sets * items) {
      throw DimensionError("set batch: " + std::to_string(values.rows()) + " rows for " + std::to_string(sets) +
                           " sets of " + std::to_string(items));
    }
  }

  Index width() const { return values.cols(); }
  auto set(Index b) { return values.middleRows(b * items, items); }
  auto set(Index b) const { return values.middleRows(b * items, items); }
};

struct CellTag {};
struct LatentTag {};

/// Expression values (post-preprocessing log space): B x N x G.
using CellSetBatch = StackedSets<CellTag>;
/// Set-aware latent populations: B x N x d.
using LatentBatch = StackedSets<LatentTag>;

/// Reorders the items of every set: item i of the result is item perm[i] of the input.
template <typename Tag>
StackedSets<Tag> permute_items(const StackedSets<Tag>& x, const std::vector<Index>& perm) {
  if (static_cast<Index>(perm.size()) != x.items) {
    throw DimensionError("permute_items: permutation length differs from item count");
  }
  Tensor out(x.values.rows(), x.values.cols());
  for (Index b = 0; b < x.sets; ++b) {
    for (Index i = 0; i < x.items; ++i) {
      out.row(b * x.items + i) = x.values.row(b * x.items + perm[static_cast<std::size_t>(i)]);
    }
  }
  return StackedSets<Tag>(x.sets, x.items, std::move(out));
}

}  // namespace vcell
