#pragma once

#include <compare>
#include <map>
#include <string>
#include <vector>

#include "vcell/datastore/sparse_block.hpp"

namespace vcell::datastore {

struct GroupKey {
  Index cell_type = 0;
  Index perturbation = 0;
  Index batch = 0;
  auto operator<=>(const GroupKey&) const = default;
};

/// Control cells are shared by every perturbation of a cell type within a batch.
struct ControlKey {
  Index cell_type = 0;
  Index batch = 0;
  auto operator<=>(const ControlKey&) const = default;
};

inline ControlKey control_key(const GroupKey& k) { return {k.cell_type, k.batch}; }

struct Labels {
  std::vector<std::string> cell_types;
  std::vector<std::string> perturbations;
  std::vector<std::string> batches;
  bool operator==(const Labels&) const = default;
};

/// Perturbed groups keyed by condition plus a separate control store.
struct Dataset {
  std::vector<std::string> genes;
  Labels labels;
  std::map<GroupKey, SparseBlock> groups;
  std::map<ControlKey, SparseBlock> controls;

  Index gene_count() const { return static_cast<Index>(genes.size()); }
  std::string describe(const GroupKey& k) const;
  std::string describe(const ControlKey& k) const;
  /// Id lookup by label; LookupError when absent.
  GroupKey key_of(const std::string& cell_type, const std::string& perturbation, const std::string& batch) const;
  /// Checks label ranges, block widths and block invariants.
  void validate() const;
  bool operator==(const Dataset&) const = default;
};

}  // namespace vcell::datastore
