#include "vcell/datastore/sparse_block.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vcell::datastore {

void SparseBlock::validate() const {
  if (offsets.size() != static_cast<std::size_t>(rows) + 1) throw CorruptionError("sparse block: offsets length");
  if (offsets.front() != 0 || offsets.back() != values.size()) throw CorruptionError("sparse block: offsets bounds");
  if (indices.size() != values.size()) throw CorruptionError("sparse block: index/value length mismatch");
  for (std::uint32_t r = 0; r < rows; ++r) {
    if (offsets[r] > offsets[r + 1]) throw CorruptionError("sparse block: decreasing offsets at row " + std::to_string(r));
    for (std::uint64_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      if (indices[k] >= cols) throw CorruptionError("sparse block: column index out of range");
      if (k > offsets[r] && indices[k] <= indices[k - 1]) {
        throw CorruptionError("sparse block: indices not strictly increasing in row " + std::to_string(r));
      }
      if (!std::isfinite(values[k])) throw CorruptionError("sparse block: non-finite value");
    }
  }
}

SparseBlock empty_block(std::uint32_t cols) {
  SparseBlock b;
  b.cols = cols;
  return b;
}

SparseBlock vstack(const std::vector<SparseBlock>& blocks) {
  if (blocks.empty()) throw ArgumentError("vstack: no blocks");
  SparseBlock out = empty_block(blocks.front().cols);
  for (const auto& b : blocks) {
    if (b.cols != out.cols) throw DimensionError("vstack: column count mismatch");
    const std::uint64_t base = out.values.size();
    for (std::uint32_t r = 0; r < b.rows; ++r) out.offsets.push_back(base + b.offsets[r + 1]);
    out.indices.insert(out.indices.end(), b.indices.begin(), b.indices.end());
    out.values.insert(out.values.end(), b.values.begin(), b.values.end());
    out.rows += b.rows;
  }
  return out;
}

SparseBlock select_rows(const SparseBlock& b, const std::vector<Index>& rows) {
  SparseBlock out = empty_block(b.cols);
  for (Index r : rows) {
    if (r < 0 || r >= static_cast<Index>(b.rows)) throw ArgumentError("select_rows: row out of range");
    const auto lo = b.offsets[static_cast<std::size_t>(r)], hi = b.offsets[static_cast<std::size_t>(r) + 1];
    out.indices.insert(out.indices.end(), b.indices.begin() + static_cast<std::ptrdiff_t>(lo),
                       b.indices.begin() + static_cast<std::ptrdiff_t>(hi));
    out.values.insert(out.values.end(), b.values.begin() + static_cast<std::ptrdiff_t>(lo),
                      b.values.begin() + static_cast<std::ptrdiff_t>(hi));
    out.offsets.push_back(out.values.size());
    ++out.rows;
  }
  return out;
}

SparseBlock select_columns(const SparseBlock& b, const std::vector<Index>& genes) {
  std::vector<std::int64_t> remap(b.cols, -1);
  for (std::size_t j = 0; j < genes.size(); ++j) {
    if (genes[j] < 0 || genes[j] >= static_cast<Index>(b.cols)) throw ArgumentError("select_columns: gene out of range");
    remap[static_cast<std::size_t>(genes[j])] = static_cast<std::int64_t>(j);
  }
  SparseBlock out = empty_block(static_cast<std::uint32_t>(genes.size()));
  out.rows = b.rows;
  std::vector<std::pair<std::uint32_t, float>> row;
  for (std::uint32_t r = 0; r < b.rows; ++r) {
    row.clear();
    for (std::uint64_t k = b.offsets[r]; k < b.offsets[r + 1]; ++k) {
      const auto to = remap[b.indices[k]];
      if (to >= 0) row.emplace_back(static_cast<std::uint32_t>(to), b.values[k]);
    }
    std::sort(row.begin(), row.end());
    for (const auto& [c, v] : row) {
      out.indices.push_back(c);
      out.values.push_back(v);
    }
    out.offsets.push_back(out.values.size());
  }
  return out;
}

}  // namespace vcell::datastore
