#pragma once

#include <filesystem>

#include "vcell/ndmath/params.hpp"

namespace vcell::pipeline {

/// Checkpoint file or shape mismatch.
class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};

/// params.bin: float64 little-endian arrays in name order (row-major);
/// params.json: name, shape, trainable flag and byte offset of each array plus a checksum.
void save_checkpoint(const ParamSet& params, const std::filesystem::path& dir);

/// Loads into `params`, whose names and shapes must match the checkpoint exactly.
void load_checkpoint(ParamSet& params, const std::filesystem::path& dir);

}  // namespace vcell::pipeline
