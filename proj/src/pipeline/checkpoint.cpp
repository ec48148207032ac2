#include "vcell/pipeline/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <set>

#include "json.hpp"
#include "vcell/datastore/shard_io.hpp"

namespace vcell::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

void save_checkpoint(const ParamSet& params, const fs::path& dir) {
  fs::create_directories(dir);
  std::string bin;
  json entries = json::array();
  for (const auto& name : params.names()) {
    const Tensor& t = params.at(name);
    std::vector<double> flat(static_cast<std::size_t>(t.size()));
    for (Index r = 0; r < t.rows(); ++r) {
      for (Index c = 0; c < t.cols(); ++c) flat[static_cast<std::size_t>(r * t.cols() + c)] = t(r, c);
    }
    entries.push_back({{"name", name},
                       {"rows", t.rows()},
                       {"cols", t.cols()},
                       {"trainable", params.trainable(name)},
                       {"offset", bin.size()}});
    bin.append(reinterpret_cast<const char*>(flat.data()), flat.size() * sizeof(double));
  }
  json manifest = {{"format", "vcell-params"},
                   {"version", 1},
                   {"dtype", "float64"},
                   {"bytes", bin.size()},
                   {"checksum", datastore::fnv1a64(bin)},
                   {"params", entries}};
  datastore::write_file_atomic(dir / "params.bin", bin);
  datastore::write_file_atomic(dir / "params.json", manifest.dump(1));
}

void load_checkpoint(ParamSet& params, const fs::path& dir) {
  json manifest;
  std::string bin;
  try {
    manifest = json::parse(datastore::read_file(dir / "params.json"));
    bin = datastore::read_file(dir / "params.bin");
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint manifest: ") + e.what());
  } catch (const DataError& e) {
    throw CheckpointError(e.what());
  }
  try {
    if (manifest.at("bytes").get<std::size_t>() != bin.size() ||
        manifest.at("checksum").get<std::uint64_t>() != datastore::fnv1a64(bin)) {
      throw CheckpointError("checkpoint: params.bin does not match its manifest");
    }
    std::set<std::string> seen;
    for (const auto& e : manifest.at("params")) {
      const auto name = e.at("name").get<std::string>();
      const auto rows = e.at("rows").get<Index>(), cols = e.at("cols").get<Index>();
      const auto offset = e.at("offset").get<std::size_t>();
      if (!params.contains(name)) throw CheckpointError("checkpoint has parameter '" + name + "' unknown to the model");
      const Tensor& cur = params.at(name);
      if (cur.rows() != rows || cur.cols() != cols) {
        throw CheckpointError("checkpoint shape mismatch for '" + name + "': " + shape_str(rows, cols) +
                              " stored, model expects " + shape_str(cur.rows(), cur.cols()));
      }
      const std::size_t bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
      if (offset + bytes > bin.size()) throw CheckpointError("checkpoint: '" + name + "' runs past params.bin");
      Tensor t(rows, cols);
      for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
          std::memcpy(&t(r, c), bin.data() + offset + static_cast<std::size_t>(r * cols + c) * sizeof(double),
                      sizeof(double));
        }
      }
      params.set(name, t);
      seen.insert(name);
    }
    if (seen.size() != params.size()) throw CheckpointError("checkpoint is missing model parameters");
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint manifest: ") + e.what());
  }
}

}  // namespace vcell::pipeline
