#include "vcell/datastore/shard_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace vcell::datastore {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'V', 'C', 'S', 'B'};

template <typename T>
void put(std::string& out, T v) {
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.append(reinterpret_cast<const char*>(raw), sizeof(T));
}

template <typename T>
void put_array(std::string& out, const std::vector<T>& xs) {
  if constexpr (std::endian::native == std::endian::little) {
    out.append(reinterpret_cast<const char*>(xs.data()), xs.size() * sizeof(T));
  } else {
    for (const T& x : xs) put(out, x);
  }
}

template <typename T>
T get(std::string_view in, std::size_t at) {
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, in.data() + at, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  T v;
  std::memcpy(&v, raw, sizeof(T));
  return v;
}

template <typename T>
void get_array(std::string_view in, std::size_t at, std::vector<T>& xs) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(xs.data(), in.data() + at, xs.size() * sizeof(T));
  } else {
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = get<T>(in, at + i * sizeof(T));
  }
}

std::string group_file(Index cell_type, Index perturbation) {
  return "pert_c" + std::to_string(cell_type) + "_p" + std::to_string(perturbation) + ".vcs";
}

std::string control_file(Index cell_type) { return "ctrl_c" + std::to_string(cell_type) + ".vcs"; }

json entry_json(const ShardEntry& e) {
  return {{"file", e.file}, {"offset", e.offset}, {"bytes", e.bytes}, {"cells", e.cells}, {"checksum", e.checksum}};
}

ShardEntry entry_from(const json& j) {
  return {j.at("file").get<std::string>(), j.at("offset").get<std::uint64_t>(), j.at("bytes").get<std::uint64_t>(),
          j.at("cells").get<std::uint32_t>(), j.at("checksum").get<std::uint64_t>()};
}

Index checked_id(const json& j, const char* field, std::size_t bound) {
  const auto id = j.at(field).get<std::int64_t>();
  if (id < 0 || static_cast<std::size_t>(id) >= bound) {
    throw CorruptionError(std::string("manifest: ") + field + " id " + std::to_string(id) + " outside label table");
  }
  return static_cast<Index>(id);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string encode_block(const SparseBlock& block) {
  block.validate();
  std::string payload;
  payload.reserve(block.offsets.size() * 8 + block.indices.size() * 4 + block.values.size() * 4);
  put_array(payload, block.offsets);
  put_array(payload, block.indices);
  put_array(payload, block.values);
  std::string out;
  out.reserve(kHeaderBytes + payload.size());
  out.append(kMagic, 4);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, block.rows);
  put<std::uint32_t>(out, block.cols);
  put<std::uint64_t>(out, block.nnz());
  put<std::uint64_t>(out, fnv1a64(payload));
  out += payload;
  return out;
}

std::uint64_t block_checksum(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes) throw CorruptionError("shard block: truncated header");
  return get<std::uint64_t>(bytes, 24);
}

SparseBlock decode_block(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes) throw CorruptionError("shard block: truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CorruptionError("shard block: bad magic");
  const auto version = get<std::uint32_t>(bytes, 4);
  if (version != kFormatVersion) throw CorruptionError("shard block: unsupported version " + std::to_string(version));
  SparseBlock b;
  b.rows = get<std::uint32_t>(bytes, 8);
  b.cols = get<std::uint32_t>(bytes, 12);
  const auto nnz = get<std::uint64_t>(bytes, 16);
  const auto checksum = get<std::uint64_t>(bytes, 24);
  const std::uint64_t need = kHeaderBytes + (static_cast<std::uint64_t>(b.rows) + 1) * 8 + nnz * 8;
  if (bytes.size() != need) throw CorruptionError("shard block: size does not match header");
  const std::string_view payload = bytes.substr(kHeaderBytes);
  if (fnv1a64(payload) != checksum) throw CorruptionError("shard block: checksum mismatch");
  b.offsets.resize(static_cast<std::size_t>(b.rows) + 1);
  b.indices.resize(nnz);
  b.values.resize(nnz);
  std::size_t at = kHeaderBytes;
  get_array(bytes, at, b.offsets);
  at += b.offsets.size() * 8;
  get_array(bytes, at, b.indices);
  at += b.indices.size() * 4;
  get_array(bytes, at, b.values);
  b.validate();
  return b;
}

std::string manifest_to_json(const ShardManifest& m) {
  json j;
  j["format_version"] = m.version;
  j["genes"] = m.genes;
  j["cell_types"] = m.labels.cell_types;
  j["perturbations"] = m.labels.perturbations;
  j["batches"] = m.labels.batches;
  json groups = json::array();
  for (const auto& [k, e] : m.groups) {
    json g = entry_json(e);
    g["cell_type"] = k.cell_type;
    g["perturbation"] = k.perturbation;
    g["batch"] = k.batch;
    groups.push_back(g);
  }
  j["groups"] = groups;
  json controls = json::array();
  for (const auto& [k, e] : m.controls) {
    json c = entry_json(e);
    c["cell_type"] = k.cell_type;
    c["batch"] = k.batch;
    controls.push_back(c);
  }
  j["controls"] = controls;
  return j.dump(1);
}

ShardManifest manifest_from_json(const std::string& text) {
  ShardManifest m;
  try {
    const json j = json::parse(text);
    m.version = j.at("format_version").get<std::uint32_t>();
    if (m.version != kFormatVersion) throw CorruptionError("manifest: unsupported version");
    m.genes = j.at("genes").get<std::vector<std::string>>();
    m.labels.cell_types = j.at("cell_types").get<std::vector<std::string>>();
    m.labels.perturbations = j.at("perturbations").get<std::vector<std::string>>();
    m.labels.batches = j.at("batches").get<std::vector<std::string>>();
    for (const auto* table : {&m.labels.cell_types, &m.labels.perturbations, &m.labels.batches, &m.genes}) {
      if (std::set<std::string>(table->begin(), table->end()).size() != table->size()) {
        throw CorruptionError("manifest: duplicate label");
      }
    }
    for (const auto& g : j.at("groups")) {
      GroupKey k{checked_id(g, "cell_type", m.labels.cell_types.size()),
                 checked_id(g, "perturbation", m.labels.perturbations.size()),
                 checked_id(g, "batch", m.labels.batches.size())};
      if (!m.groups.emplace(k, entry_from(g)).second) throw CorruptionError("manifest: duplicate group entry");
    }
    for (const auto& c : j.at("controls")) {
      ControlKey k{checked_id(c, "cell_type", m.labels.cell_types.size()),
                   checked_id(c, "batch", m.labels.batches.size())};
      if (!m.controls.emplace(k, entry_from(c)).second) throw CorruptionError("manifest: duplicate control entry");
    }
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("manifest: ") + e.what());
  }
  return m;
}

void write_file_atomic(const fs::path& path, std::string_view text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ShardManifest write_dataset(const Dataset& ds, const fs::path& dir) {
  ds.validate();
  fs::create_directories(dir);
  ShardManifest m;
  m.genes = ds.genes;
  m.labels = ds.labels;

  auto append = [](std::string& file_bytes, const std::string& name, const SparseBlock& b) {
    const std::string enc = encode_block(b);
    ShardEntry e{name, file_bytes.size(), enc.size(), b.rows, block_checksum(enc)};
    file_bytes += enc;
    return e;
  };

  std::map<std::string, std::string> files;
  for (const auto& [k, b] : ds.groups) {
    const std::string name = group_file(k.cell_type, k.perturbation);
    m.groups[k] = append(files[name], name, b);
  }
  for (const auto& [k, b] : ds.controls) {
    const std::string name = control_file(k.cell_type);
    m.controls[k] = append(files[name], name, b);
  }
  for (const auto& [name, bytes] : files) write_file_atomic(dir / name, bytes);
  write_file_atomic(dir / "manifest.json", manifest_to_json(m));
  return m;
}

ShardStore ShardStore::open(const fs::path& dir, bool verify) {
  ShardStore s;
  s.dir_ = dir;
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw DataError("no manifest.json in " + dir.string());
  s.manifest_ = manifest_from_json(read_file(mpath));
  auto check = [&](const ShardEntry& e, const std::string& what) {
    if (!fs::exists(dir / e.file)) throw CorruptionError("manifest references missing shard " + e.file + " (" + what + ")");
    if (verify) s.read_entry(e, what);
  };
  for (const auto& [k, e] : s.manifest_.groups) check(e, "group");
  for (const auto& [k, e] : s.manifest_.controls) check(e, "control");
  return s;
}

SparseBlock ShardStore::read_entry(const ShardEntry& e, const std::string& what) const {
  std::ifstream in(dir_ / e.file, std::ios::binary);
  if (!in) throw CorruptionError("cannot open shard " + e.file);
  std::string bytes(e.bytes, '\0');
  in.seekg(static_cast<std::streamoff>(e.offset));
  in.read(bytes.data(), static_cast<std::streamsize>(e.bytes));
  if (!in) throw CorruptionError("shard " + e.file + " truncated (" + what + ")");
  if (block_checksum(bytes) != e.checksum) throw CorruptionError("shard " + e.file + ": checksum differs from manifest");
  SparseBlock b = decode_block(bytes);
  if (b.rows != e.cells || b.cols != manifest_.genes.size()) {
    throw CorruptionError("shard " + e.file + ": shape differs from manifest");
  }
  return b;
}

SparseBlock ShardStore::read_group(const GroupKey& key) const {
  auto it = manifest_.groups.find(key);
  if (it == manifest_.groups.end()) {
    throw LookupError("no group for cell_type " + std::to_string(key.cell_type) + ", perturbation " +
                      std::to_string(key.perturbation) + ", batch " + std::to_string(key.batch));
  }
  return read_entry(it->second, "group");
}

SparseBlock ShardStore::read_control(const ControlKey& key) const {
  auto it = manifest_.controls.find(key);
  if (it == manifest_.controls.end()) {
    throw LookupError("no control cells for cell_type " + std::to_string(key.cell_type) + ", batch " +
                      std::to_string(key.batch));
  }
  return read_entry(it->second, "control");
}

Dataset ShardStore::load() const {
  Dataset ds;
  ds.genes = manifest_.genes;
  ds.labels = manifest_.labels;
  for (const auto& [k, e] : manifest_.groups) ds.groups[k] = read_entry(e, "group");
  for (const auto& [k, e] : manifest_.controls) ds.controls[k] = read_entry(e, "control");
  return ds;
}

std::string Dataset::describe(const GroupKey& k) const {
  return labels.cell_types.at(static_cast<std::size_t>(k.cell_type)) + "/" +
         labels.perturbations.at(static_cast<std::size_t>(k.perturbation)) + "/" +
         labels.batches.at(static_cast<std::size_t>(k.batch));
}

std::string Dataset::describe(const ControlKey& k) const {
  return labels.cell_types.at(static_cast<std::size_t>(k.cell_type)) + "/control/" +
         labels.batches.at(static_cast<std::size_t>(k.batch));
}

namespace {

Index find_label(const std::vector<std::string>& table, const std::string& name, const char* what) {
  auto it = std::find(table.begin(), table.end(), name);
  if (it == table.end()) throw LookupError(std::string("unknown ") + what + " '" + name + "'");
  return static_cast<Index>(it - table.begin());
}

}  // namespace

GroupKey Dataset::key_of(const std::string& cell_type, const std::string& perturbation, const std::string& batch) const {
  return {find_label(labels.cell_types, cell_type, "cell type"),
          find_label(labels.perturbations, perturbation, "perturbation"), find_label(labels.batches, batch, "batch")};
}

void Dataset::validate() const {
  auto in_range = [](Index id, const std::vector<std::string>& table) {
    return id >= 0 && static_cast<std::size_t>(id) < table.size();
  };
  for (const auto& [k, b] : groups) {
    if (!in_range(k.cell_type, labels.cell_types) || !in_range(k.perturbation, labels.perturbations) ||
        !in_range(k.batch, labels.batches)) {
      throw DataError("dataset: group id outside label tables");
    }
    if (b.cols != genes.size()) throw DataError("dataset: group width differs from gene count");
    b.validate();
  }
  for (const auto& [k, b] : controls) {
    if (!in_range(k.cell_type, labels.cell_types) || !in_range(k.batch, labels.batches)) {
      throw DataError("dataset: control id outside label tables");
    }
    if (b.cols != genes.size()) throw DataError("dataset: control width differs from gene count");
    b.validate();
  }
}

}  // namespace vcell::datastore
