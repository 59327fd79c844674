#include "nnbcd/archive.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "nnbcd/config.hpp"

namespace nnbcd {

namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'N', 'N', 'B', 'C', 'D', 'A', 'R', '1'};

std::uint64_t byteswap64(std::uint64_t v) {
  std::uint64_t out = 0;
  for (int k = 0; k < 8; ++k) out = (out << 8) | ((v >> (8 * k)) & 0xffu);
  return out;
}

void write_u64_le(std::ostream& os, std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap64(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t to_le(double d) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
  if constexpr (std::endian::native == std::endian::big) bits = byteswap64(bits);
  return bits;
}

double from_le(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) bits = byteswap64(bits);
  return std::bit_cast<double>(bits);
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int k = 15; k >= 0; --k, v >>= 4) s[static_cast<std::size_t>(k)] = digits[v & 0xfu];
  return s;
}

std::string layer_key(const char* block, std::size_t layer) { return std::string(block) + std::to_string(layer + 1); }

}  // namespace

const ArchiveTensor& Archive::get(const std::string& name) const {
  const auto it = std::find_if(tensors.begin(), tensors.end(), [&](const ArchiveTensor& t) { return t.name == name; });
  if (it == tensors.end()) throw Error(ErrorCode::TruncatedFile, "archive has no tensor '" + name + "'");
  return *it;
}

bool Archive::contains(const std::string& name) const {
  return std::any_of(tensors.begin(), tensors.end(), [&](const ArchiveTensor& t) { return t.name == name; });
}

void Archive::add(std::string name, const Matrix& m) {
  tensors.push_back({std::move(name), {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                     std::vector<double>(m.data(), m.data() + m.size())});
}

void Archive::add(std::string name, const Vector& v) {
  tensors.push_back({std::move(name), {static_cast<std::size_t>(v.size())}, std::vector<double>(v.data(), v.data() + v.size())});
}

void Archive::add(std::string name, const DenseTensor& t) {
  tensors.push_back({std::move(name), t.shape(), std::vector<double>(t.data().begin(), t.data().end())});
}

void write_archive(const std::filesystem::path& path, const Archive& archive) {
  json header;
  header["kind"] = archive.kind;
  header["meta"] = json::parse(archive.meta_json);
  header["tensors"] = json::array();
  std::uint64_t offset = 0;
  for (const auto& t : archive.tensors) {
    if (shape_size(t.shape) != t.data.size())
      throw Error(ErrorCode::ShapeMismatch, "archive tensor '" + t.name + "': shape does not match data length");
    header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}});
    offset += t.data.size() * sizeof(double);
  }
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_u64_le(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  std::vector<std::uint64_t> buffer;
  for (const auto& t : archive.tensors) {
    buffer.resize(t.data.size());
    std::transform(t.data.begin(), t.data.end(), buffer.begin(), to_le);
    out.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(buffer.size() * sizeof(double)));
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

bool is_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[8] = {};
  return in.read(magic, sizeof magic) && std::memcmp(magic, kMagic, sizeof kMagic) == 0;
}

Archive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  const std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};

  if (bytes.size() < 16) throw Error(ErrorCode::TruncatedFile, path.string() + ": shorter than the archive header");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw Error(ErrorCode::BadMagic, path.string() + ": not an nnbcd archive");
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data() + 8, sizeof header_len);
  if constexpr (std::endian::native == std::endian::big) header_len = byteswap64(header_len);
  if (header_len > bytes.size() - 16) throw Error(ErrorCode::TruncatedFile, path.string() + ": truncated header");

  json header;
  try {
    header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::TruncatedFile, path.string() + ": unreadable header: " + e.what());
  }

  const std::size_t payload = 16 + header_len;
  Archive a;
  try {
    a.kind = header.at("kind").get<std::string>();
    a.meta_json = header.at("meta").dump();
    for (const auto& entry : header.at("tensors")) {
      ArchiveTensor t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<Shape>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const std::size_t count = shape_size(t.shape);
      if (offset > bytes.size() - payload || count * sizeof(double) > bytes.size() - payload - offset)
        throw Error(ErrorCode::TruncatedFile, path.string() + ": tensor '" + t.name + "' runs past the end of file");
      t.data.resize(count);
      const char* src = bytes.data() + payload + offset;
      for (std::size_t k = 0; k < count; ++k) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, src + k * sizeof bits, sizeof bits);
        t.data[k] = from_le(bits);
      }
      a.tensors.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::TruncatedFile, path.string() + ": malformed header: " + e.what());
  }
  return a;
}

Matrix to_matrix(const ArchiveTensor& t) {
  if (t.shape.size() != 2) throw Error(ErrorCode::ShapeMismatch, "tensor '" + t.name + "' is not 2-D");
  return ConstMatrixMap(t.data.data(), static_cast<Eigen::Index>(t.shape[0]), static_cast<Eigen::Index>(t.shape[1]));
}

Vector to_vector(const ArchiveTensor& t) {
  if (t.shape.size() != 1) throw Error(ErrorCode::ShapeMismatch, "tensor '" + t.name + "' is not 1-D");
  return Eigen::Map<const Vector>(t.data.data(), static_cast<Eigen::Index>(t.data.size()));
}

std::string spec_hash(const NetworkSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : network_to_json(spec)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return hex64(h);
}

std::vector<Matrix> Checkpoint::compressed_weights() const {
  std::vector<Matrix> out;
  for (const auto& l : layers) out.push_back(l.mc.dense);
  return out;
}

std::vector<Vector> Checkpoint::biases() const {
  std::vector<Vector> out;
  for (const auto& l : layers) out.push_back(l.b);
  return out;
}

Checkpoint make_checkpoint(const NetworkSpec& spec, const Hyperparams& hp, const BlockState& state,
                           std::size_t iteration) {
  return {spec, hp, iteration, state.layers};
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  Archive a;
  a.kind = "checkpoint";
  json meta;
  meta["network"] = json::parse(network_to_json(ck.spec));
  meta["hyperparams"] = json::parse(hyperparams_to_json(ck.hp));
  meta["iteration"] = ck.iteration;
  meta["spec_hash"] = spec_hash(ck.spec);
  a.meta_json = meta.dump();
  for (std::size_t i = 0; i < ck.layers.size(); ++i) {
    const auto& l = ck.layers[i];
    a.add(layer_key("W", i), l.w);
    a.add(layer_key("U", i), l.u);
    a.add(layer_key("V", i), l.v);
    a.add(layer_key("MC", i), l.mc.dense);
    if (l.b.size() > 0) a.add(layer_key("b", i), l.b);
    if (l.mc.cores)
      for (std::size_t k = 0; k < l.mc.cores->order(); ++k)
        a.add(layer_key("MC", i) + ".core" + std::to_string(k + 1), l.mc.cores->cores[k]);
  }
  write_archive(path, a);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const Archive a = read_archive(path);
  if (a.kind != "checkpoint") throw Error(ErrorCode::BadMagic, path.string() + ": archive is a '" + a.kind + "', not a checkpoint");

  Checkpoint ck;
  std::string stored_hash;
  try {
    const json meta = json::parse(a.meta_json);
    ck.spec = network_from_json(meta.at("network").dump());
    ck.hp = hyperparams_from_json(meta.at("hyperparams").dump());
    ck.iteration = meta.at("iteration").get<std::size_t>();
    stored_hash = meta.at("spec_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::TruncatedFile, path.string() + ": malformed checkpoint metadata: " + e.what());
  }
  if (spec_hash(ck.spec) != stored_hash)
    throw Error(ErrorCode::HashMismatch, path.string() + ": spec hash " + spec_hash(ck.spec) +
                                             " does not match stored " + stored_hash);

  for (std::size_t i = 0; i < ck.spec.num_layers(); ++i) {
    LayerBlocks l;
    l.w = to_matrix(a.get(layer_key("W", i)));
    l.u = to_matrix(a.get(layer_key("U", i)));
    l.v = to_matrix(a.get(layer_key("V", i)));
    l.mc.dense = to_matrix(a.get(layer_key("MC", i)));
    if (a.contains(layer_key("b", i))) l.b = to_vector(a.get(layer_key("b", i)));
    if (ck.spec.compression[i].kind == CompressionKind::TT) {
      tt::TTCores cores;
      for (std::size_t k = 0; k < ck.spec.compression[i].tensorization.order(); ++k) {
        const auto& t = a.get(layer_key("MC", i) + ".core" + std::to_string(k + 1));
        cores.cores.emplace_back(t.shape, t.data);
      }
      l.mc.cores = std::move(cores);
    }
    if (static_cast<std::size_t>(l.w.rows()) != ck.spec.rows(i) || static_cast<std::size_t>(l.w.cols()) != ck.spec.cols(i) ||
        l.mc.dense.rows() != l.w.rows() || l.mc.dense.cols() != l.w.cols())
      throw Error(ErrorCode::ShapeMismatch, path.string() + ": layer " + std::to_string(i + 1) + " weights do not match the spec");
    ck.layers.push_back(std::move(l));
  }
  return ck;
}

}  // namespace nnbcd
