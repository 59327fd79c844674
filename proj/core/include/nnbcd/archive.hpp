#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nnbcd/model.hpp"

namespace nnbcd {

// Binary container shared by checkpoints and datasets:
//
//   bytes 0..7   magic "NNBCDAR1"
//   bytes 8..15  header length L, uint64 little-endian
//   next L bytes UTF-8 JSON header:
//                {"kind": str, "meta": {...},
//                 "tensors": [{"name": str, "shape": [..], "offset": bytes}, ...]}
//   payload      float64 little-endian tensor data, offsets relative to payload start
struct ArchiveTensor {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

struct Archive {
  std::string kind;
  std::string meta_json = "{}";
  std::vector<ArchiveTensor> tensors;

  const ArchiveTensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  void add(std::string name, const Matrix& m);
  void add(std::string name, const Vector& v);
  void add(std::string name, const DenseTensor& t);
};

void write_archive(const std::filesystem::path& path, const Archive& archive);
Archive read_archive(const std::filesystem::path& path);
/// True if the file starts with the archive magic.
bool is_archive(const std::filesystem::path& path);

Matrix to_matrix(const ArchiveTensor& t);
Vector to_vector(const ArchiveTensor& t);

/// FNV-1a 64-bit digest of the canonical network spec JSON, as 16 hex digits.
std::string spec_hash(const NetworkSpec& spec);

struct Checkpoint {
  NetworkSpec spec;
  Hyperparams hp;
  std::size_t iteration = 0;
  std::vector<LayerBlocks> layers;  // all blocks except the data V_0

  std::vector<Matrix> compressed_weights() const;
  std::vector<Vector> biases() const;
};

Checkpoint make_checkpoint(const NetworkSpec& spec, const Hyperparams& hp, const BlockState& state,
                           std::size_t iteration);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
/// Throws HashMismatch if the stored spec hash disagrees with the stored spec.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace nnbcd
