#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nnbcd/tensor.hpp"

namespace nnbcd::data {

enum class Split { Train, Test };

/// Column-per-sample dataset: X is n_0 x n, Y is n_N x n.
struct Dataset {
  Matrix x;
  Matrix y;
  Split split = Split::Train;
  std::vector<std::string> class_names;

  std::size_t samples() const noexcept { return static_cast<std::size_t>(x.cols()); }
  std::size_t features() const noexcept { return static_cast<std::size_t>(x.rows()); }
  std::size_t outputs() const noexcept { return static_cast<std::size_t>(y.rows()); }

  /// Throws CountMismatch / NonNumericCell on inconsistent or non-finite content.
  void validate() const;
  bool is_one_hot() const;

  /// First `count` samples.
  Dataset head(std::size_t count) const;
};

/// MNIST-style IDX pair: images magic 0x00000803, labels 0x00000801, big-endian.
/// Pixels are scaled to [0, 1] and flattened row-major; labels become one-hot
/// columns over `num_classes` (10 for MNIST). `limit` keeps only the first samples.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t num_classes = 10, std::optional<std::size_t> limit = std::nullopt);

struct FeatureStats {
  Vector mean;
  Vector std;  // constant columns get std 1
};

struct CsvOptions {
  /// Name of the label column; if empty, `label_index` is used.
  std::string label_column = "label";
  std::optional<std::size_t> label_index;
  bool one_hot = true;
  bool standardize = true;
  /// Reuse statistics (e.g. from the training split) instead of computing them.
  std::optional<FeatureStats> stats;
  /// Fix the class list (e.g. to the training split's) so encodings agree.
  std::vector<std::string> class_names;
};

/// Rectangular numeric CSV with a header row. Labels may be numbers or names;
/// classes are ordered numerically when all labels are numeric, otherwise by
/// first appearance. With one_hot = false a two-class label becomes +-1.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options, FeatureStats* stats_out = nullptr);

FeatureStats feature_stats(const Matrix& x);
void standardize(Matrix& x, const FeatureStats& stats);

enum class SyntheticKind { TeacherNet, GaussianBlobs, ImbalancedBinary };

struct SyntheticOptions {
  SyntheticKind kind = SyntheticKind::TeacherNet;
  std::size_t samples = 200;
  std::size_t features = 20;
  /// teacher-net: output width; gaussian-blobs: class count. Imbalanced-binary is always 2.
  std::size_t outputs = 4;
  /// teacher-net hidden widths.
  std::vector<std::size_t> hidden = {16};
  double noise = 0.0;
  /// gaussian-blobs: centre spread; imbalanced-binary: distance between class means.
  double separation = 4.0;
  /// imbalanced-binary: positive fraction (default mirrors 4057 / 111050).
  double positive_fraction = 4057.0 / 111050.0;
  /// imbalanced-binary: number of coordinates carrying the mean shift.
  std::size_t informative = 10;
  std::uint64_t seed = 1;
  /// Sample stream. The teacher weights / class means depend on `seed` only,
  /// so a different stream draws fresh samples from the same distribution.
  std::uint64_t stream = 0;
};

/// Teacher-net: X ~ N(0, I), Y = f(X) for a fixed random ReLU network (+ noise).
/// Gaussian-blobs: one-hot labels of isotropic clusters.
/// Imbalanced-binary: round(fraction * n) positives with shifted mean, one-hot
/// over (negative, positive).
Dataset make_synthetic(const SyntheticOptions& options);

/// Lossless round trip through the binary archive format.
void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace nnbcd::data
