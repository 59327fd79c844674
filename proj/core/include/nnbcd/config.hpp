#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nnbcd/data.hpp"
#include "nnbcd/model.hpp"

namespace nnbcd {

enum class MetricKind { Accuracy, Bacc };

/// Where training and test data come from.
struct DataConfig {
  enum class Source { Synthetic, Idx, Csv, Archive } source = Source::Synthetic;

  // synthetic
  data::SyntheticOptions synthetic;
  std::size_t test_samples = 0;      // synthetic test split: same seed, next sample stream
  // idx
  std::filesystem::path train_images, train_labels, test_images, test_labels;
  std::optional<std::size_t> train_limit, test_limit;
  std::size_t num_classes = 10;
  // csv
  std::filesystem::path train_csv, test_csv;
  data::CsvOptions csv;
  // archive
  std::filesystem::path train_archive, test_archive;
};

struct RunConfig {
  std::size_t iterations = 100;
  std::uint64_t seed = 1;
  InitScheme init;
  MetricKind metric = MetricKind::Accuracy;
  bool record_wall_time = true;
  double memory_budget_gib = 4.0;
  double descent_tolerance = 1e-8;
};

/// Parsed and validated training configuration. JSON sections:
/// {network, hyperparams, compression, data, run}.
struct TrainConfig {
  NetworkSpec network;
  Hyperparams hyperparams;
  DataConfig data;
  RunConfig run;
};

/// Throws Error(ConfigError) naming the offending key. Relative paths are
/// resolved against `base_dir`.
TrainConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
TrainConfig load_config(const std::filesystem::path& path);

/// Per-layer compression list in the "compression" section format.
std::vector<CompressionSpec> parse_compression(std::string_view json_text, const NetworkSpec& network);

/// Canonical JSON (sorted keys) of a network spec, and its inverse.
std::string network_to_json(const NetworkSpec& spec);
NetworkSpec network_from_json(std::string_view json_text);
std::string hyperparams_to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(std::string_view json_text);

/// Resolves the configured train / test datasets.
data::Dataset load_train_data(const DataConfig& cfg, const NetworkSpec& spec);
std::optional<data::Dataset> load_test_data(const DataConfig& cfg, const NetworkSpec& spec);

}  // namespace nnbcd
