#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nnbcd/archive.hpp"
#include "nnbcd/config.hpp"
#include "nnbcd/diagnostics.hpp"
#include "nnbcd/metrics.hpp"

namespace nnbcd {

/// Exit status for the CLI: 2 config, 3 data, 4 numerical failure.
int exit_code(ErrorCode code) noexcept;

/// Applies NNBCD_THREADS (if set) as the cap on internal parallelism and
/// returns the thread count in effect. Throws ConfigError on a bad value.
int configure_threads();

struct TrainSummary {
  std::size_t iterations = 0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  MetricKind metric = MetricKind::Accuracy;
  double train_metric = 0.0;
  std::optional<double> test_metric;
  double compression_ratio = 1.0;
  double sparsity = 0.0;
  std::size_t descent_violations = 0;
  double lambda = 0.0;
  double cum_step_sq = 0.0;
  double final_stationarity = 0.0;
  double wall_time = 0.0;
  std::vector<diagnostics::IterationRecord> records;

  std::string to_json() const;
};

/// Called after every sweep with the fresh record and iterate.
using IterationObserver = std::function<void(const diagnostics::IterationRecord&, const BlockState&)>;

/// Runs the configured number of sweeps. When `out_dir` is non-empty it
/// receives metrics.csv (flushed per row), checkpoint.nnbcd and summary.json.
/// Non-finite objectives raise NumericalFailure.
TrainSummary run_training(const TrainConfig& cfg, const std::filesystem::path& out_dir,
                          const IterationObserver& observer = {});

struct EvalReport {
  std::size_t samples = 0;
  double accuracy = 0.0;
  std::optional<double> bacc;  // binary tasks only
  std::optional<metrics::Confusion> confusion;

  std::string to_json() const;
};

/// Evaluates forward() with the compressed weights after checking every
/// layer's constraint. `data` may be a dataset archive, a CSV file, a
/// directory holding IDX test files or a training config (its test split).
EvalReport evaluate(const Checkpoint& ck, const data::Dataset& ds);
EvalReport cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data);

struct CompressReport {
  std::vector<double> layer_errors;  // ||W_i - W_i^MC||_F
  double compression_ratio = 1.0;
  double sparsity = 0.0;
  std::filesystem::path output;

  std::string to_json() const;
};

/// Replaces every layer's compression and sets W^MC to the pure projection of W.
Checkpoint compress_checkpoint(const Checkpoint& ck, const std::vector<CompressionSpec>& specs, CompressReport* report);
/// Writes the result next to the input as <stem>.compressed.nnbcd unless `out` is given.
CompressReport cmd_compress(const std::filesystem::path& checkpoint, const std::filesystem::path& spec,
                            const std::filesystem::path& out = {});

}  // namespace nnbcd
