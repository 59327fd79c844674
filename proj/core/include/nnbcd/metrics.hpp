#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nnbcd/config.hpp"
#include "nnbcd/diagnostics.hpp"

namespace nnbcd::metrics {

/// Fraction of columns whose argmax (lowest index on ties) matches the
/// target's. Single-row outputs compare signs instead.
double accuracy(const Matrix& pred, const Matrix& y);

struct Confusion {
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
};

/// Binary confusion counts. One-row outputs: positive means > 0. Two-row
/// outputs: positive means argmax == 1.
Confusion binary_confusion(const Matrix& pred, const Matrix& y);

/// 1/2 (TP/(TP+FN) + TN/(TN+FP)); a class absent from the targets is left out
/// of the average.
double balanced_accuracy(const Confusion& c);

double score(MetricKind kind, const Matrix& pred, const Matrix& y);
std::string_view to_string(MetricKind kind) noexcept;

/// metrics.csv columns, in order.
inline constexpr const char* kCsvHeader =
    "k,L_total,L_risk,L_coupling_rho,L_coupling_gamma,L_mc_tau,step_norm_sq,descent_ok,train_acc,test_acc,wall_time_s";

/// Shortest decimal that round-trips; NaN is written as an empty cell.
std::string format_double(double v);
std::string csv_row(const diagnostics::IterationRecord& r);
/// Inverse of csv_row. reg_w is recovered as L_total minus the other terms.
diagnostics::IterationRecord parse_csv_row(const std::string& line);
std::vector<diagnostics::IterationRecord> read_metrics_csv(const std::filesystem::path& path);

/// Appends one flushed row per record.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);
  void write(const diagnostics::IterationRecord& r);

 private:
  std::ofstream out_;
};

}  // namespace nnbcd::metrics
