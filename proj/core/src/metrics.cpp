#include "nnbcd/metrics.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace nnbcd::metrics {

namespace {

Eigen::Index argmax_col(const Matrix& m, Eigen::Index j) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < m.rows(); ++i)
    if (m(i, j) > m(best, j)) best = i;
  return best;
}

void check_shapes(const Matrix& pred, const Matrix& y) {
  if (pred.rows() != y.rows() || pred.cols() != y.cols())
    throw Error(ErrorCode::ShapeMismatch, "metrics: predictions and targets differ in shape");
}

double parse_cell(const std::string& cell) {
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw Error(ErrorCode::NonNumericCell, "metrics.csv: bad cell '" + cell + "'");
  return v;
}

}  // namespace

double accuracy(const Matrix& pred, const Matrix& y) {
  check_shapes(pred, y);
  if (y.cols() == 0) return 0.0;
  std::size_t correct = 0;
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    if (y.rows() == 1) correct += (pred(0, j) > 0.0) == (y(0, j) > 0.0);
    else correct += argmax_col(pred, j) == argmax_col(y, j);
  }
  return static_cast<double>(correct) / static_cast<double>(y.cols());
}

Confusion binary_confusion(const Matrix& pred, const Matrix& y) {
  check_shapes(pred, y);
  if (y.rows() > 2) throw Error(ErrorCode::ShapeMismatch, "BACC needs a binary task (1 or 2 output rows)");
  Confusion c;
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    const bool p = y.rows() == 1 ? pred(0, j) > 0.0 : argmax_col(pred, j) == 1;
    const bool t = y.rows() == 1 ? y(0, j) > 0.0 : argmax_col(y, j) == 1;
    if (t) ++(p ? c.tp : c.fn);
    else ++(p ? c.fp : c.tn);
  }
  return c;
}

double balanced_accuracy(const Confusion& c) {
  double sum = 0.0;
  int terms = 0;
  if (c.tp + c.fn > 0) {
    sum += static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    ++terms;
  }
  if (c.tn + c.fp > 0) {
    sum += static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    ++terms;
  }
  return terms ? sum / terms : 0.0;
}

double score(MetricKind kind, const Matrix& pred, const Matrix& y) {
  return kind == MetricKind::Bacc ? balanced_accuracy(binary_confusion(pred, y)) : accuracy(pred, y);
}

std::string_view to_string(MetricKind kind) noexcept { return kind == MetricKind::Bacc ? "bacc" : "accuracy"; }

std::string format_double(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string csv_row(const diagnostics::IterationRecord& r) {
  const auto& o = r.objective;
  std::string s = std::to_string(r.k);
  for (double v : {o.total, o.risk, o.coupling_rho, o.coupling_gamma, o.mc_tau, r.step_norm_sq}) s += "," + format_double(v);
  s += r.descent_ok ? ",1" : ",0";
  for (double v : {r.train_metric, r.test_metric, r.wall_time}) s += "," + format_double(v);
  return s;
}

diagnostics::IterationRecord parse_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  if (cells.size() != 11) throw Error(ErrorCode::RaggedRows, "metrics.csv: expected 11 cells, got " + std::to_string(cells.size()));

  diagnostics::IterationRecord r;
  r.k = static_cast<std::size_t>(parse_cell(cells[0]));
  r.objective.total = parse_cell(cells[1]);
  r.objective.risk = parse_cell(cells[2]);
  r.objective.coupling_rho = parse_cell(cells[3]);
  r.objective.coupling_gamma = parse_cell(cells[4]);
  r.objective.mc_tau = parse_cell(cells[5]);
  r.objective.reg_w =
      r.objective.total - (r.objective.risk + r.objective.coupling_rho + r.objective.coupling_gamma + r.objective.mc_tau);
  r.step_norm_sq = parse_cell(cells[6]);
  if (cells[7] != "0" && cells[7] != "1") throw Error(ErrorCode::NonNumericCell, "metrics.csv: descent_ok must be 0 or 1");
  r.descent_ok = cells[7] == "1";
  r.train_metric = parse_cell(cells[8]);
  r.test_metric = parse_cell(cells[9]);
  r.wall_time = parse_cell(cells[10]);
  return r;
}

std::vector<diagnostics::IterationRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw Error(ErrorCode::BadMagic, path.string() + ": unexpected metrics.csv header");
  std::vector<diagnostics::IterationRecord> out;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(parse_csv_row(line));
  return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
  if (!out_) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out_ << kCsvHeader << '\n';
  out_.flush();
}

void CsvWriter::write(const diagnostics::IterationRecord& r) {
  out_ << csv_row(r) << '\n';
  out_.flush();
}

}  // namespace nnbcd::metrics
