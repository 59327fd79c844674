#include "nnbcd/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "nnbcd/archive.hpp"
#include "nnbcd/error.hpp"
#include "nnbcd/model.hpp"

namespace nnbcd::data {

namespace {

using json = nlohmann::json;

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) throw Error(ErrorCode::TruncatedFile, path.string() + ": truncated IDX header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

void fill_one_hot(Matrix& y, const std::vector<std::size_t>& labels) {
  y.setZero();
  for (std::size_t j = 0; j < labels.size(); ++j) y(static_cast<Eigen::Index>(labels[j]), static_cast<Eigen::Index>(j)) = 1.0;
}

Matrix gaussian(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = scale * rng.normal();
  return m;
}

}  // namespace

void Dataset::validate() const {
  if (x.cols() != y.cols())
    throw Error(ErrorCode::CountMismatch, "dataset: X has " + std::to_string(x.cols()) + " samples, Y has " +
                                              std::to_string(y.cols()));
  if (!x.allFinite() || !y.allFinite()) throw Error(ErrorCode::NonNumericCell, "dataset contains NaN or Inf");
}

bool Dataset::is_one_hot() const {
  if (y.rows() < 2) return false;
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    int ones = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const double v = y(i, j);
      if (v == 1.0) ++ones;
      else if (v != 0.0) return false;
    }
    if (ones != 1) return false;
  }
  return true;
}

Dataset Dataset::head(std::size_t count) const {
  const auto n = static_cast<Eigen::Index>(std::min(count, samples()));
  Dataset out;
  out.x = x.leftCols(n);
  out.y = y.leftCols(n);
  out.split = split;
  out.class_names = class_names;
  return out;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t num_classes,
                 std::optional<std::size_t> limit) {
  const auto img = read_bytes(images);
  const auto lab = read_bytes(labels);

  if (read_be32(img, 0, images) != 0x00000803u)
    throw Error(ErrorCode::BadMagic, images.string() + ": not an IDX image file (magic != 0x00000803)");
  if (read_be32(lab, 0, labels) != 0x00000801u)
    throw Error(ErrorCode::BadMagic, labels.string() + ": not an IDX label file (magic != 0x00000801)");

  const std::size_t count = read_be32(img, 4, images);
  const std::size_t rows = read_be32(img, 8, images);
  const std::size_t cols = read_be32(img, 12, images);
  const std::size_t label_count = read_be32(lab, 4, labels);
  if (count != label_count)
    throw Error(ErrorCode::CountMismatch, "IDX image count " + std::to_string(count) + " != label count " +
                                              std::to_string(label_count));

  const std::size_t pixels = rows * cols;
  if (img.size() < 16 + count * pixels) throw Error(ErrorCode::TruncatedFile, images.string() + ": truncated pixel data");
  if (lab.size() < 8 + count) throw Error(ErrorCode::TruncatedFile, labels.string() + ": truncated label data");

  const std::size_t n = limit ? std::min(*limit, count) : count;
  Dataset ds;
  ds.x.resize(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(n));
  ds.y.resize(static_cast<Eigen::Index>(num_classes), static_cast<Eigen::Index>(n));
  std::vector<std::size_t> classes(n);
  for (std::size_t j = 0; j < n; ++j) {
    const unsigned char* px = img.data() + 16 + j * pixels;
    for (std::size_t p = 0; p < pixels; ++p)
      ds.x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(j)) = px[p] / 255.0;
    classes[j] = lab[8 + j];
    if (classes[j] >= num_classes)
      throw Error(ErrorCode::CountMismatch, labels.string() + ": label " + std::to_string(classes[j]) + " >= " +
                                                std::to_string(num_classes) + " classes");
  }
  fill_one_hot(ds.y, classes);
  for (std::size_t c = 0; c < num_classes; ++c) ds.class_names.push_back(std::to_string(c));
  return ds;
}

FeatureStats feature_stats(const Matrix& x) {
  FeatureStats s;
  s.mean = x.rowwise().mean();
  s.std.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double var = (x.row(i).array() - s.mean(i)).square().mean();
    const double sd = std::sqrt(var);
    s.std(i) = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

void standardize(Matrix& x, const FeatureStats& stats) {
  if (stats.mean.size() != x.rows() || stats.std.size() != x.rows())
    throw Error(ErrorCode::ShapeMismatch, "standardize: statistics do not match the feature count");
  x.colwise() -= stats.mean;
  x.array().colwise() /= stats.std.array();
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options, FeatureStats* stats_out) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::TruncatedFile, path.string() + ": missing header row");
  std::vector<std::string> header;
  for (auto cell : split_row(line)) header.emplace_back(cell);

  std::size_t label_col = header.size();
  if (options.label_index) {
    label_col = *options.label_index;
  } else {
    const auto it = std::find(header.begin(), header.end(), options.label_column);
    if (it == header.end()) throw Error(ErrorCode::ConfigError, path.string() + ": no label column '" + options.label_column + "'");
    label_col = static_cast<std::size_t>(it - header.begin());
  }
  if (label_col >= header.size()) throw Error(ErrorCode::ConfigError, path.string() + ": label column index out of range");

  const std::size_t width = header.size();
  std::vector<double> features;
  std::vector<std::string> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != width)
      throw Error(ErrorCode::RaggedRows, path.string() + ": row " + std::to_string(row) + " has " +
                                             std::to_string(cells.size()) + " cells, header has " + std::to_string(width));
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_col) {
        labels.emplace_back(cells[c]);
        continue;
      }
      const auto v = parse_number(cells[c]);
      if (!v || !std::isfinite(*v))
        throw Error(ErrorCode::NonNumericCell, path.string() + ": row " + std::to_string(row) + ", column '" +
                                                   header[c] + "' is not a finite number");
      features.push_back(*v);
    }
  }

  const std::size_t n = labels.size();
  const std::size_t d = width - 1;
  Dataset ds;
  ds.x.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < d; ++i) ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = features[j * d + i];

  // Class list: given, numeric order, or first appearance.
  std::vector<std::string> classes = options.class_names;
  if (classes.empty()) {
    const bool numeric = std::all_of(labels.begin(), labels.end(), [](const std::string& s) { return parse_number(s).has_value(); });
    for (const auto& l : labels)
      if (std::find(classes.begin(), classes.end(), l) == classes.end()) classes.push_back(l);
    if (numeric)
      std::stable_sort(classes.begin(), classes.end(),
                       [](const std::string& a, const std::string& b) { return *parse_number(a) < *parse_number(b); });
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < classes.size(); ++c) index.emplace(classes[c], c);
  std::vector<std::size_t> encoded(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto it = index.find(labels[j]);
    if (it == index.end())
      throw Error(ErrorCode::CountMismatch, path.string() + ": label '" + labels[j] + "' is not in the class list");
    encoded[j] = it->second;
  }

  if (options.one_hot) {
    ds.y.resize(static_cast<Eigen::Index>(classes.size()), static_cast<Eigen::Index>(n));
    fill_one_hot(ds.y, encoded);
  } else {
    if (classes.size() != 2)
      throw Error(ErrorCode::ConfigError, path.string() + ": binary (+-1) labels need exactly two classes");
    ds.y.resize(1, static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) ds.y(0, static_cast<Eigen::Index>(j)) = encoded[j] == 1 ? 1.0 : -1.0;
  }
  ds.class_names = classes;

  if (options.standardize) {
    const FeatureStats stats = options.stats ? *options.stats : feature_stats(ds.x);
    standardize(ds.x, stats);
    if (stats_out) *stats_out = stats;
  }
  return ds;
}

Dataset make_synthetic(const SyntheticOptions& o) {
  if (o.samples == 0 || o.features == 0) throw Error(ErrorCode::ConfigError, "synthetic: samples and features must be > 0");
  Rng model_rng(o.seed);
  Rng rng(o.seed ^ (0x9e3779b97f4a7c15ull * (o.stream + 1)));
  Dataset ds;
  const auto n = static_cast<Eigen::Index>(o.samples);

  switch (o.kind) {
    case SyntheticKind::TeacherNet: {
      if (o.outputs == 0) throw Error(ErrorCode::ConfigError, "synthetic: outputs must be > 0");
      ds.x = gaussian(rng, o.features, o.samples, 1.0);
      Matrix h = ds.x;
      std::size_t fan_in = o.features;
      for (std::size_t width : o.hidden) {
        const Matrix w = gaussian(model_rng, width, fan_in, 1.0 / std::sqrt(static_cast<double>(fan_in)));
        h = (w * h).cwiseMax(0.0);
        fan_in = width;
      }
      const Matrix w = gaussian(model_rng, o.outputs, fan_in, 1.0 / std::sqrt(static_cast<double>(fan_in)));
      ds.y = w * h;
      if (o.noise > 0.0) ds.y += gaussian(rng, o.outputs, o.samples, o.noise);
      break;
    }
    case SyntheticKind::GaussianBlobs: {
      if (o.outputs < 2) throw Error(ErrorCode::ConfigError, "synthetic: gaussian-blobs needs >= 2 classes");
      const Matrix centres = gaussian(model_rng, o.features, o.outputs, o.separation / std::sqrt(static_cast<double>(o.features)));
      ds.x = gaussian(rng, o.features, o.samples, 1.0);
      std::vector<std::size_t> labels(o.samples);
      for (std::size_t j = 0; j < o.samples; ++j) {
        labels[j] = rng.below(o.outputs);
        ds.x.col(static_cast<Eigen::Index>(j)) += centres.col(static_cast<Eigen::Index>(labels[j]));
      }
      ds.y.resize(static_cast<Eigen::Index>(o.outputs), n);
      fill_one_hot(ds.y, labels);
      for (std::size_t c = 0; c < o.outputs; ++c) ds.class_names.push_back(std::to_string(c));
      break;
    }
    case SyntheticKind::ImbalancedBinary: {
      if (!(o.positive_fraction > 0.0 && o.positive_fraction < 1.0))
        throw Error(ErrorCode::ConfigError, "synthetic: positive_fraction must lie in (0, 1)");
      const auto positives = static_cast<std::size_t>(std::llround(o.positive_fraction * static_cast<double>(o.samples)));
      std::vector<std::size_t> order(o.samples);
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t k = o.samples; k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
      std::vector<std::size_t> labels(o.samples, 0);
      for (std::size_t k = 0; k < positives; ++k) labels[order[k]] = 1;

      const std::size_t informative = std::min(std::max<std::size_t>(o.informative, 1), o.features);
      const double shift = o.separation / std::sqrt(static_cast<double>(informative));
      ds.x = gaussian(rng, o.features, o.samples, 1.0);
      for (std::size_t j = 0; j < o.samples; ++j)
        if (labels[j] == 1)
          for (std::size_t i = 0; i < informative; ++i) ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += shift;
      ds.y.resize(2, n);
      fill_one_hot(ds.y, labels);
      ds.class_names = {"negative", "positive"};
      break;
    }
  }
  return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  Archive a;
  a.kind = "dataset";
  a.meta_json = json{{"split", ds.split == Split::Train ? "train" : "test"}, {"class_names", ds.class_names}}.dump();
  a.add("X", ds.x);
  a.add("Y", ds.y);
  write_archive(path, a);
}

Dataset load_dataset(const std::filesystem::path& path) {
  const Archive a = read_archive(path);
  if (a.kind != "dataset") throw Error(ErrorCode::BadMagic, path.string() + ": archive is a '" + a.kind + "', not a dataset");
  Dataset ds;
  ds.x = to_matrix(a.get("X"));
  ds.y = to_matrix(a.get("Y"));
  try {
    const json meta = json::parse(a.meta_json);
    ds.split = meta.value("split", std::string("train")) == "test" ? Split::Test : Split::Train;
    ds.class_names = meta.value("class_names", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::TruncatedFile, path.string() + ": bad dataset metadata: " + e.what());
  }
  ds.validate();
  return ds;
}

}  // namespace nnbcd::data
