#include "nnbcd/tt.hpp"

#include <algorithm>
#include <charconv>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "nnbcd/linalg.hpp"
#include "nnbcd/log.hpp"

namespace nnbcd::tt {

namespace {

std::size_t product(const std::vector<std::size_t>& v, std::size_t begin, std::size_t end) {
  std::size_t p = 1;
  for (std::size_t k = begin; k < end; ++k) p *= v[k];
  return p;
}

std::string join(const std::vector<std::size_t>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

// Permutation taking (i1..id, j1..jd) to (i1, j1, ..., id, jd).
std::vector<std::size_t> interleave_order(std::size_t d) {
  std::vector<std::size_t> order;
  order.reserve(2 * d);
  for (std::size_t k = 0; k < d; ++k) {
    order.push_back(k);
    order.push_back(d + k);
  }
  return order;
}

Shape split_shape(const Tensorization& t) {
  Shape s(t.row_factors);
  s.insert(s.end(), t.col_factors.begin(), t.col_factors.end());
  return s;
}

}  // namespace

std::size_t Tensorization::rows() const noexcept { return product(row_factors, 0, row_factors.size()); }
std::size_t Tensorization::cols() const noexcept { return product(col_factors, 0, col_factors.size()); }

void Tensorization::validate() const {
  if (row_factors.size() != col_factors.size())
    throw Error(ErrorCode::ShapeMismatch, "row and column factor lists differ in length");
  if (row_factors.size() < 2) throw Error(ErrorCode::ShapeMismatch, "tensorization order must be >= 2");
  const auto zero = [](std::size_t f) { return f == 0; };
  if (std::any_of(row_factors.begin(), row_factors.end(), zero) ||
      std::any_of(col_factors.begin(), col_factors.end(), zero))
    throw Error(ErrorCode::ShapeMismatch, "tensorization factors must be >= 1");
}

void Tensorization::validate_for(std::size_t m, std::size_t n) const {
  validate();
  if (rows() != m || cols() != n)
    throw Error(ErrorCode::ShapeMismatch, "factors (" + join(row_factors, 'x') + ")x(" + join(col_factors, 'x') +
                                              ") do not multiply to " + std::to_string(m) + "x" +
                                              std::to_string(n));
}

RankChain TTCores::ranks() const {
  RankChain r;
  if (cores.empty()) return r;
  r.push_back(cores.front().extent(0));
  for (const auto& c : cores) r.push_back(c.extent(3));
  return r;
}

void TTCores::validate() const {
  if (cores.empty()) throw Error(ErrorCode::InvalidRankChain, "no cores");
  for (const auto& c : cores)
    if (c.rank() != 4) throw Error(ErrorCode::InvalidRankChain, "cores must be order-4 tensors");
  if (cores.front().extent(0) != 1 || cores.back().extent(3) != 1)
    throw Error(ErrorCode::InvalidRankChain, "boundary ranks must be 1");
  for (std::size_t k = 0; k + 1 < cores.size(); ++k)
    if (cores[k].extent(3) != cores[k + 1].extent(0))
      throw Error(ErrorCode::InvalidRankChain, "rank mismatch between cores " + std::to_string(k) + " and " +
                                                   std::to_string(k + 1));
}

void TTCores::validate_for(const Tensorization& t) const {
  validate();
  t.validate();
  if (cores.size() != t.order()) throw Error(ErrorCode::ShapeMismatch, "core count != tensorization order");
  for (std::size_t k = 0; k < cores.size(); ++k)
    if (cores[k].extent(1) != t.row_factors[k] || cores[k].extent(2) != t.col_factors[k])
      throw Error(ErrorCode::ShapeMismatch, "core " + std::to_string(k) + " mode sizes disagree with tensorization");
}

RankChain max_ranks(const Tensorization& t) {
  t.validate();
  const std::size_t d = t.order();
  std::vector<std::size_t> modes(d);
  for (std::size_t k = 0; k < d; ++k) modes[k] = t.row_factors[k] * t.col_factors[k];
  RankChain r(d + 1, 1);
  for (std::size_t k = 1; k < d; ++k) r[k] = std::min(product(modes, 0, k), product(modes, k, d));
  return r;
}

RankChain clamp_ranks(const Tensorization& t, const RankChain& ranks, bool* clamped) {
  const auto limit = max_ranks(t);
  if (ranks.size() != limit.size())
    throw Error(ErrorCode::InvalidRankChain, "rank chain needs " + std::to_string(limit.size()) + " entries, got " +
                                                 std::to_string(ranks.size()));
  if (ranks.front() != 1 || ranks.back() != 1)
    throw Error(ErrorCode::InvalidRankChain, "boundary ranks must be 1, got [" + join(ranks, ',') + "]");
  if (std::any_of(ranks.begin(), ranks.end(), [](std::size_t r) { return r == 0; }))
    throw Error(ErrorCode::InvalidRankChain, "ranks must be >= 1");

  RankChain out(ranks);
  bool changed = false;
  const std::size_t d = t.order();
  const auto mode = [&](std::size_t k) { return t.row_factors[k] * t.col_factors[k]; };
  const auto lower = [&](std::size_t k, std::size_t cap) {
    if (out[k] > cap) {
      out[k] = cap;
      changed = true;
    }
  };
  for (std::size_t k = 1; k < d; ++k) {
    lower(k, limit[k]);
    lower(k, out[k - 1] * mode(k - 1));
  }
  for (std::size_t k = d - 1; k >= 1; --k) lower(k, out[k + 1] * mode(k));
  if (clamped) *clamped = changed;
  return out;
}

std::vector<double> tensorize(const Matrix& w, const Tensorization& t) {
  t.validate_for(static_cast<std::size_t>(w.rows()), static_cast<std::size_t>(w.cols()));
  DenseTensor split(split_shape(t), std::vector<double>(w.data(), w.data() + w.size()));
  const auto order = interleave_order(t.order());
  auto inter = permute(split, order);
  return {inter.data().begin(), inter.data().end()};
}

Matrix detensorize(std::span<const double> entries, const Tensorization& t) {
  t.validate();
  const std::size_t d = t.order();
  Shape inter_shape;
  for (std::size_t k = 0; k < d; ++k) {
    inter_shape.push_back(t.row_factors[k]);
    inter_shape.push_back(t.col_factors[k]);
  }
  DenseTensor inter(inter_shape, std::vector<double>(entries.begin(), entries.end()));
  const auto forward = interleave_order(d);
  auto split = permute(inter, inverse_permutation(forward));
  return ConstMatrixMap(split.data().data(), static_cast<Eigen::Index>(t.rows()),
                        static_cast<Eigen::Index>(t.cols()));
}

TTCores tt_svd(const Matrix& w, const Tensorization& t, const RankChain& ranks) {
  bool clamped = false;
  const auto r = clamp_ranks(t, ranks, &clamped);
  if (clamped)
    log_warning("TT ranks [" + join(ranks, ',') + "] clamped to feasible maximum [" + join(r, ',') + "]");

  const std::size_t d = t.order();
  const auto entries = tensorize(w, t);

  TTCores out;
  out.cores.reserve(d);

  // `rest` holds the not-yet-decomposed remainder as (r_{k-1} * m_k n_k) x (remaining modes).
  std::size_t remaining = entries.size();
  Matrix rest = ConstMatrixMap(entries.data(), 1, static_cast<Eigen::Index>(remaining));
  std::size_t r_prev = 1;
  for (std::size_t k = 0; k + 1 < d; ++k) {
    const std::size_t mode = t.row_factors[k] * t.col_factors[k];
    remaining /= mode;
    Matrix unfolding = reshape_matrix(rest, static_cast<Eigen::Index>(r_prev * mode),
                                      static_cast<Eigen::Index>(remaining));
    const auto rank = static_cast<Eigen::Index>(
        std::min({r[k + 1], r_prev * mode, remaining}));
    auto svd = truncated_svd(unfolding, rank);

    const auto rk = static_cast<std::size_t>(rank);
    out.cores.emplace_back(Shape{r_prev, t.row_factors[k], t.col_factors[k], rk},
                           std::vector<double>(svd.left.data(), svd.left.data() + svd.left.size()));
    rest = svd.values.asDiagonal() * svd.right;
    r_prev = rk;
  }
  out.cores.emplace_back(Shape{r_prev, t.row_factors[d - 1], t.col_factors[d - 1], 1},
                         std::vector<double>(rest.data(), rest.data() + rest.size()));
  return out;
}

Matrix tt_reconstruct(const TTCores& cores, const Tensorization& t) {
  cores.validate_for(t);
  // Merge cores left to right: acc is (prod of modes so far) x r_k.
  Matrix acc = Matrix::Ones(1, 1);
  for (const auto& core : cores.cores) {
    const auto r_in = static_cast<Eigen::Index>(core.extent(0));
    const auto mode = static_cast<Eigen::Index>(core.extent(1) * core.extent(2));
    const auto r_out = static_cast<Eigen::Index>(core.extent(3));
    ConstMatrixMap g(core.data().data(), r_in, mode * r_out);
    Matrix merged = acc * g;  // (prefix) x (mode * r_out), row-major keeps prefix-major order
    acc = reshape_matrix(merged, merged.rows() * mode, r_out);
  }
  return detensorize(std::span<const double>(acc.data(), static_cast<std::size_t>(acc.size())), t);
}

Matrix tt_forward(const TTCores& cores, const Tensorization& t, const Matrix& x) {
  cores.validate_for(t);
  if (static_cast<std::size_t>(x.rows()) != t.cols())
    throw Error(ErrorCode::ShapeMismatch, "tt_forward: input has " + std::to_string(x.rows()) + " rows, expected " +
                                              std::to_string(t.cols()));
  const std::size_t d = t.order();
  const auto batch = static_cast<std::size_t>(x.cols());

  // Buffer layout before core k: (i_1..i_{k-1}) x r_{k-1} x n_k x (n_{k+1}..n_d, batch).
  std::vector<double> buf(x.data(), x.data() + x.size());
  std::size_t prefix = 1;
  for (std::size_t k = 0; k < d; ++k) {
    const auto& core = cores.cores[k];
    const std::size_t r_in = core.extent(0), m = core.extent(1), n = core.extent(2), r_out = core.extent(3);
    const std::size_t suffix = product(t.col_factors, k + 1, d) * batch;

    // G as (m * r_out) x (r_in * n): G[(i, b), (a, j)] = core(a, i, j, b).
    Matrix g(static_cast<Eigen::Index>(m * r_out), static_cast<Eigen::Index>(r_in * n));
    for (std::size_t a = 0; a < r_in; ++a)
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t b = 0; b < r_out; ++b)
            g(static_cast<Eigen::Index>(i * r_out + b), static_cast<Eigen::Index>(a * n + j)) =
                core[((a * m + i) * n + j) * r_out + b];

    std::vector<double> next(prefix * m * r_out * suffix);
    const std::size_t in_block = r_in * n * suffix;
    const std::size_t out_block = m * r_out * suffix;
    for (std::size_t p = 0; p < prefix; ++p) {
      ConstMatrixMap in(buf.data() + p * in_block, static_cast<Eigen::Index>(r_in * n),
                        static_cast<Eigen::Index>(suffix));
      MatrixMap out(next.data() + p * out_block, static_cast<Eigen::Index>(m * r_out),
                    static_cast<Eigen::Index>(suffix));
      out.noalias() = g * in;
    }
    buf = std::move(next);
    prefix *= m;
  }
  return ConstMatrixMap(buf.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(batch));
}

std::size_t tt_param_count(const TTCores& cores) {
  std::size_t total = 0;
  for (const auto& c : cores.cores) total += c.size();
  return total;
}

std::size_t tt_param_count(const Tensorization& t, const RankChain& ranks) {
  const auto r = clamp_ranks(t, ranks);
  std::size_t total = 0;
  for (std::size_t k = 0; k < t.order(); ++k) total += r[k] * t.row_factors[k] * t.col_factors[k] * r[k + 1];
  return total;
}

void write_csv(std::ostream& os, const TTCores& cores, const Tensorization& t) {
  cores.validate_for(t);
  os << "d," << t.order() << ",ranks," << join(cores.ranks(), ';') << ",rows," << join(t.row_factors, ';')
     << ",cols," << join(t.col_factors, ';') << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& c : cores.cores) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i) os << ',';
      os << c[i];
    }
    os << '\n';
  }
}

namespace {

std::vector<std::size_t> parse_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size())
      throw Error(ErrorCode::NonNumericCell, "bad integer '" + item + "' in TT header");
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::pair<TTCores, Tensorization> read_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw Error(ErrorCode::TruncatedFile, "missing TT header");
  std::vector<std::string> fields;
  {
    std::stringstream ss(header);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
  }
  if (fields.size() != 8 || fields[0] != "d" || fields[2] != "ranks" || fields[4] != "rows" || fields[6] != "cols")
    throw Error(ErrorCode::BadMagic, "malformed TT header: " + header);

  Tensorization t{parse_list(fields[5]), parse_list(fields[7])};
  const auto ranks = parse_list(fields[3]);
  const auto d = parse_list(fields[1]);
  if (d.size() != 1 || d[0] != t.order() || ranks.size() != t.order() + 1)
    throw Error(ErrorCode::InvalidRankChain, "TT header sizes disagree");
  t.validate();

  TTCores cores;
  for (std::size_t k = 0; k < t.order(); ++k) {
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorCode::TruncatedFile, "missing core " + std::to_string(k));
    Shape shape{ranks[k], t.row_factors[k], t.col_factors[k], ranks[k + 1]};
    std::vector<double> values;
    values.reserve(shape_size(shape));
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorCode::NonNumericCell, "bad value '" + cell + "' in core " + std::to_string(k));
      }
    }
    if (values.size() != shape_size(shape))
      throw Error(ErrorCode::CountMismatch, "core " + std::to_string(k) + " has wrong entry count");
    cores.cores.emplace_back(std::move(shape), std::move(values));
  }
  cores.validate_for(t);
  return {std::move(cores), std::move(t)};
}

}  // namespace nnbcd::tt
