#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>
#include <sstream>

#include "nnbcd/compress.hpp"
#include "nnbcd/tt.hpp"
#include "oracles.hpp"

using namespace nnbcd;

namespace {

tt::TTCores random_cores(std::mt19937_64& gen, const tt::Tensorization& t, const tt::RankChain& ranks) {
  tt::TTCores c;
  std::normal_distribution<double> dist;
  for (std::size_t k = 0; k < t.order(); ++k) {
    DenseTensor g({ranks[k], t.row_factors[k], t.col_factors[k], ranks[k + 1]});
    for (auto& v : g.data()) v = dist(gen);
    c.cores.push_back(std::move(g));
  }
  return c;
}

double rel_error(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

const tt::Tensorization k2x2{{2, 2}, {2, 2}};

}  // namespace

TEST(TtSvd, OuterProductExactAtMaxRanks) {
  std::mt19937_64 gen(1);
  const Matrix u = oracle::random_matrix(gen, 4, 1), v = oracle::random_matrix(gen, 4, 1);
  const Matrix w = u * v.transpose();
  const auto cores = tt::tt_svd(w, k2x2, tt::max_ranks(k2x2));
  EXPECT_LE(rel_error(tt::tt_reconstruct(cores, k2x2), w), 1e-10);
}

TEST(TtSvd, ZerosReconstructToZeros) {
  const auto cores = tt::tt_svd(Matrix::Zero(4, 4), k2x2, {1, 2, 1});
  EXPECT_EQ(tt::tt_reconstruct(cores, k2x2), Matrix(Matrix::Zero(4, 4)));
}

TEST(TtSvd, RankOneErrorIsDiscardedEnergyOfFirstUnfolding) {
  std::mt19937_64 gen(2);
  const Matrix w = oracle::random_matrix(gen, 4, 4);
  EXPECT_LE(rel_error(tt::tt_reconstruct(tt::tt_svd(w, k2x2, {1, 4, 1}), k2x2), w), 1e-10);

  // First unfolding of the interleaved tensor: rows (i1, j1), cols (i2, j2).
  Matrix unfold(4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      unfold(static_cast<Eigen::Index>((i / 2) * 2 + j / 2), static_cast<Eigen::Index>((i % 2) * 2 + j % 2)) =
          w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(unfold);
  const auto s = svd.singularValues();
  const double discarded = std::sqrt(s.tail(3).squaredNorm());
  const Matrix approx = tt::tt_reconstruct(tt::tt_svd(w, k2x2, {1, 1, 1}), k2x2);
  EXPECT_NEAR((approx - w).norm(), discarded, 1e-10);
}

TEST(TtSvd, RoundTripAtMaxRanksUpTo64) {
  std::mt19937_64 gen(3);
  const std::vector<tt::Tensorization> shapes = {
      {{2, 2}, {2, 2}}, {{4, 4}, {2, 8}}, {{2, 3, 2}, {3, 2, 2}}, {{2, 2, 2, 2}, {2, 2, 2, 2}},
      {{4, 4, 4}, {4, 2, 8}}, {{2, 4, 2, 4}, {4, 2, 4, 2}}, {{8, 8}, {8, 8}}};
  for (const auto& t : shapes) {
    const Matrix w = oracle::random_matrix(gen, static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
    const auto cores = tt::tt_svd(w, t, tt::max_ranks(t));
    EXPECT_LE(rel_error(tt::tt_reconstruct(cores, t), w), 1e-10);
  }
}

TEST(TtSvd, ErrorsOnBadInput) {
  try {
    tt::tt_svd(Matrix::Zero(4, 4), k2x2, {2, 2, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidRankChain);
  }
  try {
    tt::tt_svd(Matrix::Zero(4, 5), k2x2, {1, 2, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  EXPECT_THROW((tt::Tensorization{{4}, {4}}.validate()), Error);
}

TEST(TtSvd, OversizedRanksAreClamped) {
  bool clamped = false;
  const auto r = tt::clamp_ranks(k2x2, {1, 100, 1}, &clamped);
  EXPECT_TRUE(clamped);
  EXPECT_EQ(r, (tt::RankChain{1, 4, 1}));
  const auto cores = tt::tt_svd(Matrix::Identity(4, 4), k2x2, {1, 100, 1});
  EXPECT_EQ(cores.ranks(), (tt::RankChain{1, 4, 1}));
}

TEST(TtSvd, RankMonotonicity) {
  std::mt19937_64 gen(4);
  const tt::Tensorization t{{2, 2, 2}, {2, 2, 2}};
  const auto rmax = tt::max_ranks(t);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix w = oracle::random_matrix(gen, 8, 8);
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t r1 = 1; r1 <= rmax[1]; ++r1) {
      const double err = (tt::tt_reconstruct(tt::tt_svd(w, t, {1, r1, 4, 1}), t) - w).norm();
      EXPECT_LE(err, previous + 1e-10);
      previous = err;
    }
    previous = std::numeric_limits<double>::infinity();
    for (std::size_t r2 = 1; r2 <= rmax[2]; ++r2) {
      const double err = (tt::tt_reconstruct(tt::tt_svd(w, t, {1, 2, r2, 1}), t) - w).norm();
      EXPECT_LE(err, previous + 1e-10);
      previous = err;
    }
  }
}

TEST(TtReconstruct, ScalarCoresGiveProduct) {
  tt::TTCores c;
  c.cores.emplace_back(Shape{1, 1, 1, 1}, std::vector<double>{3.0});
  c.cores.emplace_back(Shape{1, 1, 1, 1}, std::vector<double>{-2.5});
  const tt::Tensorization t{{1, 1}, {1, 1}};
  EXPECT_EQ(tt::tt_reconstruct(c, t)(0, 0), -7.5);
}

TEST(TtReconstruct, MatchesExplicitSumOverRankIndices) {
  std::mt19937_64 gen(5);
  const std::vector<std::pair<tt::Tensorization, tt::RankChain>> cases = {
      {{{2, 3, 2}, {2, 2, 3}}, {1, 3, 2, 1}},
      {{{2, 2, 2}, {3, 1, 2}}, {1, 2, 4, 1}},
      {{{3, 2}, {2, 4}}, {1, 5, 1}},
      {{{2, 2, 2, 2}, {2, 2, 2, 2}}, {1, 2, 3, 2, 1}}};
  for (const auto& [t, ranks] : cases) {
    const auto cores = random_cores(gen, t, ranks);
    const Matrix want = oracle::tt_bruteforce(cores.cores, t.row_factors, t.col_factors);
    EXPECT_LE((tt::tt_reconstruct(cores, t) - want).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, want.norm()));
  }
}

TEST(TtForward, IdentityColumnsGiveReconstruction) {
  std::mt19937_64 gen(6);
  const tt::Tensorization t{{2, 3}, {2, 2}};
  const auto cores = random_cores(gen, t, {1, 3, 1});
  EXPECT_LE((tt::tt_forward(cores, t, Matrix::Identity(4, 4)) - tt::tt_reconstruct(cores, t)).norm(), 1e-12);
  EXPECT_EQ(tt::tt_forward(cores, t, Matrix::Zero(4, 3)), Matrix(Matrix::Zero(6, 3)));
}

TEST(TtForward, MatchesDenseMultiply) {
  std::mt19937_64 gen(7);
  {
    const tt::Tensorization t{{2, 2, 2, 2}, {2, 2, 2, 2}};
    const auto cores = random_cores(gen, t, {1, 2, 3, 2, 1});
    const Matrix x = oracle::random_matrix(gen, 16, 3);
    EXPECT_LE((tt::tt_forward(cores, t, x) - tt::tt_reconstruct(cores, t) * x).cwiseAbs().maxCoeff(), 1e-10);
  }
  for (int trial = 0; trial < 40; ++trial) {
    // Random tensorizations with M, N <= 64.
    tt::Tensorization t;
    const std::size_t d = 2 + gen() % 3;
    std::size_t m = 1, n = 1;
    for (std::size_t k = 0; k < d; ++k) {
      std::size_t a = 1 + gen() % 4, b = 1 + gen() % 4;
      while (m * a > 64) --a;
      while (n * b > 64) --b;
      t.row_factors.push_back(a);
      t.col_factors.push_back(b);
      m *= a;
      n *= b;
    }
    tt::RankChain ranks(d + 1, 1);
    const auto rmax = tt::max_ranks(t);
    for (std::size_t k = 1; k < d; ++k) ranks[k] = 1 + gen() % rmax[k];
    const auto cores = random_cores(gen, t, ranks);
    const Matrix x = oracle::random_matrix(gen, static_cast<Eigen::Index>(n), 1 + static_cast<Eigen::Index>(gen() % 5));
    const Matrix dense = tt::tt_reconstruct(cores, t) * x;
    EXPECT_LE((tt::tt_forward(cores, t, x) - dense).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, dense.cwiseAbs().maxCoeff()));
  }
  const auto cores = random_cores(gen, k2x2, {1, 2, 1});
  EXPECT_THROW(tt::tt_forward(cores, k2x2, Matrix::Zero(5, 1)), Error);
}

TEST(TtParamCount, Examples) {
  EXPECT_EQ(tt::tt_param_count(k2x2, {1, 1, 1}), 8u);
  EXPECT_EQ(tt::tt_param_count(tt::Tensorization{{2, 2, 2}, {2, 2, 2}}, {1, 2, 2, 1}), 32u);  // 8 + 16 + 8
  const auto full = tt::tt_param_count(k2x2, tt::max_ranks(k2x2));
  EXPECT_GE(full, 16u);
  std::mt19937_64 gen(8);
  EXPECT_EQ(tt::tt_param_count(random_cores(gen, k2x2, {1, 1, 1})), 8u);
}

TEST(TtParamCount, AgreesWithCompressionRatio) {
  std::mt19937_64 gen(9);
  const tt::Tensorization t{{4, 4}, {2, 8}};
  for (std::size_t r = 1; r <= 8; ++r) {
    const Matrix w = oracle::random_matrix(gen, 16, 16);
    const auto cores = tt::tt_svd(w, t, {1, r, 1});
    auto spec = CompressionSpec::tensor_train(t, {1, r, 1});
    spec.validate_for(16, 16);
    const std::vector<CompressionSpec> specs{spec};
    const std::vector<std::pair<std::size_t, std::size_t>> shapes{{16, 16}};
    EXPECT_EQ(compression_ratio(specs, shapes), static_cast<double>(tt::tt_param_count(cores)) / 256.0);
  }
}

TEST(TtCsv, RoundTrip) {
  std::mt19937_64 gen(10);
  const tt::Tensorization t{{2, 3, 2}, {2, 2, 3}};
  const auto cores = random_cores(gen, t, {1, 3, 2, 1});
  std::stringstream ss;
  tt::write_csv(ss, cores, t);
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "d,3,ranks,1;3;2;1,rows,2;3;2,cols,2;2;3");
  const auto [back, t2] = tt::read_csv(ss);
  EXPECT_EQ(t2, t);
  EXPECT_EQ(back, cores);
}

TEST(Tensorize, DigitsMostSignificantFirst) {
  const tt::Tensorization t{{2, 3}, {3, 2}};
  Matrix w(6, 6);
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = static_cast<double>(k);
  const auto flat = tt::tensorize(w, t);
  // Entry (i, j) sits at multi-index (i1, j1, i2, j2).
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      const auto id = oracle::digits(i, t.row_factors), jd = oracle::digits(j, t.col_factors);
      const std::size_t pos = ((id[0] * 3 + jd[0]) * 3 + id[1]) * 2 + jd[1];
      EXPECT_EQ(flat[pos], w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  EXPECT_EQ(tt::detensorize(flat, t), w);
}
