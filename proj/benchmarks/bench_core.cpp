#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "nnbcd/bcd.hpp"
#include "nnbcd/compress.hpp"
#include "nnbcd/im2col.hpp"
#include "nnbcd/prox.hpp"
#include "nnbcd/tt.hpp"

using namespace nnbcd;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = dist(gen);
  return m;
}

void BM_ProxRelu(benchmark::State& state) {
  const Matrix a = random_matrix(256, 1000, 1), b = random_matrix(256, 1000, 2);
  for (auto _ : state) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) sum += prox::relu(a.data()[k], b.data()[k], 1.0);
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * a.size());
}
BENCHMARK(BM_ProxRelu);

void BM_ProjectTopk(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix z = random_matrix(1, static_cast<Eigen::Index>(n), 3);
  std::vector<double> buf(n);
  std::vector<std::size_t> scratch;
  for (auto _ : state) {
    std::copy(z.data(), z.data() + n, buf.begin());
    prox::project_topk_inplace(buf, n / 20, scratch);
    benchmark::DoNotOptimize(buf.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ProjectTopk)->Arg(12000)->Arg(200704);

const tt::Tensorization kMnistHidden{{4, 4, 4, 4}, {4, 7, 7, 4}};

void BM_TtSvd(benchmark::State& state) {
  const Matrix w = random_matrix(256, 784, 4);
  const tt::RankChain ranks{1, 16, 36, 16, 1};
  for (auto _ : state) benchmark::DoNotOptimize(tt::tt_svd(w, kMnistHidden, ranks));
}
BENCHMARK(BM_TtSvd)->Unit(benchmark::kMillisecond);

void BM_TtForward(benchmark::State& state) {
  const auto cores = tt::tt_svd(random_matrix(256, 784, 5), kMnistHidden, {1, 16, 36, 16, 1});
  const Matrix x = random_matrix(784, state.range(0), 6);
  for (auto _ : state) benchmark::DoNotOptimize(tt::tt_forward(cores, kMnistHidden, x));
}
BENCHMARK(BM_TtForward)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Im2col(benchmark::State& state) {
  DenseTensor x({28, 28, 3});
  std::mt19937_64 gen(7);
  std::normal_distribution<double> dist;
  for (auto& v : x.data()) v = dist(gen);
  for (auto _ : state) benchmark::DoNotOptimize(im2col(x, 5));
}
BENCHMARK(BM_Im2col);

void BM_Sweep(benchmark::State& state) {
  const auto n = state.range(0);
  auto spec = NetworkSpec::mlp({40, 300, 100, 2});
  spec.compression = {CompressionSpec::l0_constrained(600), CompressionSpec::l0_constrained(1500),
                      CompressionSpec::l0_constrained(10)};
  spec.validate();
  const Hyperparams hp{};
  bcd::Engine engine(spec, hp, std::make_shared<const Matrix>(random_matrix(40, n, 8)),
                     std::make_shared<const Matrix>(random_matrix(2, n, 9)));
  auto st = init_state(spec, engine.shared_x(), 1, {InitKind::Gaussian, 0.1}, hp);
  for (auto _ : state) engine.sweep(st);
}
BENCHMARK(BM_Sweep)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
