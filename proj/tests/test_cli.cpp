#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "nnbcd/archive.hpp"
#include "nnbcd/config.hpp"
#include "nnbcd/metrics.hpp"
#include "nnbcd/trainer.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace nnbcd;
using testutil::TempDir;
using json = nlohmann::json;

namespace {

const char* kSyntheticConfig = R"({
  "network": {"layer_dims": [20, 16, 16, 4], "activation": "relu"},
  "hyperparams": {"gamma": 1, "rho": 1, "tau": 1, "alpha": 1},
  "data": {"source": "synthetic", "kind": "teacher-net", "samples": 200, "test_samples": 100,
           "features": 20, "outputs": 4, "hidden": [16, 16], "seed": 3},
  "run": {"iterations": 12, "seed": 5, "record_wall_time": false}
})";

#ifdef NNBCD_CLI
int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string("\"") + NNBCD_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

}  // namespace

// ---- metrics ----

TEST(Metrics, PerfectPredictions) {
  Matrix y(2, 4);
  y << 1, 0, 0, 1, 0, 1, 1, 0;
  EXPECT_EQ(metrics::accuracy(y, y), 1.0);
  EXPECT_EQ(metrics::balanced_accuracy(metrics::binary_confusion(y, y)), 1.0);
}

TEST(Metrics, BalancedAccuracyArithmetic) {
  EXPECT_DOUBLE_EQ(metrics::balanced_accuracy({.tp = 1, .fn = 1, .tn = 3, .fp = 1}), 0.625);
  // Absent class is left out of the average.
  EXPECT_DOUBLE_EQ(metrics::balanced_accuracy({.tp = 0, .fn = 0, .tn = 3, .fp = 1}), 0.75);
}

TEST(Metrics, AllNegativePredictorIsChance) {
  Matrix y = Matrix::Zero(2, 100);
  for (int j = 0; j < 100; ++j) y(j < 4 ? 1 : 0, j) = 1.0;
  Matrix pred = Matrix::Zero(2, 100);
  pred.row(0).setOnes();
  const auto c = metrics::binary_confusion(pred, y);
  EXPECT_EQ(c.tp, 0u);
  EXPECT_EQ(c.fn, 4u);
  EXPECT_EQ(c.tn, 96u);
  EXPECT_DOUBLE_EQ(metrics::balanced_accuracy(c), 0.5);
  EXPECT_DOUBLE_EQ(metrics::accuracy(pred, y), 0.96);
}

TEST(Metrics, ArgmaxTiesGoToLowestIndex) {
  Matrix pred(3, 2), y(3, 2);
  pred << 0.5, 0.1, 0.5, 0.7, 0.2, 0.7;
  y << 1, 0, 0, 1, 0, 0;
  EXPECT_EQ(metrics::accuracy(pred, y), 1.0);
  Matrix s(1, 3), t(1, 3);
  s << 0.3, -2, 0.1;
  t << 1, -1, -1;
  EXPECT_DOUBLE_EQ(metrics::accuracy(s, t), 2.0 / 3.0);
}

TEST(MetricsCsv, RowsRoundTrip) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> d(0, 10);
  for (int k = 0; k < 50; ++k) {
    diagnostics::IterationRecord r;
    r.k = static_cast<std::size_t>(k + 1);
    r.objective.risk = d(gen);
    r.objective.reg_w = k % 2 ? d(gen) : 0.0;
    r.objective.coupling_rho = d(gen);
    r.objective.coupling_gamma = d(gen) * 1e-12;
    r.objective.mc_tau = d(gen);
    r.objective.total = r.objective.risk + r.objective.reg_w + r.objective.coupling_rho + r.objective.coupling_gamma + r.objective.mc_tau;
    r.step_norm_sq = d(gen);
    r.descent_ok = k % 3 != 0;
    r.train_metric = d(gen) / 10;
    r.test_metric = k % 5 ? d(gen) / 10 : std::numeric_limits<double>::quiet_NaN();
    r.wall_time = d(gen);
    const auto back = metrics::parse_csv_row(metrics::csv_row(r));
    EXPECT_EQ(back.k, r.k);
    EXPECT_EQ(back.objective.total, r.objective.total);
    EXPECT_EQ(back.objective.risk, r.objective.risk);
    EXPECT_EQ(back.objective.coupling_rho, r.objective.coupling_rho);
    EXPECT_EQ(back.objective.coupling_gamma, r.objective.coupling_gamma);
    EXPECT_EQ(back.objective.mc_tau, r.objective.mc_tau);
    EXPECT_NEAR(back.objective.reg_w, r.objective.reg_w, 1e-12 * r.objective.total);
    EXPECT_EQ(back.step_norm_sq, r.step_norm_sq);
    EXPECT_EQ(back.descent_ok, r.descent_ok);
    EXPECT_EQ(back.train_metric, r.train_metric);
    if (std::isnan(r.test_metric)) EXPECT_TRUE(std::isnan(back.test_metric));
    else EXPECT_EQ(back.test_metric, r.test_metric);
    EXPECT_EQ(back.wall_time, r.wall_time);
  }
  EXPECT_EQ(metrics::format_double(0.1), "0.1");
  EXPECT_EQ(metrics::format_double(std::numeric_limits<double>::quiet_NaN()), "");
  EXPECT_THROW(metrics::parse_csv_row("1,2,3"), Error);
}

TEST(MetricsCsv, HeaderOrder) {
  EXPECT_STREQ(metrics::kCsvHeader,
               "k,L_total,L_risk,L_coupling_rho,L_coupling_gamma,L_mc_tau,step_norm_sq,descent_ok,train_acc,test_acc,wall_time_s");
}

// ---- config ----

TEST(Config, ParsesSyntheticConfig) {
  const auto cfg = parse_config(kSyntheticConfig);
  EXPECT_EQ(cfg.network.layer_dims, (std::vector<std::size_t>{20, 16, 16, 4}));
  EXPECT_EQ(cfg.network.activations.back().kind, ActivationKind::Identity);
  EXPECT_EQ(cfg.data.synthetic.hidden, (std::vector<std::size_t>{16, 16}));
  EXPECT_EQ(cfg.data.test_samples, 100u);
  EXPECT_EQ(cfg.run.iterations, 12u);
  EXPECT_FALSE(cfg.run.record_wall_time);
  EXPECT_EQ(cfg.run.init.std, 0.01);
}

TEST(Config, ErrorsNameTheKey) {
  const auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ConfigError);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string data = R"("data": {"source": "synthetic", "kind": "teacher-net"})";
  EXPECT_NE(message(R"({"network": {"layer_dims": [20, 4]}, "hyperparams": {"gamma": 0}, )" + data + "}").find("hyperparams.gamma"),
            std::string::npos);
  EXPECT_NE(message(R"({"network": {"layer_dims": [20, 4], "widths": 1}, )" + data + "}").find("network.widths"), std::string::npos);
  EXPECT_NE(message(R"({"network": {"layer_dims": [20, 4], "activation": "tanh"}, )" + data + "}").find("network.activation"),
            std::string::npos);
  EXPECT_NE(message(R"({"network": {"layer_dims": [20, 4]}, "run": {"metric": "f1"}, )" + data + "}").find("run.metric"),
            std::string::npos);
  EXPECT_NE(message(R"({"network": {"layer_dims": [20, 4]}})").find("data"), std::string::npos);
  EXPECT_NE(message("{not json").find("invalid JSON"), std::string::npos);
}

TEST(Config, CompressionForms) {
  const std::string base = R"({"network": {"layer_dims": [16, 16, 4], "compression": )";
  const std::string tail = R"(}, "data": {"source": "synthetic", "kind": "teacher-net", "features": 16}})";
  auto cfg = parse_config(base + R"({"kind": "l0_constrained", "sparsity": 0.95})" + tail);
  EXPECT_EQ(cfg.network.compression[0].beta, 13u);  // ceil(0.05 * 256)
  EXPECT_EQ(cfg.network.compression[1].beta, 4u);   // ceil(0.05 * 64)

  cfg = parse_config(base + R"([{"kind": "tt", "row_factors": [4, 4], "col_factors": [4, 4], "ranks": [1, 3, 1]}, "none"])" + tail);
  EXPECT_EQ(cfg.network.compression[0].kind, CompressionKind::TT);
  EXPECT_EQ(cfg.network.compression[1].kind, CompressionKind::None);

  cfg = parse_config(base + R"("l1_reg")" + tail);
  EXPECT_EQ(cfg.hyperparams.lambda_reg, 1.0);

  EXPECT_THROW(parse_config(base + R"({"kind": "l0_constrained", "beta": 3, "sparsity": 0.5})" + tail), Error);
  EXPECT_THROW(parse_config(base + R"(["none"])" + tail), Error);
  EXPECT_EQ(code_of([&] { parse_config(base + R"({"kind": "l0_constrained", "beta": 999})" + tail); }), ErrorCode::BetaOutOfRange);
}

TEST(Config, NetworkJsonRoundTrip) {
  auto spec = NetworkSpec::mlp({16, 8, 1}, Activation::leaky_relu(0.1), LossKind::Hinge);
  spec.use_bias = true;
  spec.compression = {CompressionSpec::tensor_train({{4, 2}, {4, 4}}, {1, 2, 1}), CompressionSpec::l0_constrained(3)};
  spec.validate();
  const auto back = network_from_json(network_to_json(spec));
  EXPECT_EQ(network_to_json(back), network_to_json(spec));
  EXPECT_EQ(back.activations, spec.activations);
  EXPECT_EQ(back.compression[0].ranks, spec.compression[0].ranks);
  EXPECT_EQ(back.compression[1].beta, 3u);

  const Hyperparams hp{.gamma = 5, .rho = 5, .tau = 0.1, .alpha = 1, .lambda_reg = 0.3};
  EXPECT_EQ(hyperparams_from_json(hyperparams_to_json(hp)), hp);
}

// ---- archive / checkpoint ----

TEST(Checkpoint, RoundTripAndHash) {
  TempDir dir;
  std::mt19937_64 gen(2);
  auto spec = NetworkSpec::mlp({8, 4, 2});
  spec.compression = {CompressionSpec::tensor_train({{2, 2}, {2, 4}}, {1, 2, 1}), CompressionSpec::l0_constrained(5)};
  spec.use_bias = true;
  spec.validate();
  const Hyperparams hp{.gamma = 2};
  const auto st = init_state(spec, std::make_shared<const Matrix>(oracle::random_matrix(gen, 8, 3)), 4, {InitKind::Gaussian, 1.0}, hp);
  save_checkpoint(dir / "ck.nnbcd", make_checkpoint(spec, hp, st, 17));
  EXPECT_TRUE(is_archive(dir / "ck.nnbcd"));
  const auto ck = load_checkpoint(dir / "ck.nnbcd");
  EXPECT_EQ(ck.iteration, 17u);
  EXPECT_EQ(ck.hp, hp);
  EXPECT_EQ(spec_hash(ck.spec), spec_hash(spec));
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(ck.layers[i].w, st.layers[i].w);
    EXPECT_EQ(ck.layers[i].u, st.layers[i].u);
    EXPECT_EQ(ck.layers[i].v, st.layers[i].v);
    EXPECT_EQ(ck.layers[i].b, st.layers[i].b);
    EXPECT_EQ(ck.layers[i].mc.dense, st.layers[i].mc.dense);
  }
  ASSERT_TRUE(ck.layers[0].mc.cores.has_value());
  EXPECT_EQ(*ck.layers[0].mc.cores, *st.layers[0].mc.cores);
  EXPECT_EQ(spec_hash(spec).size(), 16u);
}

TEST(Checkpoint, TamperedSpecIsHashMismatch) {
  TempDir dir;
  const auto spec = [] {
    auto s = NetworkSpec::mlp({3, 2});
    s.validate();
    return s;
  }();
  const auto st = init_state(spec, std::make_shared<const Matrix>(Matrix::Ones(3, 2)), 1, {}, {});
  save_checkpoint(dir / "ck.nnbcd", make_checkpoint(spec, {}, st, 1));
  auto a = read_archive(dir / "ck.nnbcd");
  auto meta = json::parse(a.meta_json);
  meta["spec_hash"] = "0000000000000000";
  a.meta_json = meta.dump();
  write_archive(dir / "bad.nnbcd", a);
  EXPECT_EQ(code_of([&] { load_checkpoint(dir / "bad.nnbcd"); }), ErrorCode::HashMismatch);

  testutil::write_text(dir / "junk.nnbcd", "definitely not an archive");
  EXPECT_EQ(code_of([&] { load_checkpoint(dir / "junk.nnbcd"); }), ErrorCode::BadMagic);
  auto bytes = testutil::read_text(dir / "ck.nnbcd");
  testutil::write_text(dir / "cut.nnbcd", bytes.substr(0, bytes.size() - 9));
  EXPECT_EQ(code_of([&] { load_checkpoint(dir / "cut.nnbcd"); }), ErrorCode::TruncatedFile);
}

// ---- train / eval / compress in process ----

TEST(Train, SyntheticRunWritesArtifacts) {
  TempDir dir;
  const auto cfg = parse_config(kSyntheticConfig);
  const auto summary = run_training(cfg, dir.path());
  EXPECT_EQ(summary.iterations, 12u);
  EXPECT_EQ(summary.descent_violations, 0u);
  EXPECT_LT(summary.final_objective, summary.initial_objective);
  ASSERT_TRUE(summary.test_metric.has_value());
  const auto text = testutil::read_text(dir / "metrics.csv");
  EXPECT_EQ(count_lines(text), 13u);
  EXPECT_EQ(text.substr(0, text.find('\n')), metrics::kCsvHeader);
  const auto rows = metrics::read_metrics_csv(dir / "metrics.csv");
  ASSERT_EQ(rows.size(), 12u);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k].k, k + 1);
    EXPECT_EQ(rows[k].objective.total, summary.records[k].objective.total);
  }
  const auto js = json::parse(testutil::read_text(dir / "summary.json"));
  for (const char* key : {"final_objective", "train_metric", "test_metric", "compression_ratio", "sparsity", "descent_violations"})
    EXPECT_TRUE(js.contains(key)) << key;
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoint.nnbcd"));
}

TEST(Train, RerunIsByteIdentical) {
  TempDir a, b;
  {
    TempDir& first = a;
    run_training(parse_config(kSyntheticConfig), first.path());
  }
  run_training(parse_config(kSyntheticConfig), b.path());
  EXPECT_EQ(testutil::read_text(a / "metrics.csv"), testutil::read_text(b / "metrics.csv"));
  EXPECT_EQ(testutil::read_text(a / "checkpoint.nnbcd"), testutil::read_text(b / "checkpoint.nnbcd"));
}

TEST(Train, HingeFoldsOneHotTargetsToSigns) {
  auto cfg = parse_config(R"({
    "network": {"layer_dims": [8, 6, 1], "loss": "hinge"},
    "data": {"source": "synthetic", "kind": "imbalanced-binary", "samples": 100, "test_samples": 50, "features": 8},
    "run": {"iterations": 3, "metric": "bacc", "record_wall_time": false}
  })");
  const auto train = load_train_data(cfg.data, cfg.network);
  ASSERT_EQ(train.y.rows(), 1);
  for (Eigen::Index j = 0; j < train.y.cols(); ++j) EXPECT_EQ(std::abs(train.y(0, j)), 1.0);
  EXPECT_EQ((train.y.array() > 0).count(), 4);  // round(0.03653 * 100)
  TempDir dir;
  const auto summary = run_training(cfg, dir.path());
  EXPECT_EQ(summary.iterations, 3u);
  EXPECT_EQ(summary.descent_violations, 0u);

  // Evaluating against one-hot data folds the targets the same way.
  data::SyntheticOptions o = cfg.data.synthetic;
  o.stream = 1;
  data::save_dataset(dir / "test.nnbcd", data::make_synthetic(o));
  const auto report = cmd_eval(dir / "checkpoint.nnbcd", dir / "test.nnbcd");
  EXPECT_EQ(report.samples, 100u);
  ASSERT_TRUE(report.confusion.has_value());
  EXPECT_EQ(report.confusion->tp + report.confusion->fn, 4u);
}

TEST(Train, MemoryBudgetGuard) {
  auto cfg = parse_config(kSyntheticConfig);
  cfg.run.memory_budget_gib = 1e-6;
  EXPECT_EQ(code_of([&] { run_training(cfg, {}); }), ErrorCode::MemoryBudget);
}

TEST(Eval, UsesCompressedWeightsAndChecksFeasibility) {
  TempDir dir;
  auto cfg = parse_config(kSyntheticConfig);
  run_training(cfg, dir.path());
  auto ck = load_checkpoint(dir / "checkpoint.nnbcd");

  data::SyntheticOptions o = cfg.data.synthetic;
  o.samples = 50;
  o.stream = 7;
  auto ds = data::make_synthetic(o);
  const auto report = evaluate(ck, ds);
  EXPECT_EQ(report.samples, 50u);
  const Matrix pred = forward(ck.spec, ck.compressed_weights(), ds.x);
  EXPECT_EQ(report.accuracy, metrics::accuracy(pred, ds.y));

  // A compressed weight that violates its constraint is refused.
  ck.spec.compression[0] = CompressionSpec::l0_constrained(3);
  EXPECT_EQ(code_of([&] { evaluate(ck, ds); }), ErrorCode::InfeasibleCompressedWeight);
}

TEST(Compress, Examples) {
  TempDir dir;
  std::mt19937_64 gen(3);
  auto spec = NetworkSpec::mlp({4, 4});
  spec.validate();
  const Matrix w = oracle::random_matrix(gen, 4, 4);
  const auto st = state_from_weights(spec, std::make_shared<const Matrix>(Matrix::Identity(4, 4)), {w}, {});
  const auto ck = make_checkpoint(spec, {}, st, 0);

  CompressReport r;
  compress_checkpoint(ck, {CompressionSpec::l0_constrained(16)}, &r);
  EXPECT_EQ(r.layer_errors[0], 0.0);
  EXPECT_EQ(r.compression_ratio, 1.0);

  compress_checkpoint(ck, {CompressionSpec::tensor_train({{2, 2}, {2, 2}}, {1, 4, 1})}, &r);
  EXPECT_LE(r.layer_errors[0], 1e-8);

  const auto rank1 = compress_checkpoint(ck, {CompressionSpec::tensor_train({{2, 2}, {2, 2}}, {1, 1, 1})}, &r);
  Matrix unfold(4, 4);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) unfold((i / 2) * 2 + j / 2, (i % 2) * 2 + j % 2) = w(i, j);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(unfold);
  EXPECT_NEAR(r.layer_errors[0], std::sqrt(svd.singularValues().tail(3).squaredNorm()), 1e-10);
  EXPECT_EQ(r.compression_ratio, 8.0 / 16.0);
  EXPECT_NO_THROW(check_feasible(rank1.layers[0].mc, rank1.spec.compression[0]));

  EXPECT_EQ(code_of([&] { compress_checkpoint(ck, {CompressionSpec::l0_constrained(17)}, &r); }), ErrorCode::BetaOutOfRange);
  EXPECT_EQ(code_of([&] { compress_checkpoint(ck, {CompressionSpec::tensor_train({{2, 2}, {2, 2}}, {1, 2, 3})}, &r); }),
            ErrorCode::InvalidRankChain);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code(ErrorCode::ConfigError), 2);
  EXPECT_EQ(exit_code(ErrorCode::MemoryBudget), 2);
  EXPECT_EQ(exit_code(ErrorCode::BadMagic), 3);
  EXPECT_EQ(exit_code(ErrorCode::HashMismatch), 3);
  EXPECT_EQ(exit_code(ErrorCode::NonNumericCell), 3);
  EXPECT_EQ(exit_code(ErrorCode::NumericalFailure), 4);
  EXPECT_EQ(exit_code(ErrorCode::NotPositiveDefinite), 4);
}

// ---- the command-line binary ----

#ifdef NNBCD_CLI

TEST(Cli, TrainEvalCompress) {
  TempDir dir;
  testutil::write_text(dir / "cfg.json", kSyntheticConfig);
  ASSERT_EQ(run_cli("train --config \"" + (dir / "cfg.json").string() + "\" --out \"" + (dir / "run").string() + "\"", dir / "log"), 0)
      << testutil::read_text(dir / "log");
  EXPECT_EQ(count_lines(testutil::read_text(dir / "run" / "metrics.csv")), 13u);
  EXPECT_TRUE(json::parse(testutil::read_text(dir / "log")).contains("final_objective"));

  const std::string ck = "\"" + (dir / "run" / "checkpoint.nnbcd").string() + "\"";
  ASSERT_EQ(run_cli("eval --checkpoint " + ck + " --data \"" + (dir / "cfg.json").string() + "\"", dir / "log"), 0)
      << testutil::read_text(dir / "log");
  const auto report = json::parse(testutil::read_text(dir / "log"));
  EXPECT_EQ(report.at("samples").get<int>(), 100);

  testutil::write_text(dir / "spec.json", R"({"compression": [{"kind": "l0_constrained", "keep_fraction": 0.5}, "none", "none"]})");
  ASSERT_EQ(run_cli("compress --checkpoint " + ck + " --spec \"" + (dir / "spec.json").string() + "\"", dir / "log"), 0)
      << testutil::read_text(dir / "log");
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "checkpoint.compressed.nnbcd"));
  const auto cr = json::parse(testutil::read_text(dir / "log"));
  EXPECT_NEAR(cr.at("compression_ratio").get<double>(), (160.0 + 256 + 64) / (320.0 + 256 + 64), 1e-12);
}

TEST(Cli, GammaZeroIsConfigError) {
  TempDir dir;
  auto cfg = json::parse(kSyntheticConfig);
  cfg["hyperparams"]["gamma"] = 0;
  testutil::write_text(dir / "cfg.json", cfg.dump());
  EXPECT_EQ(run_cli("train --config \"" + (dir / "cfg.json").string() + "\" --out \"" + (dir / "run").string() + "\"", dir / "log"), 2);
  const auto log = testutil::read_text(dir / "log");
  EXPECT_NE(log.find("hyperparams.gamma"), std::string::npos) << log;
  EXPECT_NE(log.find("sufficient decrease"), std::string::npos) << log;
}

TEST(Cli, UsageErrorsAndDataErrors) {
  TempDir dir;
  EXPECT_EQ(run_cli("", dir / "log"), 2);
  EXPECT_EQ(run_cli("train --config", dir / "log"), 2);
  EXPECT_EQ(run_cli("train --config \"" + (dir / "missing.json").string() + "\" --out x", dir / "log"), 2);

  testutil::write_text(dir / "junk.nnbcd", "junk");
  testutil::write_text(dir / "cfg.json", kSyntheticConfig);
  EXPECT_EQ(run_cli("eval --checkpoint \"" + (dir / "junk.nnbcd").string() + "\" --data \"" + (dir / "cfg.json").string() + "\"",
                    dir / "log"),
            3);

  auto cfg = json::parse(kSyntheticConfig);
  cfg["data"] = {{"source", "csv"}, {"train", (dir / "bad.csv").string()}};
  cfg["network"]["layer_dims"] = {2, 4, 2};
  testutil::write_text(dir / "bad.csv", "a,b,label\n1,2,0\n1,zz,1\n");
  testutil::write_text(dir / "csv.json", cfg.dump());
  EXPECT_EQ(run_cli("train --config \"" + (dir / "csv.json").string() + "\" --out \"" + (dir / "run").string() + "\"", dir / "log"), 3);
}

TEST(Cli, EvalHashMismatch) {
  TempDir dir;
  testutil::write_text(dir / "cfg.json", kSyntheticConfig);
  ASSERT_EQ(run_cli("train --config \"" + (dir / "cfg.json").string() + "\" --out \"" + (dir / "run").string() + "\"", dir / "log"), 0);
  auto a = read_archive(dir / "run" / "checkpoint.nnbcd");
  auto meta = json::parse(a.meta_json);
  meta["network"]["layer_dims"][1] = 17;
  a.meta_json = meta.dump();
  write_archive(dir / "tampered.nnbcd", a);
  EXPECT_EQ(run_cli("eval --checkpoint \"" + (dir / "tampered.nnbcd").string() + "\" --data \"" + (dir / "cfg.json").string() + "\"",
                    dir / "log"),
            3);
  EXPECT_NE(testutil::read_text(dir / "log").find("HashMismatch"), std::string::npos);
}

TEST(Cli, ThreadCapIsHonoured) {
  TempDir dir;
  testutil::write_text(dir / "cfg.json", kSyntheticConfig);
  const std::string args = "train --config \"" + (dir / "cfg.json").string() + "\" --out \"" + (dir / "run").string() + "\"";
  EXPECT_EQ(run_cli(args, dir / "log"), 0);
  const auto baseline = testutil::read_text(dir / "run" / "metrics.csv");
  const std::string cmd = std::string("NNBCD_THREADS=1 \"") + NNBCD_CLI + "\" " + args + " > /dev/null 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system(cmd.c_str())), 0);
  EXPECT_EQ(testutil::read_text(dir / "run" / "metrics.csv"), baseline);
  const std::string bad = std::string("NNBCD_THREADS=abc \"") + NNBCD_CLI + "\" " + args + " > /dev/null 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system(bad.c_str())), 2);
}

#endif  // NNBCD_CLI
