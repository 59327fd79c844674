#include "nnbcd/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nnbcd/bcd.hpp"
#include "nnbcd/log.hpp"

namespace nnbcd {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text << '\n';
}

Matrix predict(const NetworkSpec& spec, const std::vector<Matrix>& weights, const std::vector<Vector>& biases,
               const Matrix& x) {
  return forward(spec, weights, x, spec.use_bias ? std::span<const Vector>(biases) : std::span<const Vector>());
}

}  // namespace

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic:
    case ErrorCode::TruncatedFile:
    case ErrorCode::CountMismatch:
    case ErrorCode::RaggedRows:
    case ErrorCode::NonNumericCell:
    case ErrorCode::HashMismatch:
    case ErrorCode::IoError:
      return 3;
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::NumericalFailure:
    case ErrorCode::InfeasibleCompressedWeight:
      return 4;
    default:
      return 2;
  }
}

int configure_threads() {
  if (const char* env = std::getenv("NNBCD_THREADS"); env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1 || n > 4096)
      throw Error(ErrorCode::ConfigError, std::string("NNBCD_THREADS must be a positive integer, got '") + env + "'");
    Eigen::setNbThreads(static_cast<int>(n));
#ifdef _OPENMP
    omp_set_num_threads(static_cast<int>(n));
#endif
  }
  return Eigen::nbThreads();
}

std::string TrainSummary::to_json() const {
  json j;
  j["iterations"] = iterations;
  j["initial_objective"] = number_or_null(initial_objective);
  j["final_objective"] = number_or_null(final_objective);
  j["metric"] = std::string(metrics::to_string(metric));
  j["train_metric"] = number_or_null(train_metric);
  j["test_metric"] = test_metric ? number_or_null(*test_metric) : json(nullptr);
  j["compression_ratio"] = compression_ratio;
  j["sparsity"] = sparsity;
  j["descent_violations"] = descent_violations;
  j["lambda"] = lambda;
  j["cum_step_norm_sq"] = number_or_null(cum_step_sq);
  j["final_stationarity_estimate"] = number_or_null(final_stationarity);
  j["wall_time_s"] = wall_time;
  return j.dump(2);
}

TrainSummary run_training(const TrainConfig& cfg, const std::filesystem::path& out_dir, const IterationObserver& observer) {
  const auto started = Clock::now();
  const NetworkSpec& spec = cfg.network;
  const Hyperparams& hp = cfg.hyperparams;

  auto train = load_train_data(cfg.data, spec);
  const auto test = load_test_data(cfg.data, spec);

  const double needed = static_cast<double>(bcd::estimate_memory_bytes(spec, train.samples()));
  const double budget = cfg.run.memory_budget_gib * 1024.0 * 1024.0 * 1024.0;
  if (needed > budget)
    throw Error(ErrorCode::MemoryBudget, "run.memory_budget_gib: estimated " + std::to_string(needed / (1 << 30)) +
                                             " GiB exceeds the budget; reduce the sample count or widths");

  auto x = std::make_shared<const Matrix>(std::move(train.x));
  auto y = std::make_shared<const Matrix>(std::move(train.y));
  bcd::Engine engine(spec, hp, x, y);
  BlockState state = init_state(spec, x, cfg.run.seed, cfg.run.init, hp);

  std::optional<metrics::CsvWriter> csv;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    csv.emplace(out_dir / "metrics.csv");
  }

  TrainSummary summary;
  summary.metric = cfg.run.metric;
  summary.lambda = descent_lambda(hp);
  double prev_objective = objective(spec, state, *y, hp).total;
  if (!std::isfinite(prev_objective)) throw Error(ErrorCode::NumericalFailure, "initial objective is not finite");
  summary.initial_objective = prev_objective;

  const auto scores = [&](const BlockState& s, diagnostics::IterationRecord& r) {
    const auto w = s.compressed_weights();
    const auto b = s.biases();
    r.train_metric = metrics::score(cfg.run.metric, predict(spec, w, b, *x), *y);
    r.test_metric = test ? metrics::score(cfg.run.metric, predict(spec, w, b, test->x), test->y)
                         : std::numeric_limits<double>::quiet_NaN();
  };

  for (std::size_t k = 1; k <= cfg.run.iterations; ++k) {
    const auto sweep_start = Clock::now();
    const BlockState prev = state;
    engine.sweep(state);

    diagnostics::IterationRecord r;
    r.k = k;
    r.objective = objective(spec, state, *y, hp);
    if (!std::isfinite(r.objective.total))
      throw Error(ErrorCode::NumericalFailure, "objective became non-finite at iteration " + std::to_string(k));
    r.step_norm_sq = diagnostics::step_norm_sq(prev, state);
    const auto check = diagnostics::check_descent(prev_objective, r.objective.total, r.step_norm_sq, summary.lambda,
                                                  cfg.run.descent_tolerance);
    r.descent_ok = check.ok;
    r.descent_slack = check.slack;
    r.lambda_used = summary.lambda;
    scores(state, r);
    r.wall_time = cfg.run.record_wall_time ? std::chrono::duration<double>(Clock::now() - sweep_start).count() : 0.0;

    if (!check.ok) {
      ++summary.descent_violations;
      log_warning("iteration " + std::to_string(k) + ": sufficient decrease violated by " + std::to_string(-check.slack));
    }
    summary.cum_step_sq += r.step_norm_sq;
    if (k == cfg.run.iterations) summary.final_stationarity = diagnostics::stationarity_estimate(spec, prev, state, hp);
    prev_objective = r.objective.total;
    if (csv) csv->write(r);
    if (observer) observer(r, state);
    summary.records.push_back(r);
  }

  summary.iterations = cfg.run.iterations;
  summary.final_objective = prev_objective;
  if (summary.records.empty()) {
    diagnostics::IterationRecord r;
    scores(state, r);
    summary.train_metric = r.train_metric;
    if (test) summary.test_metric = r.test_metric;
  } else {
    summary.train_metric = summary.records.back().train_metric;
    if (test) summary.test_metric = summary.records.back().test_metric;
  }
  const auto shapes = spec.weight_shapes();
  summary.compression_ratio = compression_ratio(spec.compression, shapes);
  const auto compressed = state.compressed_weights();
  summary.sparsity = sparsity(compressed);
  summary.wall_time = std::chrono::duration<double>(Clock::now() - started).count();

  if (!out_dir.empty()) {
    save_checkpoint(out_dir / "checkpoint.nnbcd", make_checkpoint(spec, hp, state, cfg.run.iterations));
    write_text(out_dir / "summary.json", summary.to_json());
  }
  return summary;
}

std::string EvalReport::to_json() const {
  json j;
  j["samples"] = samples;
  j["accuracy"] = accuracy;
  j["bacc"] = bacc ? json(*bacc) : json(nullptr);
  if (confusion) j["confusion"] = {{"tp", confusion->tp}, {"fn", confusion->fn}, {"tn", confusion->tn}, {"fp", confusion->fp}};
  return j.dump(2);
}

EvalReport evaluate(const Checkpoint& ck, const data::Dataset& ds) {
  for (std::size_t i = 0; i < ck.layers.size(); ++i) check_feasible(ck.layers[i].mc, ck.spec.compression[i]);
  if (ds.features() != ck.spec.layer_dims.front() || ds.outputs() != ck.spec.layer_dims.back())
    throw Error(ErrorCode::CountMismatch, "dataset shape (" + std::to_string(ds.features()) + " features, " +
                                              std::to_string(ds.outputs()) + " targets) does not match the checkpoint");
  const Matrix pred = predict(ck.spec, ck.compressed_weights(), ck.biases(), ds.x);
  EvalReport r;
  r.samples = ds.samples();
  r.accuracy = metrics::accuracy(pred, ds.y);
  if (ds.outputs() <= 2) {
    r.confusion = metrics::binary_confusion(pred, ds.y);
    r.bacc = metrics::balanced_accuracy(*r.confusion);
  }
  return r;
}

EvalReport cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data_path) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  data::Dataset ds;
  if (std::filesystem::is_directory(data_path)) {
    ds = data::load_idx(data_path / "t10k-images-idx3-ubyte", data_path / "t10k-labels-idx1-ubyte",
                        ck.spec.layer_dims.back());
  } else if (data_path.extension() == ".json") {
    const TrainConfig cfg = load_config(data_path);
    auto test = load_test_data(cfg.data, ck.spec);
    ds = test ? std::move(*test) : load_train_data(cfg.data, ck.spec);
  } else if (data_path.extension() == ".csv") {
    data::CsvOptions opts;
    opts.one_hot = ck.spec.layer_dims.back() > 1;
    ds = data::load_csv(data_path, opts);
  } else {
    ds = data::load_dataset(data_path);
  }
  if (ck.spec.layer_dims.back() == 1 && ds.y.rows() == 2 && ds.is_one_hot()) {
    Matrix pm = 2.0 * ds.y.row(1) - Matrix::Ones(1, ds.y.cols());
    ds.y = std::move(pm);
  }
  return evaluate(ck, ds);
}

std::string CompressReport::to_json() const {
  json j;
  j["layer_errors"] = layer_errors;
  j["compression_ratio"] = compression_ratio;
  j["sparsity"] = sparsity;
  if (!output.empty()) j["output"] = output.string();
  return j.dump(2);
}

Checkpoint compress_checkpoint(const Checkpoint& ck, const std::vector<CompressionSpec>& specs, CompressReport* report) {
  if (specs.size() != ck.layers.size())
    throw Error(ErrorCode::ConfigError, "compression needs one entry per layer (" + std::to_string(ck.layers.size()) + ")");
  Checkpoint out = ck;
  out.spec.compression = specs;
  out.spec.validate();
  CompressReport r;
  for (std::size_t i = 0; i < out.layers.size(); ++i) {
    auto& layer = out.layers[i];
    layer.mc = project_mc(layer.w, out.spec.compression[i], out.hp.tau, out.hp.lambda_reg);
    r.layer_errors.push_back((layer.w - layer.mc.dense).norm());
  }
  const auto shapes = out.spec.weight_shapes();
  r.compression_ratio = compression_ratio(out.spec.compression, shapes);
  const auto compressed = out.compressed_weights();
  r.sparsity = sparsity(compressed);
  if (report) *report = std::move(r);
  return out;
}

CompressReport cmd_compress(const std::filesystem::path& checkpoint, const std::filesystem::path& spec_path,
                            const std::filesystem::path& out) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  std::ifstream in(spec_path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open compression spec " + spec_path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const auto specs = parse_compression(text, ck.spec);

  CompressReport report;
  const Checkpoint result = compress_checkpoint(ck, specs, &report);
  report.output = out.empty() ? checkpoint.parent_path() / (checkpoint.stem().string() + ".compressed.nnbcd") : out;
  save_checkpoint(report.output, result);
  return report;
}

}  // namespace nnbcd
