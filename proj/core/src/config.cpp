#include "nnbcd/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace nnbcd {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigError, key + ": " + what);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& section) {
  if (!obj.is_object()) fail(section, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      fail(section + "." + key, "unknown key");
  }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& section) {
  const std::string path = section + "." + key;
  if (!obj.contains(key)) fail(path, "missing required key");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(path, "has the wrong type");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& section) {
  return obj.contains(key) ? get<T>(obj, key, section) : fallback;
}

double get_number(const json& obj, const char* key, double fallback, const std::string& section) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(section + "." + key, "must be a number");
  return v.get<double>();
}

std::size_t get_count(const json& obj, const char* key, std::size_t fallback, const std::string& section) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned()) fail(section + "." + key, "must be a non-negative integer");
  return v.get<std::size_t>();
}

std::vector<std::size_t> get_counts(const json& obj, const char* key, const std::string& section) {
  const std::string path = section + "." + key;
  if (!obj.contains(key)) fail(path, "missing required key");
  const auto& v = obj.at(key);
  if (!v.is_array()) fail(path, "must be a list of non-negative integers");
  std::vector<std::size_t> out;
  for (const auto& e : v) {
    if (!e.is_number_unsigned()) fail(path, "must be a list of non-negative integers");
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

Activation parse_activation(const json& v, const std::string& path) {
  std::string kind;
  double slope = 0.01;
  if (v.is_string()) {
    kind = v.get<std::string>();
  } else if (v.is_object()) {
    check_keys(v, {"kind", "slope"}, path);
    kind = get<std::string>(v, "kind", path);
    slope = get_number(v, "slope", slope, path);
  } else {
    fail(path, "expected a string or {kind, slope}");
  }
  if (kind == "relu") return Activation::relu();
  if (kind == "leaky_relu") return Activation::leaky_relu(slope);
  if (kind == "identity") return Activation::identity();
  fail(path, "unknown activation '" + kind + "' (relu, leaky_relu, identity)");
}

json activation_to_json(const Activation& a) {
  json j{{"kind", std::string(to_string(a.kind))}};
  if (a.kind == ActivationKind::LeakyRelu) j["slope"] = a.slope;
  return j;
}

CompressionSpec parse_one_compression(const json& v, std::size_t rows, std::size_t cols, const std::string& path) {
  if (v.is_string()) return parse_one_compression(json{{"kind", v}}, rows, cols, path);
  check_keys(v, {"kind", "row_factors", "col_factors", "ranks", "beta", "keep_fraction", "sparsity", "descent_guard"}, path);
  const auto kind = get<std::string>(v, "kind", path);
  CompressionSpec spec;
  if (kind == "none") {
    spec = CompressionSpec::none();
  } else if (kind == "tt") {
    tt::Tensorization t{get_counts(v, "row_factors", path), get_counts(v, "col_factors", path)};
    spec = CompressionSpec::tensor_train(std::move(t), get_counts(v, "ranks", path));
    spec.descent_guard = get_or<bool>(v, "descent_guard", true, path);
  } else if (kind == "l0_constrained") {
    const int given = int(v.contains("beta")) + int(v.contains("keep_fraction")) + int(v.contains("sparsity"));
    if (given != 1) fail(path, "l0_constrained needs exactly one of beta, keep_fraction, sparsity");
    std::size_t beta = 0;
    if (v.contains("beta")) {
      beta = get_count(v, "beta", 0, path);
    } else {
      const double keep = v.contains("keep_fraction") ? get_number(v, "keep_fraction", 0.0, path)
                                                      : 1.0 - get_number(v, "sparsity", 0.0, path);
      if (!(keep > 0.0 && keep <= 1.0)) fail(path, "kept fraction must lie in (0, 1]");
      beta = beta_for_keep_fraction(keep, rows * cols);
    }
    spec = CompressionSpec::l0_constrained(beta);
  } else if (kind == "l0_reg") {
    spec = CompressionSpec::l0_reg();
  } else if (kind == "l1_reg") {
    spec = CompressionSpec::l1_reg();
  } else {
    fail(path + ".kind", "unknown compression '" + kind + "' (none, tt, l0_constrained, l0_reg, l1_reg)");
  }
  return spec;
}

std::vector<CompressionSpec> parse_compression_json(const json& v, const NetworkSpec& network, const std::string& section) {
  const std::size_t n = network.num_layers();
  std::vector<CompressionSpec> out;
  if (v.is_array()) {
    if (v.size() != n) fail(section, "needs one entry per layer (" + std::to_string(n) + "), got " + std::to_string(v.size()));
    for (std::size_t i = 0; i < n; ++i)
      out.push_back(parse_one_compression(v[i], network.rows(i), network.cols(i), section + "[" + std::to_string(i) + "]"));
  } else if (v.is_object() || v.is_string()) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(parse_one_compression(v, network.rows(i), network.cols(i), section));
  } else {
    fail(section, "expected a list with one entry per layer or a single entry for all layers");
  }
  return out;
}

json compression_to_json(const CompressionSpec& s) {
  json j{{"kind", std::string(to_string(s.kind))}};
  if (s.kind == CompressionKind::TT) {
    j["row_factors"] = s.tensorization.row_factors;
    j["col_factors"] = s.tensorization.col_factors;
    j["ranks"] = s.ranks;
    j["descent_guard"] = s.descent_guard;
  } else if (s.kind == CompressionKind::L0Constrained) {
    j["beta"] = s.beta;
  }
  return j;
}

NetworkSpec parse_network(const json& v, const std::string& section) {
  check_keys(v, {"layer_dims", "activation", "activations", "loss", "use_bias", "compression"}, section);
  NetworkSpec spec;
  spec.layer_dims = get_counts(v, "layer_dims", section);
  if (spec.layer_dims.size() < 2) fail(section + ".layer_dims", "needs at least two entries");
  const std::size_t n = spec.layer_dims.size() - 1;

  if (v.contains("activations")) {
    const auto& acts = v.at("activations");
    if (!acts.is_array()) fail(section + ".activations", "must be a list");
    for (std::size_t i = 0; i < acts.size(); ++i)
      spec.activations.push_back(parse_activation(acts[i], section + ".activations[" + std::to_string(i) + "]"));
  } else {
    const Activation hidden = v.contains("activation") ? parse_activation(v.at("activation"), section + ".activation")
                                                       : Activation::relu();
    spec.activations.assign(n - 1, hidden);
    spec.activations.push_back(Activation::identity());
  }

  const auto loss = get_or<std::string>(v, "loss", "squared", section);
  if (loss == "squared") spec.loss = LossKind::Squared;
  else if (loss == "hinge") spec.loss = LossKind::Hinge;
  else fail(section + ".loss", "unknown loss '" + loss + "' (squared, hinge)");
  spec.use_bias = get_or<bool>(v, "use_bias", false, section);
  if (v.contains("compression")) spec.compression = parse_compression_json(v.at("compression"), spec, section + ".compression");
  return spec;
}

Hyperparams parse_hyperparams(const json& v, const std::string& section) {
  check_keys(v, {"gamma", "rho", "tau", "alpha", "lambda_reg"}, section);
  Hyperparams hp;
  hp.gamma = get_number(v, "gamma", hp.gamma, section);
  hp.rho = get_number(v, "rho", hp.rho, section);
  hp.tau = get_number(v, "tau", hp.tau, section);
  hp.alpha = get_number(v, "alpha", hp.alpha, section);
  hp.lambda_reg = get_number(v, "lambda_reg", hp.lambda_reg, section);
  return hp;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

DataConfig parse_data(const json& v, const std::filesystem::path& base) {
  const std::string section = "data";
  if (!v.is_object()) fail(section, "expected an object");
  DataConfig cfg;
  const auto source = get<std::string>(v, "source", section);

  if (source == "synthetic") {
    check_keys(v, {"source", "kind", "samples", "test_samples", "features", "outputs", "hidden", "noise", "separation",
                   "positive_fraction", "informative", "seed"},
               section);
    cfg.source = DataConfig::Source::Synthetic;
    auto& s = cfg.synthetic;
    const auto kind = get<std::string>(v, "kind", section);
    if (kind == "teacher-net") s.kind = data::SyntheticKind::TeacherNet;
    else if (kind == "gaussian-blobs") s.kind = data::SyntheticKind::GaussianBlobs;
    else if (kind == "imbalanced-binary") s.kind = data::SyntheticKind::ImbalancedBinary;
    else fail(section + ".kind", "unknown synthetic kind '" + kind + "' (teacher-net, gaussian-blobs, imbalanced-binary)");
    s.samples = get_count(v, "samples", s.samples, section);
    s.features = get_count(v, "features", s.features, section);
    s.outputs = get_count(v, "outputs", s.outputs, section);
    if (v.contains("hidden")) s.hidden = get_counts(v, "hidden", section);
    s.noise = get_number(v, "noise", s.noise, section);
    s.separation = get_number(v, "separation", s.separation, section);
    s.positive_fraction = get_number(v, "positive_fraction", s.positive_fraction, section);
    s.informative = get_count(v, "informative", s.informative, section);
    s.seed = get_count(v, "seed", s.seed, section);
    cfg.test_samples = get_count(v, "test_samples", 0, section);
    if (s.samples == 0) fail(section + ".samples", "must be > 0");
    if (s.kind == data::SyntheticKind::ImbalancedBinary) s.outputs = 2;
  } else if (source == "idx") {
    check_keys(v, {"source", "dir", "train_images", "train_labels", "test_images", "test_labels", "train_limit",
                   "test_limit", "num_classes"},
               section);
    cfg.source = DataConfig::Source::Idx;
    std::filesystem::path dir;
    if (v.contains("dir")) {
      dir = resolve(base, get<std::string>(v, "dir", section));
    } else if (const char* env = std::getenv("NNBCD_MNIST_DIR")) {
      dir = env;
    }
    const auto file = [&](const char* key, const char* fallback) {
      if (v.contains(key)) return resolve(base, get<std::string>(v, key, section));
      if (dir.empty()) fail(section + "." + key, "missing (set data.dir or NNBCD_MNIST_DIR)");
      return dir / fallback;
    };
    cfg.train_images = file("train_images", "train-images-idx3-ubyte");
    cfg.train_labels = file("train_labels", "train-labels-idx1-ubyte");
    cfg.test_images = file("test_images", "t10k-images-idx3-ubyte");
    cfg.test_labels = file("test_labels", "t10k-labels-idx1-ubyte");
    if (v.contains("train_limit")) cfg.train_limit = get_count(v, "train_limit", 0, section);
    if (v.contains("test_limit")) cfg.test_limit = get_count(v, "test_limit", 0, section);
    cfg.num_classes = get_count(v, "num_classes", 10, section);
  } else if (source == "csv") {
    check_keys(v, {"source", "train", "test", "label_column", "label_index", "one_hot", "standardize"}, section);
    cfg.source = DataConfig::Source::Csv;
    cfg.train_csv = resolve(base, get<std::string>(v, "train", section));
    if (v.contains("test")) cfg.test_csv = resolve(base, get<std::string>(v, "test", section));
    cfg.csv.label_column = get_or<std::string>(v, "label_column", "label", section);
    if (v.contains("label_index")) cfg.csv.label_index = get_count(v, "label_index", 0, section);
    cfg.csv.one_hot = get_or<bool>(v, "one_hot", true, section);
    cfg.csv.standardize = get_or<bool>(v, "standardize", true, section);
  } else if (source == "archive") {
    check_keys(v, {"source", "train", "test"}, section);
    cfg.source = DataConfig::Source::Archive;
    cfg.train_archive = resolve(base, get<std::string>(v, "train", section));
    if (v.contains("test")) cfg.test_archive = resolve(base, get<std::string>(v, "test", section));
  } else {
    fail(section + ".source", "unknown source '" + source + "' (synthetic, idx, csv, archive)");
  }
  return cfg;
}

RunConfig parse_run(const json& v) {
  const std::string section = "run";
  check_keys(v, {"iterations", "seed", "init", "init_std", "metric", "record_wall_time", "memory_budget_gib",
                 "descent_tolerance"},
             section);
  RunConfig run;
  run.iterations = get_count(v, "iterations", run.iterations, section);
  run.seed = get_count(v, "seed", run.seed, section);
  const auto init = get_or<std::string>(v, "init", "gaussian", section);
  if (init == "gaussian") run.init.kind = InitKind::Gaussian;
  else if (init == "zero") run.init.kind = InitKind::Zero;
  else fail(section + ".init", "unknown init '" + init + "' (gaussian, zero)");
  run.init.std = get_number(v, "init_std", run.init.std, section);
  if (!(run.init.std >= 0.0)) fail(section + ".init_std", "must be >= 0");
  const auto metric = get_or<std::string>(v, "metric", "accuracy", section);
  if (metric == "accuracy") run.metric = MetricKind::Accuracy;
  else if (metric == "bacc") run.metric = MetricKind::Bacc;
  else fail(section + ".metric", "unknown metric '" + metric + "' (accuracy, bacc)");
  run.record_wall_time = get_or<bool>(v, "record_wall_time", true, section);
  run.memory_budget_gib = get_number(v, "memory_budget_gib", run.memory_budget_gib, section);
  if (!(run.memory_budget_gib > 0.0)) fail(section + ".memory_budget_gib", "must be > 0");
  run.descent_tolerance = get_number(v, "descent_tolerance", run.descent_tolerance, section);
  if (!(run.descent_tolerance >= 0.0)) fail(section + ".descent_tolerance", "must be >= 0");
  return run;
}

json parse_text(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string(what) + ": invalid JSON: " + e.what());
  }
}

// Hinge networks take +-1 targets; two-class one-hot data is folded onto the positive row.
void adapt_targets(data::Dataset& ds, const NetworkSpec& spec) {
  if (spec.layer_dims.back() == 1 && ds.y.rows() == 2 && ds.is_one_hot()) {
    Matrix pm = 2.0 * ds.y.row(1) - Matrix::Ones(1, ds.y.cols());
    ds.y = std::move(pm);
  }
  if (ds.features() != spec.layer_dims.front())
    throw Error(ErrorCode::ConfigError, "network.layer_dims[0]=" + std::to_string(spec.layer_dims.front()) +
                                            " but the data has " + std::to_string(ds.features()) + " features");
  if (ds.outputs() != spec.layer_dims.back())
    throw Error(ErrorCode::ConfigError, "network.layer_dims[-1]=" + std::to_string(spec.layer_dims.back()) +
                                            " but the data has " + std::to_string(ds.outputs()) + " target rows");
}

}  // namespace

TrainConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  const json root = parse_text(json_text, "config");
  check_keys(root, {"network", "hyperparams", "compression", "data", "run"}, "config");
  if (!root.contains("network")) fail("network", "missing required section");
  if (!root.contains("data")) fail("data", "missing required section");

  TrainConfig cfg;
  cfg.network = parse_network(root.at("network"), "network");
  if (root.contains("compression")) {
    if (!cfg.network.compression.empty()) fail("compression", "given both here and in network.compression");
    cfg.network.compression = parse_compression_json(root.at("compression"), cfg.network, "compression");
  }
  if (root.contains("hyperparams")) cfg.hyperparams = parse_hyperparams(root.at("hyperparams"), "hyperparams");
  // Regularized compression kinds default to a unit weight.
  const bool regularized = std::any_of(cfg.network.compression.begin(), cfg.network.compression.end(), [](const auto& c) {
    return c.kind == CompressionKind::L0Reg || c.kind == CompressionKind::L1Reg;
  });
  if (regularized && !(root.contains("hyperparams") && root.at("hyperparams").contains("lambda_reg")))
    cfg.hyperparams.lambda_reg = 1.0;
  cfg.data = parse_data(root.at("data"), base_dir);
  if (root.contains("run")) cfg.run = parse_run(root.at("run"));

  cfg.hyperparams.validate();
  cfg.network.validate();
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

std::vector<CompressionSpec> parse_compression(std::string_view json_text, const NetworkSpec& network) {
  const json root = parse_text(json_text, "compression spec");
  const json& section = root.is_object() && root.contains("compression") ? root.at("compression") : root;
  auto specs = parse_compression_json(section, network, "compression");
  for (std::size_t i = 0; i < specs.size(); ++i) specs[i].validate_for(network.rows(i), network.cols(i));
  return specs;
}

std::string network_to_json(const NetworkSpec& spec) {
  json j;
  j["layer_dims"] = spec.layer_dims;
  j["activations"] = json::array();
  for (const auto& a : spec.activations) j["activations"].push_back(activation_to_json(a));
  j["loss"] = std::string(to_string(spec.loss));
  j["use_bias"] = spec.use_bias;
  j["compression"] = json::array();
  for (const auto& c : spec.compression) j["compression"].push_back(compression_to_json(c));
  return j.dump();
}

NetworkSpec network_from_json(std::string_view json_text) {
  NetworkSpec spec = parse_network(parse_text(json_text, "network"), "network");
  spec.validate();
  return spec;
}

std::string hyperparams_to_json(const Hyperparams& hp) {
  return json{{"gamma", hp.gamma}, {"rho", hp.rho}, {"tau", hp.tau}, {"alpha", hp.alpha}, {"lambda_reg", hp.lambda_reg}}
      .dump();
}

Hyperparams hyperparams_from_json(std::string_view json_text) {
  return parse_hyperparams(parse_text(json_text, "hyperparams"), "hyperparams");
}

data::Dataset load_train_data(const DataConfig& cfg, const NetworkSpec& spec) {
  data::Dataset ds;
  switch (cfg.source) {
    case DataConfig::Source::Synthetic: ds = data::make_synthetic(cfg.synthetic); break;
    case DataConfig::Source::Idx:
      ds = data::load_idx(cfg.train_images, cfg.train_labels, cfg.num_classes, cfg.train_limit);
      break;
    case DataConfig::Source::Csv: ds = data::load_csv(cfg.train_csv, cfg.csv); break;
    case DataConfig::Source::Archive: ds = data::load_dataset(cfg.train_archive); break;
  }
  ds.split = data::Split::Train;
  ds.validate();
  adapt_targets(ds, spec);
  return ds;
}

std::optional<data::Dataset> load_test_data(const DataConfig& cfg, const NetworkSpec& spec) {
  data::Dataset ds;
  switch (cfg.source) {
    case DataConfig::Source::Synthetic: {
      if (cfg.test_samples == 0) return std::nullopt;
      auto opts = cfg.synthetic;
      opts.samples = cfg.test_samples;
      opts.stream = cfg.synthetic.stream + 1;
      ds = data::make_synthetic(opts);
      break;
    }
    case DataConfig::Source::Idx:
      ds = data::load_idx(cfg.test_images, cfg.test_labels, cfg.num_classes, cfg.test_limit);
      break;
    case DataConfig::Source::Csv: {
      if (cfg.test_csv.empty()) return std::nullopt;
      auto opts = cfg.csv;
      if (opts.standardize) {
        data::FeatureStats stats;
        const auto train = data::load_csv(cfg.train_csv, cfg.csv, &stats);
        opts.stats = stats;
        opts.class_names = train.class_names;
      }
      ds = data::load_csv(cfg.test_csv, opts);
      break;
    }
    case DataConfig::Source::Archive:
      if (cfg.test_archive.empty()) return std::nullopt;
      ds = data::load_dataset(cfg.test_archive);
      break;
  }
  ds.split = data::Split::Test;
  ds.validate();
  adapt_targets(ds, spec);
  return ds;
}

}  // namespace nnbcd
