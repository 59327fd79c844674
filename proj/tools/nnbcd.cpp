#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "nnbcd/log.hpp"
#include "nnbcd/trainer.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Compressed network training by block coordinate descent"};
  app.require_subcommand(1);

  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  fs::path config, out_dir;
  auto* train = app.add_subcommand("train", "Run full-batch training from a JSON config");
  train->add_option("--config", config, "Config file")->required();
  train->add_option("--out", out_dir, "Output directory")->required();

  fs::path checkpoint, data;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint's compressed weights");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", data, "Dataset archive, CSV, IDX directory or config")->required();

  fs::path spec, compressed_out;
  auto* compress = app.add_subcommand("compress", "Project a checkpoint's weights onto a new compression spec");
  compress->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  compress->add_option("--spec", spec, "Compression spec (JSON)")->required();
  compress->add_option("--out", compressed_out, "Output checkpoint (default <stem>.compressed.nnbcd)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    nnbcd::set_log_level(verbose ? nnbcd::LogLevel::Info : nnbcd::LogLevel::Warning);
    nnbcd::configure_threads();

    if (*train) {
      const auto cfg = nnbcd::load_config(config);
      const auto summary = nnbcd::run_training(cfg, out_dir, [&](const auto& r, const auto&) {
        if (verbose)
          std::clog << "k=" << r.k << " L=" << r.objective.total << " step=" << r.step_norm_sq
                    << " train=" << r.train_metric << '\n';
      });
      std::cout << summary.to_json() << '\n';
    } else if (*eval) {
      std::cout << nnbcd::cmd_eval(checkpoint, data).to_json() << '\n';
    } else if (*compress) {
      std::cout << nnbcd::cmd_compress(checkpoint, spec, compressed_out).to_json() << '\n';
    }
  } catch (const nnbcd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nnbcd::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
