#include "rhb/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

rhb::ExperimentConfig resolve_config(const std::string& config_path, int samples, int seed,
                                     int k_ss, int n_bits, const std::string& out_dir) {
  rhb::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = rhb::load_config(config_path);
  if (samples > 0) cfg.n_samples = samples;
  if (seed >= 0) cfg.sys.rng_seed = static_cast<std::uint64_t>(seed);
  if (k_ss > 0) cfg.sys.k_ss = k_ss;
  if (n_bits >= 0) cfg.sys.n_bits = n_bits;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RSSI-based hybrid beamforming experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int samples = -1;
  int seed = -1;
  int k_ss = -1;
  int n_bits = -1;
  app.add_option("-c,--config", config_path, "experiment config JSON (defaults if omitted)");
  app.add_option("-o,--out", out_dir, "output directory override");
  app.add_option("-n,--samples", samples, "dataset size override");
  app.add_option("-s,--seed", seed, "RNG seed override");
  app.add_option("-k,--k-ss", k_ss, "SS burst count override");
  app.add_option("-b,--n-bits", n_bits, "RSSI quantizer bits override (0 = full precision)");

  auto* c_gen = app.add_subcommand("gen", "generate channels, SS matrix and RSSI feedback");
  auto* c_labels = app.add_subcommand("labels", "solve FDP and hybrid factorization labels");
  auto* c_train = app.add_subcommand("train", "train the analog and delta networks");
  auto* c_eval = app.add_subcommand("eval", "evaluate all methods on the test split");
  auto* c_sweep = app.add_subcommand("sweep", "run a parameter sweep (full pipeline per point)");
  auto* c_report = app.add_subcommand("report", "print a results CSV as a table");

  std::string axis = "k";
  c_sweep->add_option("--axis", axis, "sweep axis: k (SS bursts) or nb (quantizer bits)")
      ->check(CLI::IsMember({"k", "nb"}));

  std::vector<std::string> report_files;
  c_report->add_option("files", report_files, "results CSV files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_report->parsed()) {
      for (const auto& f : report_files) {
        std::cout << f << ":\n";
        rhb::print_results(rhb::read_results_csv(f));
      }
      return 0;
    }
    const auto cfg = resolve_config(config_path, samples, seed, k_ss, n_bits, out_dir);
    if (c_gen->parsed()) {
      rhb::stage_gen(cfg);
    } else if (c_labels->parsed()) {
      rhb::stage_labels(cfg);
    } else if (c_train->parsed()) {
      rhb::stage_train(cfg);
    } else if (c_eval->parsed()) {
      rhb::print_results(rhb::stage_eval(cfg));
    } else if (c_sweep->parsed()) {
      const auto ax = axis == "k" ? rhb::SweepAxis::kSsBursts : rhb::SweepAxis::kQuantBits;
      rhb::print_results(rhb::sweep(cfg, ax));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
