#pragma once

#include "rhb/beam_training.hpp"
#include "rhb/codebook.hpp"
#include "rhb/csi_opt.hpp"
#include "rhb/hybrid.hpp"
#include "rhb/neural.hpp"
#include "rhb/scenario.hpp"
#include "rhb/types.hpp"

#include <string>
#include <vector>

namespace rhb {

struct TrainSettings {
  int n_fc = 7;
  int hidden_width = 512;
  nn::TrainHyper analog_hp{1e-3, 0.99, 256, 60, 10, 1e-6, 0.1, 1};
  nn::TrainHyper delta_hp{1e-3, 0.985, 256, 200, 200, 1e-6, 0.1, 1};
};

struct ExperimentConfig {
  SystemConfig sys;
  GeometryParams geo;
  int n_samples = 20000;
  double train_frac = 0.85;
  TrainSettings train;
  std::vector<int> sweep_k = {8, 12, 16};
  std::vector<int> sweep_nb = {0, 12, 6};
  int sweep_samples = 6000;  // reduced dataset for sweep points
  std::string out_dir = "out";

  void validate() const;
};

ExperimentConfig load_config(const std::string& path);
void save_config(const std::string& path, const ExperimentConfig& cfg);

struct ResultRow {
  std::string method;
  double mean_rate = 0.0;
  double ratio = 0.0;  // vs optimal HB on identical test samples
  double nmse = 0.0;
  double accuracy = 0.0;
  int k_ss = 0;
  int n_bits = 0;
  int n_samples = 0;
};

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::string& path);

/// Pipeline stages; each reads/writes files under cfg.out_dir and can be run
/// independently (gen -> labels -> train -> eval).
void stage_gen(const ExperimentConfig& cfg);
void stage_labels(const ExperimentConfig& cfg);
void stage_train(const ExperimentConfig& cfg);
std::vector<ResultRow> stage_eval(const ExperimentConfig& cfg);

/// Full pipeline: gen, labels, train, eval, manifest.
std::vector<ResultRow> run_pipeline(const ExperimentConfig& cfg);

enum class SweepAxis { kSsBursts, kQuantBits };

/// One pipeline per sweep value at reduced dataset size, shared seed.
/// Results land in <out_dir>/sweep_<axis>/<value>/ plus a combined curve CSV.
std::vector<ResultRow> sweep(const ExperimentConfig& cfg, SweepAxis axis);

/// Pretty-print a results table to stdout.
void print_results(const std::vector<ResultRow>& rows);

std::uint64_t fnv1a_file(const std::string& path);

}  // namespace rhb
