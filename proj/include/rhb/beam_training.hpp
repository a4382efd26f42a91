#pragma once

#include "rhb/codebook.hpp"
#include "rhb/types.hpp"

#include <random>
#include <vector>

namespace rhb {

/// Quantized (or full-precision) normalized RSSI feedback for one sample.
struct RssiFeedback {
  MatR alpha;  // K x M, entries in [0, 1]
  bool quantized = false;
  int n_bits = 0;
};

struct RssiScale {
  double beta = 1.0;
};

/// Raw per-burst received powers |h_m^H a_SS^(k) + eta|^2 with fresh complex
/// Gaussian noise of variance noise_power. Entry (k, m).
MatR measure_rssi(const ChannelSet& ch, const SSMatrix& ss, double noise_power,
                  std::mt19937_64& rng);

/// beta = max raw value over the calibration (training) split.
RssiScale calibrate_beta(const std::vector<MatR>& raw_samples);

/// raw / beta, clipped into [0, 1].
MatR normalize_rssi(const MatR& raw, const RssiScale& scale);

/// Linear quantization round(a (2^Nb - 1)) / (2^Nb - 1) with rounding half
/// away from zero. n_bits = 0 passes through, flagged full precision.
RssiFeedback quantize(const MatR& alpha, int n_bits);

/// RSSI dataset file, index-aligned with the channel file it was derived from.
struct RssiDataset {
  std::vector<RssiFeedback> samples;
  RssiScale scale;
  std::uint64_t seed = 0;
};

void save_rssi(const std::string& path, const RssiDataset& ds);
RssiDataset load_rssi(const std::string& path);

}  // namespace rhb
