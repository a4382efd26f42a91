#pragma once

#include "rhb/codebook.hpp"
#include "rhb/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rhb {

/// Codebook-constrained analog precoder plus its digital companion.
struct PrecoderPair {
  MatC a;                            // N_T x N_RF, columns from the codebook
  std::vector<std::uint64_t> a_idx;  // codeword index per RF chain
  MatC w;                            // N_RF x M
};

/// Least-squares digital precoder W = pinv(A) U. `degenerate` is set when A
/// has repeated columns (the pseudo-inverse is still well defined).
MatC ls_digital(const MatC& a, const MatC& u, bool* degenerate = nullptr);

/// Scale W so that sum_m ||A w_m||^2 equals p_max exactly.
MatC normalize_power(const MatC& a, const MatC& w_hat, double p_max);

/// argmin_A sum_m ||u_m - A w_m||^2 with every column of A drawn from the
/// full quaternary codebook. The objective is separable across antenna rows,
/// so the search enumerates the 4^N_RF per-row digit combinations and is
/// exact. Ties resolve to the lowest digit combination.
std::vector<std::uint64_t> best_analog(const MatC& u, const MatC& w, const Codebook& cb);

MatC analog_from_indices(const std::vector<std::uint64_t>& idx, const Codebook& cb);

struct FactorizeResult {
  PrecoderPair pair;
  std::vector<double> objective_trace;  // ||U - A W||_F^2 per iteration, non-increasing
  int iterations = 0;
};

/// Alternating factorization of an FDP into (A, W): LS digital update and
/// exact codebook analog update until the objective stalls, then a single
/// power normalization. Analog columns are sorted by codeword index so that
/// labels are permutation-canonical.
FactorizeResult factorize(const MatC& u, const Codebook& cb, int n_rf, double p_max,
                          int max_iter = 50, double obj_tol = 1e-8);

/// Training targets for the codeword classifier: one index row per sample.
void export_analog_labels_csv(const std::string& path,
                              const std::vector<std::vector<std::uint64_t>>& labels);
std::vector<std::vector<std::uint64_t>> load_analog_labels_csv(const std::string& path);

}  // namespace rhb
