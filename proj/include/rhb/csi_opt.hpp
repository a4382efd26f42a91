#pragma once

#include "rhb/types.hpp"

#include <string>
#include <vector>

namespace rhb {

/// Per-user SINR for the hybrid precoder (A, W).
VecR sinr(const ChannelSet& ch, const MatC& a, const MatC& w, double noise_power);

/// Per-user SINR for a fully digital precoder U (column m = u_m).
VecR sinr_fdp(const ChannelSet& ch, const MatC& u, double noise_power);

double sum_rate(const ChannelSet& ch, const MatC& a, const MatC& w, double noise_power);
double sum_rate_fdp(const ChannelSet& ch, const MatC& u, double noise_power);

/// Matched-filter precoder with equal power split.
MatC mrt(const ChannelSet& ch, double p_max);

/// Zero-forcing directions (pseudo-inverse of the channel matrix) with
/// water-filling power allocation. Requires linearly independent channel rows.
MatC zfbf(const ChannelSet& ch, double noise_power, double p_max);

struct FdpResult {
  MatC u;                         // N_T x M
  std::vector<double> rate_trace; // accepted sum rates, non-decreasing
  int iterations = 0;
  bool converged = false;
};

/// WMMSE solver for the sum-rate-optimal fully digital precoder. Starts from
/// the better of MRT and ZFBF; the returned rate is never below either.
FdpResult solve_fdp(const ChannelSet& ch, double noise_power, double p_max,
                    double rate_tol = 1e-6, int max_iter = 200);

void save_fdp(const std::string& path, const std::vector<MatC>& precoders);
std::vector<MatC> load_fdp(const std::string& path);

}  // namespace rhb
