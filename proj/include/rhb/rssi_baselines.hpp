#pragma once

#include "rhb/beam_training.hpp"
#include "rhb/codebook.hpp"
#include "rhb/types.hpp"

namespace rhb {

/// FDP whose column m is the sounding codeword with the largest reported
/// RSSI for user m (ties: lowest burst index), scaled to equal per-user
/// power summing to p_max.
MatC max_direction(const RssiFeedback& fb, const SSMatrix& ss, double p_max);

/// RSSI-weighted combination of the sounding codewords per user, same power
/// scaling as max_direction. Rejects users whose feedback is all zero.
MatC mrc_combine(const RssiFeedback& fb, const SSMatrix& ss, double p_max);

/// Unnormalized variants (directions before the power scaling step).
MatC max_direction_dirs(const RssiFeedback& fb, const SSMatrix& ss);
MatC mrc_combine_dirs(const RssiFeedback& fb, const SSMatrix& ss);

}  // namespace rhb
