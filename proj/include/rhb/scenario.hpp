#pragma once

#include "rhb/types.hpp"

#include <random>
#include <vector>

namespace rhb {

/// Uniform-planar-array response for the given grid and element spacing.
/// Entry for grid point (ix, iy, iz) is exp(i 2 pi d (ix ux + iy uy + iz uz))
/// with u the unit propagation direction; all entries have unit modulus.
VecC steering_vector(const GeometryParams& geo, double azimuth, double elevation);

/// Draw n_samples independent multi-user channel realizations. Deterministic
/// given cfg.rng_seed.
std::vector<ChannelSet> generate_channels(const SystemConfig& cfg, const GeometryParams& geo,
                                          int n_samples);

void save_channels(const std::string& path, const std::vector<ChannelSet>& sets);
std::vector<ChannelSet> load_channels(const std::string& path);

/// Human-readable dump, one row per (sample, user).
void export_channels_csv(const std::string& path, const std::vector<ChannelSet>& sets);

}  // namespace rhb
