#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rhb {

using Complex = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using VecR = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Global system parameters shared by every stage of the pipeline.
struct SystemConfig {
  int n_tx = 6;                // transmit antennas N_T
  int n_rf = 2;                // RF chains N_RF
  int n_users = 2;             // users M
  double noise_power = 1e-15;  // sigma^2 [W]
  double p_max = 1.0;          // transmit power budget [W]
  int k_ss = 8;                // SS bursts per training round K
  int n_bits = 0;              // RSSI quantization bits, 0 = full precision
  // Correlating the known synchronization sequence averages receiver noise
  // down before the RSSI is formed; the effective measurement noise is
  // noise_power / 10^(ss_proc_gain_db / 10).
  double ss_proc_gain_db = 20.0;
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (n_tx < 1) throw std::invalid_argument("SystemConfig: n_tx must be >= 1");
    if (n_rf < 1 || n_rf > n_tx)
      throw std::invalid_argument("SystemConfig: need 1 <= n_rf <= n_tx");
    if (n_users < 1) throw std::invalid_argument("SystemConfig: n_users must be >= 1");
    if (!(noise_power > 0)) throw std::invalid_argument("SystemConfig: noise_power must be > 0");
    if (!(p_max > 0)) throw std::invalid_argument("SystemConfig: p_max must be > 0");
    if (k_ss < 1) throw std::invalid_argument("SystemConfig: k_ss must be >= 1");
    if (n_bits < 0) throw std::invalid_argument("SystemConfig: n_bits must be >= 0");
    if (ss_proc_gain_db < 0)
      throw std::invalid_argument("SystemConfig: ss_proc_gain_db must be >= 0");
  }
};

/// Geometry of the synthetic cluster channel.
struct GeometryParams {
  int n_paths = 10;
  std::array<int, 3> panel = {1, 2, 3};  // antenna grid (n_x, n_y, n_z)
  double spacing = 0.5;                  // element spacing in wavelengths
  double gain_spread = 0.0;              // log-amplitude std of per-path shadowing
  double az_min = -kPi, az_max = kPi;    // azimuth range (user LOS direction)
  // Elevation stays in a narrow band: an elevated array serving street-level
  // users sees them close to the horizontal plane.
  double el_min = -0.35, el_max = 0.35;
  // Cluster structure: each user gets one LOS direction drawn from the ranges
  // above; the remaining paths scatter around it with angular offsets uniform
  // in +-cluster_spread, and path p carries a power fraction proportional to
  // 10^(-p*path_decay_db/10) (profile normalized to the large-scale power).
  // cluster_spread = inf / path_decay_db = 0 degenerates to i.i.d. paths.
  double cluster_spread = 0.05;
  double path_decay_db = 15.0;
  // Per-user large-scale channel power 10^(U/10) with U uniform on
  // [scale_min_db, scale_max_db]. Defaults put the matched-filter SNR at
  // sigma^2 = 1e-15 W, P = 1 W roughly in [9, 19] dB.
  double scale_min_db = -149.0;
  double scale_max_db = -139.0;

  void validate(int n_tx) const {
    if (n_paths < 1) throw std::invalid_argument("GeometryParams: n_paths must be >= 1");
    if (!(spacing > 0)) throw std::invalid_argument("GeometryParams: spacing must be > 0");
    if (panel[0] < 1 || panel[1] < 1 || panel[2] < 1)
      throw std::invalid_argument("GeometryParams: panel dims must be >= 1");
    if (panel[0] * panel[1] * panel[2] != n_tx)
      throw std::invalid_argument("GeometryParams: panel grid does not match n_tx (" +
                                  std::to_string(panel[0] * panel[1] * panel[2]) + " vs " +
                                  std::to_string(n_tx) + ")");
    if (gain_spread < 0) throw std::invalid_argument("GeometryParams: gain_spread must be >= 0");
    if (cluster_spread < 0)
      throw std::invalid_argument("GeometryParams: cluster_spread must be >= 0");
    if (path_decay_db < 0)
      throw std::invalid_argument("GeometryParams: path_decay_db must be >= 0");
    if (az_max < az_min || el_max < el_min || scale_max_db < scale_min_db)
      throw std::invalid_argument("GeometryParams: empty parameter range");
  }
};

/// One multi-user channel realization. Row m holds h_m^H, so the effective
/// gain of precoder column u is simply h.row(m) * u.
struct ChannelSet {
  MatC h;  // M x N_T

  int n_users() const { return static_cast<int>(h.rows()); }
  int n_tx() const { return static_cast<int>(h.cols()); }
};

}  // namespace rhb
