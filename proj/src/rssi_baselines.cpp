#include "rhb/rssi_baselines.hpp"

#include <cmath>

namespace rhb {

namespace {

void check_shapes(const RssiFeedback& fb, const SSMatrix& ss) {
  if (fb.alpha.rows() != ss.k_ss())
    throw std::invalid_argument("rssi baseline: feedback rows do not match SS burst count");
  if (fb.alpha.size() == 0) throw std::invalid_argument("rssi baseline: empty feedback");
}

MatC equal_power_scale(MatC u, double p_max) {
  const int m_users = static_cast<int>(u.cols());
  for (int m = 0; m < m_users; ++m) {
    const double nrm = u.col(m).norm();
    if (nrm == 0.0)
      throw std::runtime_error("rssi baseline: zero direction for user " + std::to_string(m));
    u.col(m) *= std::sqrt(p_max / m_users) / nrm;
  }
  return u;
}

}  // namespace

MatC max_direction_dirs(const RssiFeedback& fb, const SSMatrix& ss) {
  check_shapes(fb, ss);
  const int m_users = static_cast<int>(fb.alpha.cols());
  MatC u(ss.n_tx(), m_users);
  for (int m = 0; m < m_users; ++m) {
    int best_k = 0;
    for (int k = 1; k < fb.alpha.rows(); ++k)
      if (fb.alpha(k, m) > fb.alpha(best_k, m)) best_k = k;
    u.col(m) = ss.codeword(best_k);
  }
  return u;
}

MatC mrc_combine_dirs(const RssiFeedback& fb, const SSMatrix& ss) {
  check_shapes(fb, ss);
  const int m_users = static_cast<int>(fb.alpha.cols());
  MatC u(ss.n_tx(), m_users);
  for (int m = 0; m < m_users; ++m) {
    const double total = fb.alpha.col(m).sum();
    if (!(total > 0))
      throw std::runtime_error("mrc_combine: all-zero feedback for user " + std::to_string(m));
    VecC dir = VecC::Zero(ss.n_tx());
    for (int k = 0; k < fb.alpha.rows(); ++k) dir += fb.alpha(k, m) * ss.codeword(k);
    u.col(m) = dir / total;
  }
  return u;
}

MatC max_direction(const RssiFeedback& fb, const SSMatrix& ss, double p_max) {
  return equal_power_scale(max_direction_dirs(fb, ss), p_max);
}

MatC mrc_combine(const RssiFeedback& fb, const SSMatrix& ss, double p_max) {
  return equal_power_scale(mrc_combine_dirs(fb, ss), p_max);
}

}  // namespace rhb
