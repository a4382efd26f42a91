#include "rhb/csi_opt.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace rhb {

VecR sinr_fdp(const ChannelSet& ch, const MatC& u, double noise_power) {
  if (u.rows() != ch.n_tx()) throw std::invalid_argument("sinr: precoder/channel shape mismatch");
  const int m_users = ch.n_users();
  if (u.cols() != m_users) throw std::invalid_argument("sinr: one precoder column per user required");
  const MatC gains = ch.h * u;  // (m, j) = h_m^H u_j
  VecR out(m_users);
  for (int m = 0; m < m_users; ++m) {
    const double sig = std::norm(gains(m, m));
    double interf = 0.0;
    for (int j = 0; j < m_users; ++j)
      if (j != m) interf += std::norm(gains(m, j));
    out[m] = sig / (interf + noise_power);
  }
  return out;
}

VecR sinr(const ChannelSet& ch, const MatC& a, const MatC& w, double noise_power) {
  if (a.rows() != ch.n_tx() || a.cols() != w.rows())
    throw std::invalid_argument("sinr: analog/digital shape mismatch");
  return sinr_fdp(ch, a * w, noise_power);
}

double sum_rate_fdp(const ChannelSet& ch, const MatC& u, double noise_power) {
  const VecR s = sinr_fdp(ch, u, noise_power);
  double rate = 0.0;
  for (int m = 0; m < s.size(); ++m) rate += std::log2(1.0 + s[m]);
  return rate;
}

double sum_rate(const ChannelSet& ch, const MatC& a, const MatC& w, double noise_power) {
  return sum_rate_fdp(ch, a * w, noise_power);
}

MatC mrt(const ChannelSet& ch, double p_max) {
  const int m_users = ch.n_users();
  MatC u(ch.n_tx(), m_users);
  for (int m = 0; m < m_users; ++m) {
    const VecC hm = ch.h.row(m).adjoint();
    const double nrm = hm.norm();
    if (nrm == 0.0) throw std::invalid_argument("mrt: zero channel for user " + std::to_string(m));
    u.col(m) = std::sqrt(p_max / m_users) * hm / nrm;
  }
  return u;
}

MatC zfbf(const ChannelSet& ch, double noise_power, double p_max) {
  const int m_users = ch.n_users();
  const int n_tx = ch.n_tx();
  if (m_users > n_tx) throw std::invalid_argument("zfbf: requires M <= N_T");

  const MatC gram = ch.h * ch.h.adjoint();  // (i, j) = h_i^H h_j
  Eigen::JacobiSVD<MatC> svd(gram);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-12 * sv(0)) {
    // Name the most correlated user pair for the error message.
    int bi = 0, bj = 1;
    double best = -1.0;
    for (int i = 0; i < m_users; ++i)
      for (int j = i + 1; j < m_users; ++j) {
        const double c = std::abs(gram(i, j)) /
                         std::sqrt(std::real(gram(i, i)) * std::real(gram(j, j)));
        if (c > best) {
          best = c;
          bi = i;
          bj = j;
        }
      }
    throw std::runtime_error("zfbf: rank-deficient channel, users " + std::to_string(bi) +
                             " and " + std::to_string(bj) + " are linearly dependent");
  }

  const MatC pinv = ch.h.adjoint() * gram.inverse();  // N_T x M, h_j^H pinv.col(m) = delta_jm
  VecR inv_gain(m_users);                             // sigma^2 / g_m thresholds
  for (int m = 0; m < m_users; ++m) inv_gain[m] = noise_power * pinv.col(m).squaredNorm();

  // Water-filling on the zero-forced gains.
  std::vector<int> order(m_users);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return inv_gain[a] < inv_gain[b]; });
  double level = 0.0;
  int active = 0;
  double acc = 0.0;
  for (int k = 1; k <= m_users; ++k) {
    acc += inv_gain[order[k - 1]];
    const double nu = (p_max + acc) / k;
    if (nu > inv_gain[order[k - 1]]) {
      level = nu;
      active = k;
    }
  }
  MatC u = MatC::Zero(n_tx, m_users);
  for (int k = 0; k < active; ++k) {
    const int m = order[k];
    const double power = level - inv_gain[m];
    u.col(m) = std::sqrt(power) * pinv.col(m) / pinv.col(m).norm();
  }
  return u;
}

namespace {

// Transmit-filter update of WMMSE: u_m = (G + mu I)^-1 rhs_m with the
// smallest mu >= 0 keeping the total power within budget.
MatC wmmse_transmit_update(const MatC& g, const MatC& rhs, double p_max) {
  Eigen::SelfAdjointEigenSolver<MatC> eig(g);
  const VecR lam = eig.eigenvalues();
  const MatC q = eig.eigenvectors();
  const MatC c = q.adjoint() * rhs;  // per-mode components

  auto power_at = [&](double mu) {
    double p = 0.0;
    for (int t = 0; t < lam.size(); ++t) {
      const double d = lam[t] + mu;
      p += c.row(t).squaredNorm() / (d * d);
    }
    return p;
  };

  double mu = 0.0;
  const double lam_min = lam.minCoeff();
  const bool invertible = lam_min > 1e-14 * std::max(1.0, lam.maxCoeff());
  if (!invertible || power_at(0.0) > p_max) {
    double hi = std::sqrt(c.squaredNorm() / p_max) + 1.0;
    double lo = 0.0;
    for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (power_at(mid) > p_max ? lo : hi) = mid;
    }
    mu = 0.5 * (lo + hi);
  }
  MatC u(g.rows(), rhs.cols());
  for (int m = 0; m < rhs.cols(); ++m) {
    VecC scaled(lam.size());
    for (int t = 0; t < lam.size(); ++t) scaled[t] = c(t, m) / (lam[t] + mu);
    u.col(m) = q * scaled;
  }
  return u;
}

}  // namespace

FdpResult solve_fdp(const ChannelSet& ch, double noise_power, double p_max, double rate_tol,
                    int max_iter) {
  const int m_users = ch.n_users();
  const int n_tx = ch.n_tx();
  if (ch.h.cwiseAbs().maxCoeff() == 0.0) throw std::invalid_argument("solve_fdp: zero channel");

  MatC u = mrt(ch, p_max);
  double rate = sum_rate_fdp(ch, u, noise_power);
  if (m_users <= n_tx) {
    try {
      const MatC uz = zfbf(ch, noise_power, p_max);
      const double rz = sum_rate_fdp(ch, uz, noise_power);
      if (rz > rate) {
        u = uz;
        rate = rz;
      }
    } catch (const std::runtime_error&) {
      // rank-deficient draw; MRT start is fine
    }
  }

  FdpResult res;
  res.rate_trace.push_back(rate);
  for (int it = 0; it < max_iter; ++it) {
    const MatC gains = ch.h * u;  // (m, j) = h_m^H u_j
    VecC v(m_users);
    VecR wt(m_users);
    for (int m = 0; m < m_users; ++m) {
      const double denom = gains.row(m).squaredNorm() + noise_power;
      v[m] = gains(m, m) / denom;
      const double e = 1.0 - std::norm(gains(m, m)) / denom;
      wt[m] = 1.0 / std::max(e, 1e-300);
    }
    MatC g = MatC::Zero(n_tx, n_tx);
    MatC rhs(n_tx, m_users);
    for (int m = 0; m < m_users; ++m) {
      const VecC hm = ch.h.row(m).adjoint();
      g.noalias() += (wt[m] * std::norm(v[m])) * (hm * hm.adjoint());
      rhs.col(m) = (wt[m] * std::conj(v[m])) * hm;
    }
    const MatC u_next = wmmse_transmit_update(g, rhs, p_max);
    const double rate_next = sum_rate_fdp(ch, u_next, noise_power);
    res.iterations = it + 1;
    if (rate_next < rate) break;  // numerically stalled; keep the better iterate
    u = u_next;
    res.rate_trace.push_back(rate_next);
    const bool done = rate_next - rate < rate_tol;
    rate = rate_next;
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.u = std::move(u);
  return res;
}

namespace {
constexpr char kMagic[8] = {'R', 'H', 'B', 'F', 'D', 'P', 'L', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error(std::string("fdp file: truncated while reading ") + what);
  return v;
}
}  // namespace

void save_fdp(const std::string& path, const std::vector<MatC>& precoders) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_fdp: cannot open " + path);
  os.write(kMagic, sizeof(kMagic));
  const std::uint32_t n = static_cast<std::uint32_t>(precoders.size());
  const std::uint32_t m = n ? static_cast<std::uint32_t>(precoders[0].cols()) : 0;
  const std::uint32_t nt = n ? static_cast<std::uint32_t>(precoders[0].rows()) : 0;
  write_pod(os, n);
  write_pod(os, m);
  write_pod(os, nt);
  for (const auto& u : precoders) {
    if (u.cols() != m || u.rows() != nt)
      throw std::invalid_argument("save_fdp: inconsistent precoder dimensions");
    for (int c = 0; c < u.cols(); ++c)
      for (int r = 0; r < u.rows(); ++r) {
        write_pod(os, u(r, c).real());
        write_pod(os, u(r, c).imag());
      }
  }
  if (!os) throw std::runtime_error("save_fdp: write failed for " + path);
}

std::vector<MatC> load_fdp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_fdp: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("load_fdp: bad magic in " + path);
  const auto n = read_pod<std::uint32_t>(is, "n_samples");
  const auto m = read_pod<std::uint32_t>(is, "n_users");
  const auto nt = read_pod<std::uint32_t>(is, "n_tx");
  std::vector<MatC> out;
  out.reserve(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    MatC u(nt, m);
    for (std::uint32_t c = 0; c < m; ++c)
      for (std::uint32_t r = 0; r < nt; ++r) {
        const double re = read_pod<double>(is, "precoder data");
        const double im = read_pod<double>(is, "precoder data");
        u(r, c) = Complex(re, im);
      }
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace rhb
