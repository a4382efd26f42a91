#include "rhb/beam_training.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace rhb {

MatR measure_rssi(const ChannelSet& ch, const SSMatrix& ss, double noise_power,
                  std::mt19937_64& rng) {
  if (ch.n_tx() != ss.n_tx())
    throw std::invalid_argument("measure_rssi: channel/SS antenna mismatch");
  if (noise_power < 0) throw std::invalid_argument("measure_rssi: noise_power must be >= 0");
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double eta_std = std::sqrt(noise_power / 2.0);
  MatR raw(ss.k_ss(), ch.n_users());
  for (int k = 0; k < ss.k_ss(); ++k) {
    const VecC a = ss.codeword(k);
    for (int m = 0; m < ch.n_users(); ++m) {
      // s^(k) = 1; row m of h already holds h_m^H.
      const Complex r = (ch.h.row(m) * a)(0, 0) +
                        Complex(eta_std * gauss(rng), eta_std * gauss(rng));
      raw(k, m) = std::norm(r);
    }
  }
  return raw;
}

RssiScale calibrate_beta(const std::vector<MatR>& raw_samples) {
  if (raw_samples.empty()) throw std::invalid_argument("calibrate_beta: empty calibration set");
  double beta = 0.0;
  for (const auto& m : raw_samples) beta = std::max(beta, m.maxCoeff());
  if (!(beta > 0)) throw std::invalid_argument("calibrate_beta: all-zero calibration set");
  return RssiScale{beta};
}

MatR normalize_rssi(const MatR& raw, const RssiScale& scale) {
  if (!(scale.beta > 0)) throw std::invalid_argument("normalize_rssi: beta must be > 0");
  return (raw / scale.beta).cwiseMax(0.0).cwiseMin(1.0);
}

RssiFeedback quantize(const MatR& alpha, int n_bits) {
  if ((alpha.array() < 0.0).any() || (alpha.array() > 1.0).any())
    throw std::invalid_argument("quantize: entries must lie in [0, 1]");
  if (n_bits < 0) throw std::invalid_argument("quantize: n_bits must be >= 0");
  if (n_bits == 0) return RssiFeedback{alpha, false, 0};
  const double levels = std::pow(2.0, n_bits) - 1.0;
  MatR q = alpha.unaryExpr([levels](double x) { return std::round(x * levels) / levels; });
  return RssiFeedback{std::move(q), true, n_bits};
}

namespace {
constexpr char kMagic[8] = {'R', 'H', 'B', 'R', 'S', 'S', 'I', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error(std::string("rssi file: truncated while reading ") + what);
  return v;
}
}  // namespace

void save_rssi(const std::string& path, const RssiDataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_rssi: cannot open " + path);
  os.write(kMagic, sizeof(kMagic));
  const std::uint32_t n = static_cast<std::uint32_t>(ds.samples.size());
  const std::uint32_t k = n ? static_cast<std::uint32_t>(ds.samples[0].alpha.rows()) : 0;
  const std::uint32_t m = n ? static_cast<std::uint32_t>(ds.samples[0].alpha.cols()) : 0;
  const std::int32_t nb = n ? ds.samples[0].n_bits : 0;
  write_pod(os, n);
  write_pod(os, k);
  write_pod(os, m);
  write_pod(os, nb);
  write_pod(os, ds.scale.beta);
  write_pod(os, ds.seed);
  for (const auto& fb : ds.samples) {
    if (fb.alpha.rows() != k || fb.alpha.cols() != m || fb.n_bits != nb)
      throw std::invalid_argument("save_rssi: inconsistent sample shape");
    for (int r = 0; r < fb.alpha.rows(); ++r)
      for (int c = 0; c < fb.alpha.cols(); ++c) write_pod(os, fb.alpha(r, c));
  }
  if (!os) throw std::runtime_error("save_rssi: write failed for " + path);
}

RssiDataset load_rssi(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_rssi: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("load_rssi: bad magic in " + path);
  const auto n = read_pod<std::uint32_t>(is, "n_samples");
  const auto k = read_pod<std::uint32_t>(is, "k_ss");
  const auto m = read_pod<std::uint32_t>(is, "n_users");
  const auto nb = read_pod<std::int32_t>(is, "n_bits");
  const auto beta = read_pod<double>(is, "beta");
  const auto seed = read_pod<std::uint64_t>(is, "seed");
  if (n == 0) throw std::runtime_error("load_rssi: no samples in " + path);
  RssiDataset ds;
  ds.scale.beta = beta;
  ds.seed = seed;
  ds.samples.reserve(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    MatR a(k, m);
    for (std::uint32_t r = 0; r < k; ++r)
      for (std::uint32_t c = 0; c < m; ++c) a(r, c) = read_pod<double>(is, "sample data");
    ds.samples.push_back(RssiFeedback{std::move(a), nb > 0, nb});
  }
  return ds;
}

}  // namespace rhb
