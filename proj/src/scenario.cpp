#include "rhb/scenario.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace rhb {

namespace {

constexpr char kMagic[8] = {'R', 'H', 'B', 'C', 'H', 'A', 'N', 'L'};
constexpr std::uint8_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error(std::string("channel file: truncated while reading ") + what);
  return v;
}

}  // namespace

VecC steering_vector(const GeometryParams& geo, double azimuth, double elevation) {
  const auto [nx, ny, nz] = geo.panel;
  const double ux = std::cos(elevation) * std::cos(azimuth);
  const double uy = std::cos(elevation) * std::sin(azimuth);
  const double uz = std::sin(elevation);
  VecC a(nx * ny * nz);
  int t = 0;
  for (int iz = 0; iz < nz; ++iz)
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix) {
        const double phase = 2.0 * kPi * geo.spacing * (ix * ux + iy * uy + iz * uz);
        a[t++] = Complex(std::cos(phase), std::sin(phase));
      }
  return a;
}

std::vector<ChannelSet> generate_channels(const SystemConfig& cfg, const GeometryParams& geo,
                                          int n_samples) {
  cfg.validate();
  geo.validate(cfg.n_tx);
  if (n_samples < 0) throw std::invalid_argument("generate_channels: n_samples must be >= 0");

  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> uni01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<ChannelSet> sets;
  sets.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    MatC h = MatC::Zero(cfg.n_users, cfg.n_tx);
    // Decaying per-path power profile, normalized so the profile carries the
    // whole large-scale power regardless of n_paths or the decay slope.
    std::vector<double> profile(geo.n_paths);
    double profile_sum = 0.0;
    for (int p = 0; p < geo.n_paths; ++p)
      profile_sum += profile[p] = std::pow(10.0, -p * geo.path_decay_db / 10.0);
    for (double& w : profile) w /= profile_sum;
    for (int m = 0; m < cfg.n_users; ++m) {
      // Per-user large-scale power, log-uniform across the configured span.
      const double scale_db =
          geo.scale_min_db + (geo.scale_max_db - geo.scale_min_db) * uni01(rng);
      const double scale = std::pow(10.0, scale_db / 10.0);
      // One LOS direction per user; the scattered paths stay within
      // cluster_spread of it, so the channel lives on a low-dimensional
      // manifold (direction + gains) rather than being isotropic.
      const double az0 = geo.az_min + (geo.az_max - geo.az_min) * uni01(rng);
      const double el0 = geo.el_min + (geo.el_max - geo.el_min) * uni01(rng);
      VecC hm = VecC::Zero(cfg.n_tx);
      for (int p = 0; p < geo.n_paths; ++p) {
        double az = az0, el = el0;
        if (p > 0) {
          az += geo.cluster_spread * (2.0 * uni01(rng) - 1.0);
          el += geo.cluster_spread * (2.0 * uni01(rng) - 1.0);
        }
        double amp = std::sqrt(scale * profile[p] / 2.0);
        if (geo.gain_spread > 0) amp *= std::exp(geo.gain_spread * gauss(rng));
        const Complex g(amp * gauss(rng), amp * gauss(rng));
        hm += g * steering_vector(geo, az, el);
      }
      if (hm.squaredNorm() == 0.0)
        throw std::runtime_error("generate_channels: degenerate all-zero channel for user " +
                                 std::to_string(m));
      h.row(m) = hm.adjoint();
    }
    sets.push_back(ChannelSet{std::move(h)});
  }
  return sets;
}

void save_channels(const std::string& path, const std::vector<ChannelSet>& sets) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_channels: cannot open " + path);
  os.write(kMagic, sizeof(kMagic));
  write_pod(os, kVersion);
  const std::uint32_t n = static_cast<std::uint32_t>(sets.size());
  const std::uint32_t m = n ? static_cast<std::uint32_t>(sets[0].h.rows()) : 0;
  const std::uint32_t nt = n ? static_cast<std::uint32_t>(sets[0].h.cols()) : 0;
  write_pod(os, n);
  write_pod(os, m);
  write_pod(os, nt);
  for (const auto& set : sets) {
    if (set.h.rows() != m || set.h.cols() != nt)
      throw std::invalid_argument("save_channels: inconsistent sample dimensions");
    for (int r = 0; r < set.h.rows(); ++r)
      for (int c = 0; c < set.h.cols(); ++c) {
        write_pod(os, set.h(r, c).real());
        write_pod(os, set.h(r, c).imag());
      }
  }
  if (!os) throw std::runtime_error("save_channels: write failed for " + path);
}

std::vector<ChannelSet> load_channels(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_channels: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("load_channels: bad magic in " + path);
  const auto version = read_pod<std::uint8_t>(is, "version");
  if (version != kVersion)
    throw std::runtime_error("load_channels: unsupported version " + std::to_string(version));
  const auto n = read_pod<std::uint32_t>(is, "n_samples");
  const auto m = read_pod<std::uint32_t>(is, "n_users");
  const auto nt = read_pod<std::uint32_t>(is, "n_tx");
  if (n == 0) throw std::runtime_error("load_channels: no samples in " + path);
  if (m == 0 || nt == 0) throw std::runtime_error("load_channels: zero dimension in header");

  std::vector<ChannelSet> sets;
  sets.reserve(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    MatC h(m, nt);
    for (std::uint32_t r = 0; r < m; ++r)
      for (std::uint32_t c = 0; c < nt; ++c) {
        const double re = read_pod<double>(is, "sample data");
        const double im = read_pod<double>(is, "sample data");
        if (!std::isfinite(re) || !std::isfinite(im))
          throw std::runtime_error("load_channels: non-finite entry in sample " +
                                   std::to_string(s));
        h(r, c) = Complex(re, im);
      }
    sets.push_back(ChannelSet{std::move(h)});
  }
  // Anything left over means the header lied about the dimensions.
  char probe;
  is.read(&probe, 1);
  if (is.gcount() != 0)
    throw std::runtime_error("load_channels: trailing data; header dimensions do not match body");
  return sets;
}

void export_channels_csv(const std::string& path, const std::vector<ChannelSet>& sets) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_channels_csv: cannot open " + path);
  os << "sample,user";
  if (!sets.empty())
    for (int c = 0; c < sets[0].h.cols(); ++c) os << ",re" << c << ",im" << c;
  os << "\n";
  os.precision(17);
  for (std::size_t s = 0; s < sets.size(); ++s)
    for (int r = 0; r < sets[s].h.rows(); ++r) {
      os << s << "," << r;
      for (int c = 0; c < sets[s].h.cols(); ++c)
        os << "," << sets[s].h(r, c).real() << "," << sets[s].h(r, c).imag();
      os << "\n";
    }
}

}  // namespace rhb
