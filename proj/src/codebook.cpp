#include "rhb/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace rhb {

Complex quaternary_value(int digit) {
  if (digit < 0 || digit > 3)
    throw std::invalid_argument("quaternary_value: digit must be in 0..3");
  switch (digit) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

Codebook::Codebook(int n_tx) : n_tx_(n_tx), size_(std::uint64_t{1} << (2 * n_tx)) {}

Codebook Codebook::full(int n_tx) {
  if (n_tx < 1) throw std::invalid_argument("Codebook: n_tx must be >= 1");
  if (n_tx > 12)
    throw std::invalid_argument("Codebook: exhaustive quaternary codebook limited to n_tx <= 12 (requested " +
                                std::to_string(n_tx) + ")");
  return Codebook(n_tx);
}

VecC Codebook::decode(std::uint64_t index) const {
  if (index >= size_) throw std::out_of_range("Codebook::decode: index out of range");
  VecC v(n_tx_);
  for (int t = 0; t < n_tx_; ++t) v[t] = quaternary_value(static_cast<int>((index >> (2 * t)) & 3));
  return v;
}

std::uint64_t Codebook::encode(const VecC& v) const {
  if (v.size() != n_tx_) throw std::invalid_argument("Codebook::encode: wrong length");
  std::uint64_t index = 0;
  for (int t = 0; t < n_tx_; ++t) {
    int digit = -1;
    for (int d = 0; d < 4; ++d)
      if (std::abs(v[t] - quaternary_value(d)) < 1e-9) digit = d;
    if (digit < 0) throw std::invalid_argument("Codebook::encode: entry is not quaternary");
    index |= static_cast<std::uint64_t>(digit) << (2 * t);
  }
  return index;
}

void Codebook::export_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("Codebook::export_csv: cannot open " + path);
  os << "index";
  for (int t = 0; t < n_tx_; ++t) os << ",re" << t << ",im" << t;
  os << "\n";
  for (std::uint64_t j = 0; j < size_; ++j) {
    const VecC v = decode(j);
    os << j;
    for (int t = 0; t < n_tx_; ++t) os << "," << v[t].real() << "," << v[t].imag();
    os << "\n";
  }
}

namespace {

// Base orthogonal quaternary matrices as base-4 digit tables.
// 2x2: real Hadamard. 4x4: quaternary Fourier i^(jk). 6x6: a fixed
// 6x6 quaternary matrix with mutually orthogonal rows.
MatC base_matrix(int n) {
  auto from_digits = [](std::initializer_list<std::initializer_list<int>> rows) {
    MatC m(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
    int r = 0;
    for (const auto& row : rows) {
      int c = 0;
      for (int d : row) m(r, c++) = quaternary_value(d);
      ++r;
    }
    return m;
  };
  switch (n) {
    case 2:
      return from_digits({{0, 0}, {0, 2}});
    case 4:
      return from_digits({{0, 0, 0, 0}, {0, 1, 2, 3}, {0, 2, 0, 2}, {0, 3, 2, 1}});
    case 6:
      return from_digits({{0, 0, 0, 0, 0, 0},
                          {3, 2, 2, 1, 0, 0},
                          {2, 2, 0, 3, 1, 0},
                          {2, 0, 3, 1, 2, 0},
                          {0, 1, 2, 3, 2, 0},
                          {1, 3, 1, 2, 3, 0}});
    default:
      throw std::logic_error("base_matrix: unsupported size");
  }
}

// n_tx x n_tx quaternary matrix with mutually orthogonal rows, built as a
// Kronecker product of the base blocks.
MatC orthogonal_quaternary(int n_tx) {
  MatC m = MatC::Ones(1, 1);
  int n = n_tx;
  while (n > 1) {
    int f;
    if (n % 6 == 0)
      f = 6;
    else if (n % 4 == 0)
      f = 4;
    else if (n % 2 == 0)
      f = 2;
    else
      throw std::invalid_argument(
          "ss_matrix: n_tx = " + std::to_string(n_tx) +
          " has no quaternary orthogonal construction (must factor into 2, 4, 6)");
    const MatC b = base_matrix(f);
    MatC next(m.rows() * f, m.cols() * f);
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c)
        next.block(r * f, c * f, f, f) = m(r, c) * b;
    m = std::move(next);
    n /= f;
  }
  return m;
}

}  // namespace

SSMatrix ss_matrix(int n_tx, int k_ss, std::uint64_t seed) {
  if (k_ss < 1) throw std::invalid_argument("ss_matrix: k_ss must be >= 1");
  MatC ortho = n_tx == 1 ? MatC::Ones(1, 1) : orthogonal_quaternary(n_tx);

  const int k_base = std::min(k_ss, n_tx);
  MatC b(k_ss, n_tx);
  b.topRows(k_base) = ortho.topRows(k_base);

  if (k_ss > n_tx) {
    // Greedy extension: scan the whole codebook, keep the codeword whose
    // worst-case coherence with the rows picked so far is smallest.
    const Codebook cb = Codebook::full(n_tx);
    for (int k = n_tx; k < k_ss; ++k) {
      double best_score = std::numeric_limits<double>::infinity();
      std::uint64_t best_idx = 0;
      VecC best_v;
      for (std::uint64_t j = 0; j < cb.size(); ++j) {
        const VecC v = cb.decode(j);
        double worst = 0.0;
        bool duplicate = false;
        for (int r = 0; r < k; ++r) {
          const double coh = std::abs(b.row(r).dot(v));
          if (coh > n_tx - 1e-9) {
            duplicate = true;  // equal up to a quaternary phase
            break;
          }
          worst = std::max(worst, coh);
        }
        if (duplicate) continue;
        if (worst < best_score - 1e-12) {
          best_score = worst;
          best_idx = j;
          best_v = v;
        }
      }
      if (!best_v.size()) throw std::runtime_error("ss_matrix: greedy extension exhausted codebook");
      (void)best_idx;
      b.row(k) = best_v.transpose();
    }
  }
  return SSMatrix{std::move(b), seed};
}

void export_ss_csv(const std::string& path, const SSMatrix& ss) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_ss_csv: cannot open " + path);
  os << "burst";
  for (int t = 0; t < ss.n_tx(); ++t) os << ",re" << t << ",im" << t;
  os << "\n";
  for (int k = 0; k < ss.k_ss(); ++k) {
    os << k;
    for (int t = 0; t < ss.n_tx(); ++t)
      os << "," << ss.b(k, t).real() << "," << ss.b(k, t).imag();
    os << "\n";
  }
}

}  // namespace rhb
