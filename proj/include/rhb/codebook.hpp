#pragma once

#include "rhb/types.hpp"

#include <cstdint>
#include <vector>

namespace rhb {

/// Quaternary alphabet: digit d in {0,1,2,3} maps to i^d = {1, i, -1, -i}.
Complex quaternary_value(int digit);

/// One analog codeword with its base-4 index (entry t is digit (index >> 2t) & 3).
struct Codeword {
  VecC v;
  std::uint64_t index = 0;
};

/// The full codebook of all 4^n_tx quaternary vectors, addressed by index.
/// Vectors are decoded on demand; nothing is materialized.
class Codebook {
 public:
  static Codebook full(int n_tx);

  int n_tx() const { return n_tx_; }
  std::uint64_t size() const { return size_; }

  VecC decode(std::uint64_t index) const;
  std::uint64_t encode(const VecC& v) const;  // exact entries required

  void export_csv(const std::string& path) const;

 private:
  explicit Codebook(int n_tx);
  int n_tx_;
  std::uint64_t size_;
};

/// K sounding codewords, row k = a_SS^(k) transposed (no conjugation).
struct SSMatrix {
  MatC b;  // K x N_T
  std::uint64_t seed = 0;

  int k_ss() const { return static_cast<int>(b.rows()); }
  int n_tx() const { return static_cast<int>(b.cols()); }
  VecC codeword(int k) const { return b.row(k).transpose(); }
  /// N_T x K matrix whose k-th column is a_SS^(k).
  MatC columns() const { return b.transpose(); }
};

/// Quaternary sounding matrix. For K <= N_T the rows are exactly mutually
/// orthogonal (b * b^H = N_T * I). For K > N_T the first N_T rows stay
/// orthogonal and extra rows are picked greedily to minimize the maximum
/// pairwise coherence. Supported N_T: products of factors 2, 4 and 6.
SSMatrix ss_matrix(int n_tx, int k_ss, std::uint64_t seed);

void export_ss_csv(const std::string& path, const SSMatrix& ss);

}  // namespace rhb
