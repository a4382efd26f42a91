#include "rhb/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace rhb {

MatC ls_digital(const MatC& a, const MatC& u, bool* degenerate) {
  if (a.rows() != u.rows()) throw std::invalid_argument("ls_digital: row mismatch");
  if (degenerate) {
    *degenerate = false;
    for (int i = 0; i < a.cols() && !*degenerate; ++i)
      for (int j = i + 1; j < a.cols(); ++j)
        if ((a.col(i) - a.col(j)).norm() < 1e-12) *degenerate = true;
  }
  return a.completeOrthogonalDecomposition().pseudoInverse() * u;
}

MatC normalize_power(const MatC& a, const MatC& w_hat, double p_max) {
  const double total = (a * w_hat).squaredNorm();
  if (!(total > 0)) throw std::invalid_argument("normalize_power: zero transmit power");
  return std::sqrt(p_max / total) * w_hat;
}

std::vector<std::uint64_t> best_analog(const MatC& u, const MatC& w, const Codebook& cb) {
  const int n_tx = static_cast<int>(u.rows());
  const int n_rf = static_cast<int>(w.rows());
  const int m_users = static_cast<int>(u.cols());
  if (w.cols() != m_users) throw std::invalid_argument("best_analog: W/U column mismatch");
  if (cb.n_tx() != n_tx) throw std::invalid_argument("best_analog: codebook length mismatch");
  if (n_rf > 8) throw std::invalid_argument("best_analog: per-row enumeration limited to n_rf <= 8");

  // Row contribution of digit combination c: sum_n i^(d_n) w.row(n).
  const std::uint64_t n_combos = std::uint64_t{1} << (2 * n_rf);
  MatC combo_w(n_combos, m_users);
  for (std::uint64_t c = 0; c < n_combos; ++c) {
    Eigen::RowVectorXcd acc = Eigen::RowVectorXcd::Zero(m_users);
    for (int n = 0; n < n_rf; ++n)
      acc += quaternary_value(static_cast<int>((c >> (2 * n)) & 3)) * w.row(n);
    combo_w.row(c) = acc;
  }

  std::vector<std::uint64_t> idx(n_rf, 0);
  for (int t = 0; t < n_tx; ++t) {
    double best = std::numeric_limits<double>::infinity();
    std::uint64_t best_c = 0;
    for (std::uint64_t c = 0; c < n_combos; ++c) {
      const double cost = (u.row(t) - combo_w.row(c)).squaredNorm();
      if (cost < best) {
        best = cost;
        best_c = c;
      }
    }
    for (int n = 0; n < n_rf; ++n)
      idx[n] |= ((best_c >> (2 * n)) & 3) << (2 * t);
  }
  return idx;
}

MatC analog_from_indices(const std::vector<std::uint64_t>& idx, const Codebook& cb) {
  MatC a(cb.n_tx(), static_cast<int>(idx.size()));
  for (std::size_t n = 0; n < idx.size(); ++n) a.col(static_cast<int>(n)) = cb.decode(idx[n]);
  return a;
}

namespace {

// Initial analog guess: entrywise quaternary phase projection of the FDP
// columns (column n tracks user n mod M). Deterministic, which keeps the
// factorization labels consistent across samples.
std::vector<std::uint64_t> initial_analog(const MatC& u, int n_rf, const Codebook& cb) {
  std::vector<std::uint64_t> idx(n_rf, 0);
  for (int n = 0; n < n_rf; ++n) {
    const VecC src = u.col(n % u.cols());
    for (int t = 0; t < u.rows(); ++t) {
      int best_d = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (int d = 0; d < 4; ++d) {
        const double score = std::real(std::conj(quaternary_value(d)) * src[t]);
        if (score > best) {
          best = score;
          best_d = d;
        }
      }
      idx[n] |= static_cast<std::uint64_t>(best_d) << (2 * t);
    }
  }
  (void)cb;
  return idx;
}

double ls_objective(const MatC& u, const MatC& a) { return (u - a * ls_digital(a, u)).squaredNorm(); }

// Shortlist-based initial guess: rank the codebook by rank-1 fit to U, then
// pick the best LS combination of shortlist entries (exhaustive over pairs,
// greedy beyond two chains). Escapes the local minima the plain phase
// projection tends to start in.
std::vector<std::uint64_t> shortlist_init(const MatC& u, int n_rf, const Codebook& cb) {
  const std::uint64_t n_cand =
      std::min<std::uint64_t>(48, cb.size());
  std::vector<std::pair<double, std::uint64_t>> scored;
  scored.reserve(cb.size());
  for (std::uint64_t j = 0; j < cb.size(); ++j)
    scored.emplace_back(-(cb.decode(j).adjoint() * u).squaredNorm(), j);
  std::partial_sort(scored.begin(), scored.begin() + n_cand, scored.end());
  std::vector<std::uint64_t> cand(n_cand);
  for (std::uint64_t c = 0; c < n_cand; ++c) cand[c] = scored[c].second;

  std::vector<std::uint64_t> chosen = {cand[0]};
  if (n_rf >= 2) {
    // for each of the strongest rank-1 candidates, sweep the whole codebook
    // as partner using the closed-form 2-column projection objective
    const int n_tx = static_cast<int>(u.rows());
    const int m_users = static_cast<int>(u.cols());
    MatC p(cb.size(), m_users);  // p(j, m) = a_j^H u_m
    for (std::uint64_t j = 0; j < cb.size(); ++j)
      p.row(j) = (cb.decode(j).adjoint() * u);
    const double u_norm2 = u.squaredNorm();
    const std::uint64_t n_anchor = std::min<std::uint64_t>(16, n_cand);
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::uint64_t, std::uint64_t> best_pair{cand[0], cand[0] ^ 1};
    for (std::uint64_t ai = 0; ai < n_anchor; ++ai) {
      const std::uint64_t i = cand[ai];
      const VecC a_i = cb.decode(i);
      for (std::uint64_t j = 0; j < cb.size(); ++j) {
        if (j == i) continue;
        const Complex g = a_i.dot(cb.decode(j));  // a_i^H a_j
        const double det = double(n_tx) * n_tx - std::norm(g);
        if (det < 1e-9) continue;  // phase-duplicate column
        double proj = 0.0;
        for (int m = 0; m < m_users; ++m) {
          const Complex bi = p(i, m), bj = p(j, m);
          proj += (n_tx * (std::norm(bi) + std::norm(bj)) -
                   2.0 * std::real(std::conj(g) * std::conj(bj) * bi)) /
                  det;
        }
        const double obj = u_norm2 - proj;
        if (obj < best) {
          best = obj;
          best_pair = {i, j};
        }
      }
    }
    chosen = {best_pair.first, best_pair.second};
  }
  while (static_cast<int>(chosen.size()) < n_rf) {
    // greedy extension for wider analog stages
    double best = std::numeric_limits<double>::infinity();
    std::uint64_t pick = cand[0];
    MatC a(u.rows(), static_cast<int>(chosen.size()) + 1);
    for (std::size_t n = 0; n < chosen.size(); ++n)
      a.col(static_cast<int>(n)) = cb.decode(chosen[n]);
    for (const std::uint64_t c : cand) {
      a.col(static_cast<int>(chosen.size())) = cb.decode(c);
      const double obj = ls_objective(u, a);
      if (obj < best) {
        best = obj;
        pick = c;
      }
    }
    chosen.push_back(pick);
  }
  return chosen;
}

struct AlternationRun {
  std::vector<std::uint64_t> idx;
  std::vector<double> trace;
  int iterations = 0;
};

AlternationRun alternate(const MatC& u, const Codebook& cb,
                         std::vector<std::uint64_t> idx, int max_iter, double obj_tol) {
  AlternationRun run;
  MatC a = analog_from_indices(idx, cb);
  double prev_obj = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const MatC w = ls_digital(a, u);
    const double obj = (u - a * w).squaredNorm();
    run.trace.push_back(obj);
    run.iterations = it + 1;
    if (prev_obj - obj < obj_tol) break;
    prev_obj = obj;
    const std::vector<std::uint64_t> next = best_analog(u, w, cb);
    if (next == idx) break;
    idx = next;
    a = analog_from_indices(idx, cb);
  }
  run.idx = std::move(idx);
  return run;
}

}  // namespace

FactorizeResult factorize(const MatC& u, const Codebook& cb, int n_rf, double p_max,
                          int max_iter, double obj_tol) {
  if (max_iter < 1) throw std::invalid_argument("factorize: max_iter must be >= 1");
  if (n_rf < 1) throw std::invalid_argument("factorize: n_rf must be >= 1");
  FactorizeResult res;
  AlternationRun run = alternate(u, cb, shortlist_init(u, n_rf, cb), max_iter, obj_tol);
  const AlternationRun proj = alternate(u, cb, initial_analog(u, n_rf, cb), max_iter, obj_tol);
  if (proj.trace.back() < run.trace.back()) run = proj;
  std::vector<std::uint64_t> idx = run.idx;
  res.objective_trace = std::move(run.trace);
  res.iterations = run.iterations;

  // Canonical column order: ascending codeword index.
  std::vector<int> order(n_rf);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return idx[i] < idx[j]; });
  std::vector<std::uint64_t> sorted_idx(n_rf);
  for (int n = 0; n < n_rf; ++n) sorted_idx[n] = idx[order[n]];
  MatC a_sorted = analog_from_indices(sorted_idx, cb);
  MatC w_hat = ls_digital(a_sorted, u);

  res.pair.a = std::move(a_sorted);
  res.pair.a_idx = std::move(sorted_idx);
  res.pair.w = normalize_power(res.pair.a, w_hat, p_max);
  return res;
}

void export_analog_labels_csv(const std::string& path,
                              const std::vector<std::vector<std::uint64_t>>& labels) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_analog_labels_csv: cannot open " + path);
  os << "sample";
  if (!labels.empty())
    for (std::size_t n = 0; n < labels[0].size(); ++n) os << ",rf" << n;
  os << "\n";
  for (std::size_t s = 0; s < labels.size(); ++s) {
    os << s;
    for (const auto v : labels[s]) os << "," << v;
    os << "\n";
  }
}

std::vector<std::vector<std::uint64_t>> load_analog_labels_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_analog_labels_csv: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("load_analog_labels_csv: empty file");
  std::vector<std::vector<std::uint64_t>> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::uint64_t> row;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      if (first) {
        first = false;
        continue;
      }
      row.push_back(std::stoull(cell));
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace rhb
