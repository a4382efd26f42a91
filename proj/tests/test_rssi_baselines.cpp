#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rhb/beam_training.hpp"
#include "rhb/rssi_baselines.hpp"

using namespace rhb;

namespace {

RssiFeedback fb_from(const MatR& alpha) {
  RssiFeedback fb;
  fb.alpha = alpha;
  return fb;
}

}  // namespace

TEST_CASE("max_direction picks the argmax burst") {
  const SSMatrix ss = ss_matrix(4, 3, 1);
  MatR alpha(3, 1);
  alpha << 0.1, 0.9, 0.3;
  const MatC u = max_direction_dirs(fb_from(alpha), ss);
  CHECK((u.col(0) - ss.codeword(1)).norm() < 1e-14);
}

TEST_CASE("max_direction ties go to the earliest burst") {
  const SSMatrix ss = ss_matrix(4, 2, 1);
  MatR alpha(2, 1);
  alpha << 0.5, 0.5;
  const MatC u = max_direction_dirs(fb_from(alpha), ss);
  CHECK((u.col(0) - ss.codeword(0)).norm() < 1e-14);
}

TEST_CASE("noiseless matched sounding selects the matching codeword") {
  const SSMatrix ss = ss_matrix(6, 4, 1);
  const int k0 = 3;
  ChannelSet ch{MatC(1, 6)};
  ch.h.row(0) = ss.codeword(k0).adjoint();
  std::mt19937_64 rng(1);
  const MatR raw = measure_rssi(ch, ss, 0.0, rng);
  const RssiScale scale = calibrate_beta({raw});
  const RssiFeedback fb = quantize(normalize_rssi(raw, scale), 0);
  const MatC u = max_direction_dirs(fb, ss);
  CHECK((u.col(0) - ss.codeword(k0)).norm() < 1e-14);
}

TEST_CASE("MRC with a single nonzero weight returns that codeword") {
  const SSMatrix ss = ss_matrix(4, 3, 1);
  MatR alpha = MatR::Zero(3, 1);
  alpha(2, 0) = 0.4;
  const MatC u = mrc_combine_dirs(fb_from(alpha), ss);
  CHECK((u.col(0) - ss.codeword(2)).norm() < 1e-14);
}

TEST_CASE("uniform MRC over orthogonal rows is their mean with norm N_T/K") {
  const SSMatrix ss = ss_matrix(4, 2, 1);
  MatR alpha = MatR::Constant(2, 1, 0.6);
  const MatC u = mrc_combine_dirs(fb_from(alpha), ss);
  const VecC mean = (ss.codeword(0) + ss.codeword(1)) / 2.0;
  CHECK((u.col(0) - mean).norm() < 1e-14);
  CHECK(u.col(0).squaredNorm() == doctest::Approx(4.0 / 2.0).epsilon(1e-12));
}

TEST_CASE("MRC weights form the stated convex combination") {
  const SSMatrix ss = ss_matrix(4, 2, 1);
  MatR alpha(2, 1);
  alpha << 0.2, 0.8;
  const MatC u = mrc_combine_dirs(fb_from(alpha), ss);
  const VecC expect = 0.2 * ss.codeword(0) + 0.8 * ss.codeword(1);
  CHECK((u.col(0) - expect).norm() < 1e-14);
}

TEST_CASE("both baselines split the power budget equally across users") {
  const SSMatrix ss = ss_matrix(6, 4, 1);
  MatR alpha(4, 2);
  alpha << 0.1, 0.4, 0.9, 0.2, 0.3, 0.8, 0.2, 0.1;
  const double p_max = 2.5;
  for (const MatC& u : {max_direction(fb_from(alpha), ss, p_max),
                        mrc_combine(fb_from(alpha), ss, p_max)}) {
    for (int m = 0; m < 2; ++m)
      CHECK(u.col(m).squaredNorm() == doctest::Approx(p_max / 2).epsilon(1e-12));
    CHECK(u.squaredNorm() == doctest::Approx(p_max).epsilon(1e-12));
  }
}

TEST_CASE("direction choice is invariant to feedback scaling") {
  const SSMatrix ss = ss_matrix(6, 4, 1);
  MatR alpha(4, 1);
  alpha << 0.1, 0.7, 0.3, 0.2;
  const MatC a = max_direction(fb_from(alpha), ss, 1.0);
  const MatC b = max_direction(fb_from((0.5 * alpha).eval()), ss, 1.0);
  CHECK((a - b).norm() < 1e-14);
  // MRC directions are scale invariant too (weights are normalized by the sum)
  const MatC c = mrc_combine_dirs(fb_from(alpha), ss);
  const MatC d = mrc_combine_dirs(fb_from((0.5 * alpha).eval()), ss);
  CHECK((c - d).norm() < 1e-12);
}

TEST_CASE("users are handled independently (column permutation equivariance)") {
  const SSMatrix ss = ss_matrix(6, 4, 1);
  MatR alpha(4, 2);
  alpha << 0.1, 0.4, 0.9, 0.2, 0.3, 0.8, 0.2, 0.1;
  MatR swapped = alpha;
  swapped.col(0).swap(swapped.col(1));
  const MatC u = mrc_combine(fb_from(alpha), ss, 1.0);
  const MatC v = mrc_combine(fb_from(swapped), ss, 1.0);
  CHECK((u.col(0) - v.col(1)).norm() < 1e-14);
  CHECK((u.col(1) - v.col(0)).norm() < 1e-14);
}

TEST_CASE("all-zero feedback is rejected with the offending user named") {
  const SSMatrix ss = ss_matrix(4, 3, 1);
  MatR alpha = MatR::Zero(3, 2);
  alpha(0, 0) = 0.5;  // user 1 has no signal at all
  CHECK_THROWS_WITH_AS(mrc_combine(fb_from(alpha), ss, 1.0), doctest::Contains("user 1"),
                       std::runtime_error);
}

TEST_CASE("shape mismatches are rejected") {
  const SSMatrix ss = ss_matrix(4, 3, 1);
  MatR alpha = MatR::Constant(2, 1, 0.5);  // 2 rows vs 3 bursts
  CHECK_THROWS_AS(max_direction(fb_from(alpha), ss, 1.0), std::invalid_argument);
}
