#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rhb/neural.hpp"

#include <filesystem>
#include <random>
#include <unistd.h>

using namespace rhb;
using namespace rhb::nn;

namespace {

NetworkSpec small_classifier() {
  NetworkSpec s;
  s.input_dim = 3;
  s.n_fc = 3;
  s.hidden_width = 4;
  s.head = HeadKind::kClassification;
  s.n_heads = 2;
  s.n_classes = 3;
  return s;
}

NetworkSpec small_regressor() {
  NetworkSpec s;
  s.input_dim = 3;
  s.n_fc = 3;
  s.hidden_width = 4;
  s.head = HeadKind::kRegression;
  s.output_dim = 2;
  return s;
}

template <typename Scalar>
MatX<Scalar> random_mat(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  MatX<Scalar> m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = static_cast<Scalar>(nd(rng));
  return m;
}

/// Training-mode loss only (batch statistics), used as the finite-difference
/// reference. Running-stat updates do not affect the returned loss.
double training_loss(Model<double>& m, const MatX<double>& x, const Eigen::MatrixXi& labels,
                     const MatX<double>& targets) {
  auto grads = Gradients<double>::zeros_like(m);
  return forward_backward(m, x, labels, targets, grads);
}

/// Max relative error between analytic gradients and central differences.
double gradient_check(const NetworkSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Model<double> model = Model<double>::init(spec, seed);
  const int batch = 5;
  const MatX<double> x = random_mat<double>(batch, spec.input_dim, rng);
  Eigen::MatrixXi labels;
  MatX<double> targets;
  if (spec.head == HeadKind::kClassification) {
    labels.resize(batch, spec.n_heads);
    std::uniform_int_distribution<int> ud(0, spec.n_classes - 1);
    for (int r = 0; r < batch; ++r)
      for (int h = 0; h < spec.n_heads; ++h) labels(r, h) = ud(rng);
  } else {
    targets = random_mat<double>(batch, spec.output_dim, rng);
  }

  auto grads = Gradients<double>::zeros_like(model);
  forward_backward(model, x, labels, targets, grads);

  const double h = 1e-5;
  double worst = 0.0;
  std::vector<std::pair<double*, Eigen::Index>> params, grad_ts;
  model.for_each_tensor([&](auto& t) { params.emplace_back(t.data(), t.size()); });
  grads.for_each_tensor([&](auto& t) { grad_ts.emplace_back(t.data(), t.size()); });

  std::uniform_int_distribution<int> pick_t(0, static_cast<int>(params.size()) - 1);
  for (int trial = 0; trial < 60; ++trial) {
    const int ti = pick_t(rng);
    auto [data, size] = params[ti];
    if (size == 0) continue;
    std::uniform_int_distribution<int> pick_e(0, static_cast<int>(size) - 1);
    const int e = pick_e(rng);
    const double orig = data[e];
    data[e] = orig + h;
    const double lp = training_loss(model, x, labels, targets);
    data[e] = orig - h;
    const double lm = training_loss(model, x, labels, targets);
    data[e] = orig;
    const double fd = (lp - lm) / (2 * h);
    const double an = grad_ts[ti].first[e];
    // floor the denominator above the central-difference roundoff level
    // (~eps/h) so near-zero gradients are not compared against pure noise
    const double scale = std::max({std::abs(fd), std::abs(an), 1e-4});
    worst = std::max(worst, std::abs(fd - an) / scale);
  }
  return worst;
}

template <typename Scalar>
std::vector<VecX<Scalar>> flatten_params(Model<Scalar>& m) {
  std::vector<VecX<Scalar>> out;
  m.for_each_tensor([&](auto& t) {
    out.emplace_back(Eigen::Map<const VecX<Scalar>>(t.data(), t.size()));
  });
  return out;
}

}  // namespace

TEST_CASE("leaky ReLU values and finite-difference slope") {
  CHECK(leaky_relu(2.0) == 2.0);
  CHECK(leaky_relu(-3.0) == doctest::Approx(-0.03).epsilon(1e-15));
  CHECK(leaky_relu(0.0) == 0.0);
  const double h = 1e-7;
  CHECK((leaky_relu(1.0 + h) - leaky_relu(1.0 - h)) / (2 * h) ==
        doctest::Approx(1.0).epsilon(1e-6));
  CHECK((leaky_relu(-1.0 + h) - leaky_relu(-1.0 - h)) / (2 * h) ==
        doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("zeroed final layer yields uniform class probabilities") {
  const NetworkSpec spec = small_classifier();
  Model<double> m = Model<double>::init(spec, 1);
  m.layers.back().w.setZero();
  m.layers.back().b.setZero();
  std::mt19937_64 rng(2);
  const MatX<double> x = random_mat<double>(4, spec.input_dim, rng);
  const MatX<double> probs = m.head_probs(m.forward(x));
  for (int r = 0; r < probs.rows(); ++r)
    for (int c = 0; c < probs.cols(); ++c)
      CHECK(probs(r, c) == doctest::Approx(1.0 / spec.n_classes).epsilon(1e-12));
}

TEST_CASE("per-head probabilities sum to one") {
  const NetworkSpec spec = small_classifier();
  Model<double> m = Model<double>::init(spec, 3);
  std::mt19937_64 rng(4);
  const MatX<double> probs = m.head_probs(m.forward(random_mat<double>(6, 3, rng)));
  for (int r = 0; r < probs.rows(); ++r)
    for (int h = 0; h < spec.n_heads; ++h)
      CHECK(probs.row(r).segment(h * spec.n_classes, spec.n_classes).sum() ==
            doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("batch-of-1 inference equals the matching row of a batch") {
  const NetworkSpec spec = small_regressor();
  Model<double> m = Model<double>::init(spec, 5);
  std::mt19937_64 rng(6);
  const MatX<double> x = random_mat<double>(7, 3, rng);
  const MatX<double> batch_out = m.forward(x);
  for (int r = 0; r < x.rows(); ++r) {
    const MatX<double> one = m.forward(x.row(r));
    CHECK((one.row(0) - batch_out.row(r)).norm() < 1e-12);
  }
}

TEST_CASE("cross-entropy at one-hot truth is zero, uniform is log L") {
  const int n_classes = 4;
  Eigen::MatrixXi labels(1, 2);
  labels << 1, 3;
  MatX<double> onehot = MatX<double>::Zero(1, 8);
  onehot(0, 1) = 1.0;
  onehot(0, 4 + 3) = 1.0;
  CHECK(cel_loss(onehot, labels, n_classes) == doctest::Approx(0.0).epsilon(1e-9));
  const MatX<double> uniform = MatX<double>::Constant(1, 8, 0.25);
  CHECK(cel_loss(uniform, labels, n_classes) ==
        doctest::Approx(2 * std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("MSE basics") {
  MatX<double> a(1, 1), b(1, 1);
  a << 3.0;
  b << 1.0;
  CHECK(mse_loss(a, b) == 4.0);
  CHECK(mse_loss(a, a) == 0.0);
}

TEST_CASE("classification gradients match central differences") {
  CHECK(gradient_check(small_classifier(), 11) < 1e-5);
}

TEST_CASE("regression gradients match central differences") {
  CHECK(gradient_check(small_regressor(), 12) < 1e-5);
}

TEST_CASE("gradients stay correct without batch norm") {
  NetworkSpec s = small_regressor();
  s.batch_norm = false;
  CHECK(gradient_check(s, 13) < 1e-5);
}

TEST_CASE("Adam with zero gradients and no decay leaves parameters unchanged") {
  const NetworkSpec spec = small_regressor();
  Model<double> m = Model<double>::init(spec, 7);
  const auto before = flatten_params(m);
  Adam<double> opt(m, 1e-3, 0.0);
  auto grads = Gradients<double>::zeros_like(m);
  opt.step(m, grads);
  const auto after = flatten_params(m);
  double diff = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) diff += (after[i] - before[i]).norm();
  CHECK(diff == 0.0);
}

TEST_CASE("Adam first step moves by about lr") {
  // scalar parameter, constant gradient: |m_hat / (sqrt(v_hat) + eps)| ~ 1
  NetworkSpec s;
  s.input_dim = 1;
  s.n_fc = 2;
  s.hidden_width = 1;
  s.batch_norm = false;
  s.head = HeadKind::kRegression;
  s.output_dim = 1;
  Model<double> m = Model<double>::init(s, 8);
  const double w0 = m.layers[0].w(0, 0);
  Adam<double> opt(m, 1e-3, 0.0);
  auto grads = Gradients<double>::zeros_like(m);
  grads.layers[0].w(0, 0) = 5.0;
  opt.step(m, grads);
  CHECK(std::abs(m.layers[0].w(0, 0) - w0) == doctest::Approx(1e-3).epsilon(1e-4));
}

TEST_CASE("Adam solves a linear-regression toy") {
  // y = 2x - 1 with a single linear layer (no BN, identity-friendly)
  NetworkSpec s;
  s.input_dim = 1;
  s.n_fc = 2;
  s.hidden_width = 8;
  s.head = HeadKind::kRegression;
  s.output_dim = 1;
  std::mt19937_64 rng(9);
  const int n = 64;
  MatX<double> x = random_mat<double>(n, 1, rng);
  MatX<double> y = 2.0 * x;
  y.array() -= 1.0;
  Model<double> m = Model<double>::init(s, 10);
  Adam<double> opt(m, 1e-2, 0.0);
  Eigen::MatrixXi no_labels;
  double first = 0.0, last = 0.0;
  for (int it = 0; it < 100; ++it) {
    auto grads = Gradients<double>::zeros_like(m);
    const double loss = forward_backward(m, x, no_labels, y, grads);
    if (it == 0) first = loss;
    last = loss;
    opt.step(m, grads);
  }
  CHECK(last < 0.05 * first);  // closed-form optimum is 0 (realizable map)
}

TEST_CASE("delta of a sounding codeword is a unit coordinate vector") {
  const SSMatrix ss = ss_matrix(6, 4, 1);
  const MatC u = ss.codeword(0);
  const DeltaTargets d = delta_targets(u, ss);
  REQUIRE(d.delta.rows() == 1);
  REQUIRE(d.delta.cols() == 4);
  CHECK(std::abs(d.delta(0, 0) - Complex(1, 0)) < 1e-12);
  for (int k = 1; k < 4; ++k) CHECK(std::abs(d.delta(0, k)) < 1e-12);
}

TEST_CASE("K = N_T orthogonal sounding: delta is B^H u / N_T, reconstruction exact") {
  const SSMatrix ss = ss_matrix(4, 4, 1);
  std::mt19937_64 rng(14);
  MatC u(4, 2);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 2; ++c) {
      std::normal_distribution<double> nd;
      u(r, c) = Complex(nd(rng), nd(rng));
    }
  const DeltaTargets d = delta_targets(u, ss);
  const MatC expect = (ss.columns().adjoint() * u / 4.0).transpose();
  CHECK((d.delta - expect).norm() < 1e-12);
  CHECK((delta_reconstruct(d, ss) - u).norm() < 1e-12);
}

TEST_CASE("K=8 > N_T=6: pseudo-inverse reconstruction residual vanishes") {
  const SSMatrix ss = ss_matrix(6, 8, 1);
  std::mt19937_64 rng(15);
  std::normal_distribution<double> nd;
  MatC u(6, 2);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 2; ++c) u(r, c) = Complex(nd(rng), nd(rng));
  const DeltaTargets d = delta_targets(u, ss);
  CHECK((delta_reconstruct(d, ss) - u).norm() <= 1e-10);
}

TEST_CASE("flatten layouts round-trip") {
  std::mt19937_64 rng(16);
  std::normal_distribution<double> nd;
  DeltaTargets d;
  d.delta.resize(2, 8);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 8; ++c) d.delta(r, c) = Complex(nd(rng), nd(rng));
  const VecR y = flatten_delta(d);
  REQUIRE(y.size() == 32);
  CHECK(y[2 * (1 * 8 + 3)] == d.delta(1, 3).real());
  CHECK(y[2 * (1 * 8 + 3) + 1] == d.delta(1, 3).imag());
  const DeltaTargets back = unflatten_delta(y, 2, 8);
  CHECK((back.delta - d.delta).norm() == 0.0);

  MatR alpha(8, 2);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 2; ++c) alpha(r, c) = nd(rng);
  const VecR x = flatten_rssi(alpha);
  CHECK(x[1 * 8 + 5] == alpha(5, 1));
}

TEST_CASE("perfect constant models pass labels through predict_precoders") {
  const int n_tx = 6, k_ss = 8, n_users = 2, n_rf = 2;
  const SSMatrix ss = ss_matrix(n_tx, k_ss, 1);
  const Codebook cb = Codebook::full(n_tx);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  MatC u(n_tx, n_users);
  for (int r = 0; r < n_tx; ++r)
    for (int c = 0; c < n_users; ++c) u(r, c) = Complex(nd(rng), nd(rng));
  const std::vector<std::uint64_t> a_idx = {137, 2211};

  // constant-output nets: zero everything, write the targets into the head bias
  NetworkSpec aspec;
  aspec.input_dim = k_ss * n_users;
  aspec.n_fc = 2;
  aspec.hidden_width = 4;
  aspec.head = HeadKind::kClassification;
  aspec.n_heads = n_rf;
  aspec.n_classes = static_cast<int>(cb.size());
  Model<double> amodel = Model<double>::init(aspec, 18);
  amodel.layers.back().w.setZero();
  amodel.layers.back().b.setZero();
  for (int h = 0; h < n_rf; ++h)
    amodel.layers.back().b[h * aspec.n_classes + static_cast<int>(a_idx[h])] = 10.0;

  NetworkSpec dspec;
  dspec.input_dim = k_ss * n_users;
  dspec.n_fc = 2;
  dspec.hidden_width = 4;
  dspec.head = HeadKind::kRegression;
  dspec.output_dim = 2 * k_ss * n_users;
  Model<double> dmodel = Model<double>::init(dspec, 19);
  dmodel.layers.back().w.setZero();
  const VecR target = flatten_delta(delta_targets(u, ss));
  for (int i = 0; i < target.size(); ++i) dmodel.layers.back().b[i] = target[i];

  RssiFeedback fb;
  fb.alpha = MatR::Constant(k_ss, n_users, 0.5);
  const double p_max = 1.0;
  const PrecoderPair pair = predict_precoders(amodel, dmodel, fb, ss, cb, p_max);
  CHECK(pair.a_idx == a_idx);
  const MatC a = analog_from_indices(a_idx, cb);
  const MatC w_expect = normalize_power(a, ls_digital(a, u), p_max);
  CHECK((pair.w - w_expect).norm() < 1e-9);
  CHECK(std::abs((pair.a * pair.w).squaredNorm() - p_max) < 1e-10);
}

TEST_CASE("training loss decreases on a desk-scale regression problem") {
  NetworkSpec s;
  s.input_dim = 4;
  s.n_fc = 3;
  s.hidden_width = 16;
  s.head = HeadKind::kRegression;
  s.output_dim = 2;
  std::mt19937_64 rng(20);
  Dataset<double> data;
  data.x = random_mat<double>(400, 4, rng);
  data.y.resize(400, 2);
  for (int r = 0; r < 400; ++r) {
    data.y(r, 0) = std::sin(data.x(r, 0)) + 0.3 * data.x(r, 1);
    data.y(r, 1) = data.x(r, 2) * data.x(r, 3);
  }
  TrainHyper hp;
  hp.epochs = 5;
  hp.batch_size = 64;
  hp.patience = 10;
  auto [model, curves] = train(s, data, hp);
  REQUIRE(curves.train_loss.size() == 5);
  CHECK(curves.train_loss.back() < curves.train_loss.front());
}

TEST_CASE("small network overfits 100 samples to near zero") {
  NetworkSpec s;
  s.input_dim = 3;
  s.n_fc = 3;
  s.hidden_width = 32;
  s.head = HeadKind::kRegression;
  s.output_dim = 1;
  std::mt19937_64 rng(21);
  Dataset<double> data;
  data.x = random_mat<double>(100, 3, rng);
  data.y = data.x * random_mat<double>(3, 1, rng);  // realizable linear map
  TrainHyper hp;
  hp.epochs = 300;
  hp.batch_size = 100;
  hp.patience = 300;
  hp.val_frac = 0.05;
  hp.lr = 3e-3;
  auto [model, curves] = train(s, data, hp);
  CHECK(curves.train_loss.back() < 1e-3);
}

TEST_CASE("same seed reproduces training bit for bit") {
  NetworkSpec s = small_regressor();
  std::mt19937_64 rng(22);
  Dataset<float> data;
  data.x = random_mat<float>(50, 3, rng);
  data.y = random_mat<float>(50, 2, rng);
  TrainHyper hp;
  hp.epochs = 3;
  hp.batch_size = 16;
  auto [m1, c1] = train(s, data, hp);
  auto [m2, c2] = train(s, data, hp);
  CHECK(c1.train_loss == c2.train_loss);
  const auto t1 = flatten_params(m1);
  const auto t2 = flatten_params(m2);
  REQUIRE(t1.size() == t2.size());
  bool identical = true;
  for (std::size_t i = 0; i < t1.size(); ++i)
    if (t1[i] != t2[i]) identical = false;
  CHECK(identical);
}

TEST_CASE("parameter count formula: minimal and paper-scale specs") {
  NetworkSpec tiny;
  tiny.input_dim = 1;
  tiny.n_fc = 2;
  tiny.hidden_width = 1;
  tiny.batch_norm = false;
  tiny.head = HeadKind::kRegression;
  tiny.output_dim = 1;
  CHECK(count_parameters(tiny) == 4);  // 1x1 w + b, twice

  NetworkSpec analog;
  analog.input_dim = 16;
  analog.n_fc = 7;
  analog.hidden_width = 512;
  analog.head = HeadKind::kClassification;
  analog.n_heads = 2;
  analog.n_classes = 4096;
  NetworkSpec delta;
  delta.input_dim = 16;
  delta.n_fc = 7;
  delta.hidden_width = 512;
  delta.head = HeadKind::kRegression;
  delta.output_dim = 32;
  const double combined =
      static_cast<double>(count_parameters(analog) + count_parameters(delta));
  CHECK(std::abs(combined - 6.8e6) / 6.8e6 < 0.02);
}

TEST_CASE("parameter count matches direct enumeration of allocated tensors") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 3; ++trial) {
    NetworkSpec s;
    s.input_dim = 2 + static_cast<int>(rng() % 10);
    s.n_fc = 2 + static_cast<int>(rng() % 4);
    s.hidden_width = 1 + static_cast<int>(rng() % 20);
    if (rng() % 2) {
      s.head = HeadKind::kClassification;
      s.n_heads = 1 + static_cast<int>(rng() % 3);
      s.n_classes = 2 + static_cast<int>(rng() % 9);
    } else {
      s.head = HeadKind::kRegression;
      s.output_dim = 1 + static_cast<int>(rng() % 7);
    }
    Model<double> m = Model<double>::init(s, rng());
    std::int64_t counted = 0;
    for (const auto& l : m.layers) {
      counted += l.w.size() + l.b.size();
      if (l.has_bn) counted += l.gamma.size() + l.beta.size();
    }
    CHECK(counted == count_parameters(s));
  }
}

TEST_CASE("model files round-trip through save and load") {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("rhb_nn_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "model.bin").string();
  const NetworkSpec s = small_classifier();
  Model<float> m = Model<float>::init(s, 24);
  // make running stats non-trivial before the round trip
  std::mt19937_64 rng(25);
  auto grads = Gradients<float>::zeros_like(m);
  Eigen::MatrixXi labels(4, 2);
  labels.setZero();
  forward_backward(m, random_mat<float>(4, 3, rng), labels, MatX<float>{}, grads);
  save_model(path, m);
  const Model<float> back = load_model<float>(path);
  const MatX<float> x = random_mat<float>(5, 3, rng);
  CHECK((m.forward(x) - back.forward(x)).norm() < 1e-6);
  std::filesystem::remove_all(dir);
}
