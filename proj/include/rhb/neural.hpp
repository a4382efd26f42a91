#pragma once

#include "rhb/codebook.hpp"
#include "rhb/hybrid.hpp"
#include "rhb/beam_training.hpp"
#include "rhb/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace rhb::nn {

enum class HeadKind { kClassification, kRegression };

/// Architecture of one fully connected network: n_fc linear layers, the
/// first n_fc - 1 of width hidden_width with batch norm and leaky ReLU,
/// then a task head (per-RF-chain codeword classifier or plain regression).
struct NetworkSpec {
  int input_dim = 1;
  int n_fc = 7;
  int hidden_width = 512;
  double leaky_slope = 0.01;
  bool batch_norm = true;
  HeadKind head = HeadKind::kRegression;
  int n_heads = 1;    // classification heads
  int n_classes = 1;  // labels per head
  int output_dim = 1; // regression outputs

  int head_output_dim() const {
    return head == HeadKind::kClassification ? n_heads * n_classes : output_dim;
  }
  void validate() const;
  /// Layer widths, length n_fc + 1: [input, hidden.., output].
  std::vector<int> layer_dims() const;
};

/// Learnable parameter count (weights, biases, batch-norm gamma/beta).
std::int64_t count_parameters(const NetworkSpec& spec);

inline double leaky_relu(double x, double slope = 0.01) { return x >= 0 ? x : slope * x; }

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

constexpr double kBnEps = 1e-5;
constexpr double kLogClamp = 1e-12;

/// In-place per-head softmax over the trailing dimension.
template <typename Scalar>
void softmax_heads(MatX<Scalar>& logits, int n_heads, int n_classes) {
  for (int r = 0; r < logits.rows(); ++r)
    for (int h = 0; h < n_heads; ++h) {
      auto seg = logits.row(r).segment(h * n_classes, n_classes);
      const Scalar mx = seg.maxCoeff();
      seg = (seg.array() - mx).exp().matrix();
      seg /= seg.sum();
    }
}

template <typename Scalar>
struct Model {
  struct Layer {
    MatX<Scalar> w;  // out x in
    VecX<Scalar> b;
    bool has_bn = false;
    VecX<Scalar> gamma, beta, running_mean, running_var;
  };

  NetworkSpec spec;
  std::vector<Layer> layers;

  static Model init(const NetworkSpec& s, std::uint64_t seed) {
    s.validate();
    Model m;
    m.spec = s;
    std::mt19937_64 rng(seed);
    const auto dims = s.layer_dims();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      Layer layer;
      const int in = dims[l], out = dims[l + 1];
      // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
      // Noticeably outperforms He-normal here: with BN hidden layers the
      // larger He scale mostly inflates the unnormalized head layer.
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      std::uniform_real_distribution<double> uni(-bound, bound);
      layer.w = MatX<Scalar>::NullaryExpr(
          out, in, [&]() { return static_cast<Scalar>(uni(rng)); });
      layer.b = VecX<Scalar>::NullaryExpr(
          out, [&]() { return static_cast<Scalar>(uni(rng)); });
      const bool hidden = l + 2 < dims.size();
      if (hidden && s.batch_norm) {
        layer.has_bn = true;
        layer.gamma = VecX<Scalar>::Ones(out);
        layer.beta = VecX<Scalar>::Zero(out);
        layer.running_mean = VecX<Scalar>::Zero(out);
        layer.running_var = VecX<Scalar>::Ones(out);
      }
      m.layers.push_back(std::move(layer));
    }
    return m;
  }

  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    for (auto& l : layers) {
      fn(l.w);
      fn(l.b);
      if (l.has_bn) {
        fn(l.gamma);
        fn(l.beta);
      }
    }
  }

  /// Inference-mode forward (running BN statistics); returns the raw head
  /// output: logits for classification, values for regression.
  MatX<Scalar> forward(const MatX<Scalar>& x) const {
    if (x.cols() != spec.input_dim)
      throw std::invalid_argument("Model::forward: expected input width " +
                                  std::to_string(spec.input_dim));
    MatX<Scalar> act = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& layer = layers[l];
      MatX<Scalar> z = (act * layer.w.transpose()).rowwise() + layer.b.transpose();
      if (l + 1 == layers.size()) return z;
      if (layer.has_bn) {
        for (int j = 0; j < z.cols(); ++j) {
          const Scalar inv = Scalar(1) / std::sqrt(layer.running_var[j] + Scalar(kBnEps));
          z.col(j) = ((z.col(j).array() - layer.running_mean[j]) * inv * layer.gamma[j] +
                      layer.beta[j])
                         .matrix();
        }
      }
      const Scalar slope = static_cast<Scalar>(spec.leaky_slope);
      act = z.unaryExpr([slope](Scalar v) { return v >= Scalar(0) ? v : slope * v; });
    }
    return act;
  }

  /// Per-head softmax over classification logits.
  MatX<Scalar> head_probs(const MatX<Scalar>& logits) const {
    if (spec.head != HeadKind::kClassification)
      throw std::logic_error("head_probs: regression network has no class probabilities");
    MatX<Scalar> p = logits;
    softmax_heads(p, spec.n_heads, spec.n_classes);
    return p;
  }
};

/// Gradients mirror the model tensor layout.
template <typename Scalar>
struct Gradients {
  struct Layer {
    MatX<Scalar> w;
    VecX<Scalar> b, gamma, beta;
    bool has_bn = false;
  };
  std::vector<Layer> layers;

  static Gradients zeros_like(const Model<Scalar>& m) {
    Gradients g;
    for (const auto& l : m.layers) {
      Layer gl;
      gl.w = MatX<Scalar>::Zero(l.w.rows(), l.w.cols());
      gl.b = VecX<Scalar>::Zero(l.b.size());
      gl.has_bn = l.has_bn;
      if (l.has_bn) {
        gl.gamma = VecX<Scalar>::Zero(l.gamma.size());
        gl.beta = VecX<Scalar>::Zero(l.beta.size());
      }
      g.layers.push_back(std::move(gl));
    }
    return g;
  }

  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    for (auto& l : layers) {
      fn(l.w);
      fn(l.b);
      if (l.has_bn) {
        fn(l.gamma);
        fn(l.beta);
      }
    }
  }
};

/// Cross-entropy summed over heads, averaged over the batch. `probs` holds
/// per-head distributions (batch x n_heads*n_classes), `labels` one class id
/// per head (batch x n_heads). Zero probabilities at the label are clamped.
template <typename Scalar>
double cel_loss(const MatX<Scalar>& probs, const Eigen::MatrixXi& labels, int n_classes) {
  if (probs.rows() != labels.rows())
    throw std::invalid_argument("cel_loss: batch size mismatch");
  const int n_heads = static_cast<int>(labels.cols());
  double loss = 0.0;
  for (int r = 0; r < probs.rows(); ++r)
    for (int h = 0; h < n_heads; ++h) {
      const double p = static_cast<double>(probs(r, h * n_classes + labels(r, h)));
      loss -= std::log(std::max(p, kLogClamp));
    }
  return loss / probs.rows();
}

/// Mean squared error over every output scalar in the batch.
template <typename Scalar>
double mse_loss(const MatX<Scalar>& pred, const MatX<Scalar>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw std::invalid_argument("mse_loss: shape mismatch");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

/// Training-mode forward/backward pass. Returns the loss and fills `grads`.
/// For classification `labels` is used; for regression `targets`.
template <typename Scalar>
double forward_backward(Model<Scalar>& model, const MatX<Scalar>& x,
                        const Eigen::MatrixXi& labels, const MatX<Scalar>& targets,
                        Gradients<Scalar>& grads, double bn_momentum = 0.1) {
  const auto& spec = model.spec;
  const int batch = static_cast<int>(x.rows());
  const Scalar slope = static_cast<Scalar>(spec.leaky_slope);
  const std::size_t n_layers = model.layers.size();

  std::vector<MatX<Scalar>> inputs(n_layers);       // input to each linear layer
  std::vector<MatX<Scalar>> lin_out(n_layers);      // pre-BN linear output
  std::vector<MatX<Scalar>> bn_xhat(n_layers);      // normalized pre-affine
  std::vector<MatX<Scalar>> act_in(n_layers);       // input of leaky ReLU
  std::vector<VecX<Scalar>> bn_mean(n_layers), bn_var(n_layers);

  MatX<Scalar> act = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    auto& layer = model.layers[l];
    inputs[l] = act;
    MatX<Scalar> z = (act * layer.w.transpose()).rowwise() + layer.b.transpose();
    if (l + 1 == n_layers) {
      act = std::move(z);
      break;
    }
    if (layer.has_bn) {
      lin_out[l] = z;
      VecX<Scalar> mean = z.colwise().mean().transpose();
      VecX<Scalar> var(z.cols());
      for (int j = 0; j < z.cols(); ++j)
        var[j] = (z.col(j).array() - mean[j]).square().sum() / Scalar(batch);
      MatX<Scalar> xhat(z.rows(), z.cols());
      for (int j = 0; j < z.cols(); ++j) {
        const Scalar inv = Scalar(1) / std::sqrt(var[j] + Scalar(kBnEps));
        xhat.col(j) = (z.col(j).array() - mean[j]) * inv;
        z.col(j) = xhat.col(j) * layer.gamma[j] + VecX<Scalar>::Constant(batch, layer.beta[j]);
      }
      bn_mean[l] = mean;
      bn_var[l] = var;
      bn_xhat[l] = std::move(xhat);
      layer.running_mean = (Scalar(1) - Scalar(bn_momentum)) * layer.running_mean +
                           Scalar(bn_momentum) * mean;
      layer.running_var = (Scalar(1) - Scalar(bn_momentum)) * layer.running_var +
                          Scalar(bn_momentum) * var;
    }
    act_in[l] = z;
    act = z.unaryExpr([slope](Scalar v) { return v >= Scalar(0) ? v : slope * v; });
  }

  // Head loss and gradient w.r.t. the head output.
  double loss = 0.0;
  MatX<Scalar> delta;
  if (spec.head == HeadKind::kClassification) {
    MatX<Scalar> probs = act;
    softmax_heads(probs, spec.n_heads, spec.n_classes);
    loss = cel_loss(probs, labels, spec.n_classes);
    delta = probs;
    for (int r = 0; r < delta.rows(); ++r)
      for (int h = 0; h < spec.n_heads; ++h)
        delta(r, h * spec.n_classes + labels(r, h)) -= Scalar(1);
    delta /= Scalar(batch);
  } else {
    loss = mse_loss(act, targets);
    delta = (act - targets) * Scalar(2) / Scalar(act.size());
  }

  // Backward sweep.
  for (std::size_t li = n_layers; li-- > 0;) {
    auto& layer = model.layers[li];
    auto& g = grads.layers[li];
    if (li + 1 != n_layers) {
      // through leaky ReLU
      delta = delta.binaryExpr(act_in[li], [slope](Scalar d, Scalar z) {
        return z >= Scalar(0) ? d : slope * d;
      });
      if (layer.has_bn) {
        const Scalar n = Scalar(batch);
        for (int j = 0; j < delta.cols(); ++j) {
          const Scalar inv = Scalar(1) / std::sqrt(bn_var[li][j] + Scalar(kBnEps));
          const Eigen::Array<Scalar, Eigen::Dynamic, 1> xhat = bn_xhat[li].col(j).array();
          const Eigen::Array<Scalar, Eigen::Dynamic, 1> dout = delta.col(j).array();
          g.gamma[j] += (dout * xhat).sum();
          g.beta[j] += dout.sum();
          const Eigen::Array<Scalar, Eigen::Dynamic, 1> dxhat = dout * layer.gamma[j];
          const Scalar sum_dxhat = dxhat.sum();
          const Scalar sum_dxhat_xhat = (dxhat * xhat).sum();
          delta.col(j) = ((inv / n) * (n * dxhat - sum_dxhat - xhat * sum_dxhat_xhat)).matrix();
        }
      }
    }
    g.w.noalias() += delta.transpose() * inputs[li];
    g.b += delta.colwise().sum().transpose();
    if (li > 0) delta = (delta * layer.w).eval();
  }
  return loss;
}

/// Adam with L2 regularization folded into the gradients.
template <typename Scalar>
class Adam {
 public:
  Adam(Model<Scalar>& model, double lr, double weight_decay)
      : lr_(lr), weight_decay_(weight_decay) {
    model.for_each_tensor([this](auto& t) {
      m_.push_back(MatX<Scalar>::Zero(t.rows(), t.cols()));
      v_.push_back(MatX<Scalar>::Zero(t.rows(), t.cols()));
    });
  }

  void step(Model<Scalar>& model, Gradients<Scalar>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, t_);
    const double bc2 = 1.0 - std::pow(kBeta2, t_);
    std::size_t i = 0;
    std::vector<Eigen::Map<MatX<Scalar>>> gmaps;
    std::vector<Eigen::Map<MatX<Scalar>>> pmaps;
    model.for_each_tensor([&](auto& t) {
      pmaps.emplace_back(t.data(), t.rows(), t.cols());
    });
    grads.for_each_tensor([&](auto& t) {
      gmaps.emplace_back(t.data(), t.rows(), t.cols());
    });
    for (i = 0; i < pmaps.size(); ++i) {
      MatX<Scalar> g = gmaps[i] + Scalar(weight_decay_) * pmaps[i];
      m_[i] = Scalar(kBeta1) * m_[i] + Scalar(1 - kBeta1) * g;
      v_[i] = Scalar(kBeta2) * v_[i] + Scalar(1 - kBeta2) * g.cwiseProduct(g);
      pmaps[i] -= Scalar(lr_ / bc1) * m_[i].cwiseQuotient(
                      ((v_[i] / Scalar(bc2)).cwiseSqrt().array() + Scalar(kEps)).matrix());
    }
  }

  void set_lr(double lr) { lr_ = lr; }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

 private:
  double lr_, weight_decay_;
  long t_ = 0;
  std::vector<MatX<Scalar>> m_, v_;
};

struct TrainHyper {
  double lr = 1e-3;
  double lr_decay = 1.0;     // per-epoch multiplicative learning-rate factor
  int batch_size = 256;
  int epochs = 50;
  int patience = 8;          // early stop after this many epochs w/o val improvement
  double weight_decay = 1e-6;
  double val_frac = 0.1;
  std::uint64_t seed = 1;
};

template <typename Scalar>
struct Dataset {
  MatX<Scalar> x;          // n x input_dim
  Eigen::MatrixXi labels;  // n x n_heads (classification)
  MatX<Scalar> y;          // n x output_dim (regression)

  int size() const { return static_cast<int>(x.rows()); }
};

struct TrainCurves {
  std::vector<double> train_loss, val_loss;
  int best_epoch = -1;
};

void save_curves_csv(const std::string& path, const TrainCurves& curves);

template <typename Scalar>
std::pair<Model<Scalar>, TrainCurves> train(const NetworkSpec& spec, const Dataset<Scalar>& data,
                                            const TrainHyper& hp) {
  spec.validate();
  if (data.size() < 2) throw std::invalid_argument("train: need at least 2 samples");
  const bool classify = spec.head == HeadKind::kClassification;

  std::mt19937_64 rng(hp.seed);
  std::vector<int> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const int n_val = std::max(1, static_cast<int>(data.size() * hp.val_frac));
  const int n_train = data.size() - n_val;
  if (n_train < 1) throw std::invalid_argument("train: validation split leaves no training data");

  auto gather = [&](int offset, int count) {
    Dataset<Scalar> d;
    d.x.resize(count, data.x.cols());
    if (classify) d.labels.resize(count, data.labels.cols());
    else d.y.resize(count, data.y.cols());
    for (int i = 0; i < count; ++i) {
      const int src = perm[offset + i];
      d.x.row(i) = data.x.row(src);
      if (classify) d.labels.row(i) = data.labels.row(src);
      else d.y.row(i) = data.y.row(src);
    }
    return d;
  };
  Dataset<Scalar> tr = gather(0, n_train);
  Dataset<Scalar> val = gather(n_train, n_val);

  Model<Scalar> model = Model<Scalar>::init(spec, rng());
  Adam<Scalar> opt(model, hp.lr, hp.weight_decay);

  auto eval_loss = [&](const Dataset<Scalar>& d) {
    const MatX<Scalar> out = model.forward(d.x);
    return classify ? cel_loss(model.head_probs(out), d.labels, spec.n_classes)
                    : mse_loss(out, d.y);
  };

  TrainCurves curves;
  Model<Scalar> best = model;
  double best_val = std::numeric_limits<double>::infinity();
  int stale = 0;
  std::vector<int> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int n_batches = 0;
    for (int start = 0; start < n_train; start += hp.batch_size) {
      const int count = std::min(hp.batch_size, n_train - start);
      MatX<Scalar> bx(count, tr.x.cols());
      Eigen::MatrixXi bl;
      MatX<Scalar> by;
      if (classify) bl.resize(count, tr.labels.cols());
      else by.resize(count, tr.y.cols());
      for (int i = 0; i < count; ++i) {
        bx.row(i) = tr.x.row(order[start + i]);
        if (classify) bl.row(i) = tr.labels.row(order[start + i]);
        else by.row(i) = tr.y.row(order[start + i]);
      }
      auto grads = Gradients<Scalar>::zeros_like(model);
      const double loss = forward_backward(model, bx, bl, by, grads);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: loss diverged (NaN/inf) at epoch " +
                                 std::to_string(epoch) + ", batch " + std::to_string(n_batches));
      opt.step(model, grads);
      epoch_loss += loss;
      ++n_batches;
    }
    if (hp.lr_decay != 1.0) opt.set_lr(hp.lr * std::pow(hp.lr_decay, epoch + 1));
    curves.train_loss.push_back(epoch_loss / n_batches);
    const double vloss = eval_loss(val);
    curves.val_loss.push_back(vloss);
    if (vloss < best_val - 1e-9) {
      best_val = vloss;
      best = model;
      curves.best_epoch = epoch;
      stale = 0;
    } else if (++stale > hp.patience) {
      break;
    }
  }
  return {std::move(best), std::move(curves)};
}

/// Complex SS-combination training targets, one K-vector per user.
struct DeltaTargets {
  MatC delta;  // M x K
};

/// delta_m = pinv(B_SS) u_m with B_SS the N_T x K matrix of sounding
/// codeword columns. Exact reconstruction when K >= N_T and B has full row
/// rank; otherwise the least-squares projection.
DeltaTargets delta_targets(const MatC& u_opt, const SSMatrix& ss);

/// u_m = sum_k delta_m^(k) a_SS^(k).
MatC delta_reconstruct(const DeltaTargets& d, const SSMatrix& ss);

/// Real feature layout used by both networks: x[m*K + k] = alpha(k, m).
VecR flatten_rssi(const MatR& alpha);
/// Real target layout: y[2(m*K + k)] = Re delta, y[2(m*K + k) + 1] = Im.
VecR flatten_delta(const DeltaTargets& d);
DeltaTargets unflatten_delta(const VecR& y, int n_users, int k_ss);

/// Exact-match accuracy per head over a dataset.
template <typename Scalar>
double classification_accuracy(const Model<Scalar>& model, const MatX<Scalar>& x,
                               const Eigen::MatrixXi& labels) {
  const MatX<Scalar> logits = model.forward(x);
  const int n_heads = model.spec.n_heads, n_classes = model.spec.n_classes;
  long correct = 0;
  for (int r = 0; r < x.rows(); ++r)
    for (int h = 0; h < n_heads; ++h) {
      int arg = 0;
      logits.row(r).segment(h * n_classes, n_classes).maxCoeff(&arg);
      if (arg == labels(r, h)) ++correct;
    }
  return static_cast<double>(correct) / (static_cast<double>(x.rows()) * n_heads);
}

/// E[||delta - delta'||^2 / ||delta||^2] over a dataset of flattened targets.
template <typename Scalar>
double delta_nmse(const Model<Scalar>& model, const MatX<Scalar>& x, const MatX<Scalar>& y) {
  const MatX<Scalar> pred = model.forward(x);
  double acc = 0.0;
  for (int r = 0; r < x.rows(); ++r) {
    const double denom = y.row(r).squaredNorm();
    if (denom == 0.0) throw std::invalid_argument("delta_nmse: zero-norm target row");
    acc += (pred.row(r) - y.row(r)).squaredNorm() / denom;
  }
  return acc / x.rows();
}

/// Two-step precoder prediction: classifier picks the analog codewords, the
/// regressor's delta weights rebuild the FDP, then LS + power normalization
/// produce the digital part.
template <typename Scalar>
PrecoderPair predict_precoders(const Model<Scalar>& analog_model,
                               const Model<Scalar>& delta_model, const RssiFeedback& fb,
                               const SSMatrix& ss, const Codebook& cb, double p_max) {
  const int n_users = static_cast<int>(fb.alpha.cols());
  const int k_ss = static_cast<int>(fb.alpha.rows());
  const VecR xr = flatten_rssi(fb.alpha);
  MatX<Scalar> x(1, xr.size());
  for (int i = 0; i < xr.size(); ++i) x(0, i) = static_cast<Scalar>(xr[i]);

  const MatX<Scalar> logits = analog_model.forward(x);
  const int n_heads = analog_model.spec.n_heads, n_classes = analog_model.spec.n_classes;
  PrecoderPair pair;
  pair.a_idx.resize(n_heads);
  for (int h = 0; h < n_heads; ++h) {
    int arg = 0;
    logits.row(0).segment(h * n_classes, n_classes).maxCoeff(&arg);
    pair.a_idx[h] = static_cast<std::uint64_t>(arg);
  }
  pair.a = analog_from_indices(pair.a_idx, cb);

  const MatX<Scalar> dpred = delta_model.forward(x);
  VecR flat(dpred.cols());
  for (int i = 0; i < dpred.cols(); ++i) flat[i] = static_cast<double>(dpred(0, i));
  const DeltaTargets d = unflatten_delta(flat, n_users, k_ss);
  const MatC u = delta_reconstruct(d, ss);
  pair.w = normalize_power(pair.a, ls_digital(pair.a, u), p_max);
  return pair;
}

template <typename Scalar>
void save_model(const std::string& path, const Model<Scalar>& model);
template <typename Scalar>
Model<Scalar> load_model(const std::string& path);

}  // namespace rhb::nn
