#include "rhb/neural.hpp"

#include <cstring>
#include <fstream>

namespace rhb::nn {

void NetworkSpec::validate() const {
  if (input_dim < 1) throw std::invalid_argument("NetworkSpec: input_dim must be >= 1");
  if (n_fc < 2) throw std::invalid_argument("NetworkSpec: need at least 2 FC layers");
  if (hidden_width < 1) throw std::invalid_argument("NetworkSpec: hidden_width must be >= 1");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0))
    throw std::invalid_argument("NetworkSpec: leaky_slope must lie in (0, 1)");
  if (head == HeadKind::kClassification) {
    if (n_heads < 1 || n_classes < 1)
      throw std::invalid_argument("NetworkSpec: classification head needs n_heads, n_classes >= 1");
  } else if (output_dim < 1) {
    throw std::invalid_argument("NetworkSpec: regression head needs output_dim >= 1");
  }
}

std::vector<int> NetworkSpec::layer_dims() const {
  std::vector<int> dims;
  dims.push_back(input_dim);
  for (int l = 0; l < n_fc - 1; ++l) dims.push_back(hidden_width);
  dims.push_back(head_output_dim());
  return dims;
}

std::int64_t count_parameters(const NetworkSpec& spec) {
  spec.validate();
  const auto dims = spec.layer_dims();
  std::int64_t total = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    total += static_cast<std::int64_t>(dims[l]) * dims[l + 1];  // weights
    total += dims[l + 1];                                       // bias
    const bool hidden = l + 2 < dims.size();
    if (hidden && spec.batch_norm) total += 2 * dims[l + 1];    // gamma, beta
  }
  return total;
}

void save_curves_csv(const std::string& path, const TrainCurves& curves) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_curves_csv: cannot open " + path);
  os << "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < curves.train_loss.size(); ++e)
    os << e << "," << curves.train_loss[e] << "," << curves.val_loss[e] << "\n";
}

DeltaTargets delta_targets(const MatC& u_opt, const SSMatrix& ss) {
  if (u_opt.rows() != ss.n_tx())
    throw std::invalid_argument("delta_targets: FDP/SS antenna mismatch");
  const MatC b = ss.columns();  // N_T x K
  Eigen::CompleteOrthogonalDecomposition<MatC> cod(b);
  if (cod.rank() < std::min<Eigen::Index>(b.rows(), b.cols()))
    throw std::invalid_argument("delta_targets: rank-deficient SS matrix");
  const MatC pinv = cod.pseudoInverse();  // K x N_T
  DeltaTargets d;
  d.delta = (pinv * u_opt).transpose();  // M x K
  return d;
}

MatC delta_reconstruct(const DeltaTargets& d, const SSMatrix& ss) {
  return ss.columns() * d.delta.transpose();  // N_T x M
}

VecR flatten_rssi(const MatR& alpha) {
  const int k = static_cast<int>(alpha.rows());
  const int m = static_cast<int>(alpha.cols());
  VecR x(k * m);
  for (int u = 0; u < m; ++u)
    for (int j = 0; j < k; ++j) x[u * k + j] = alpha(j, u);
  return x;
}

VecR flatten_delta(const DeltaTargets& d) {
  const int m = static_cast<int>(d.delta.rows());
  const int k = static_cast<int>(d.delta.cols());
  VecR y(2 * m * k);
  for (int u = 0; u < m; ++u)
    for (int j = 0; j < k; ++j) {
      y[2 * (u * k + j)] = d.delta(u, j).real();
      y[2 * (u * k + j) + 1] = d.delta(u, j).imag();
    }
  return y;
}

DeltaTargets unflatten_delta(const VecR& y, int n_users, int k_ss) {
  if (y.size() != 2 * n_users * k_ss)
    throw std::invalid_argument("unflatten_delta: wrong vector length");
  DeltaTargets d;
  d.delta.resize(n_users, k_ss);
  for (int u = 0; u < n_users; ++u)
    for (int j = 0; j < k_ss; ++j)
      d.delta(u, j) = Complex(y[2 * (u * k_ss + j)], y[2 * (u * k_ss + j) + 1]);
  return d;
}

namespace {

constexpr char kMagic[8] = {'R', 'H', 'B', 'M', 'O', 'D', 'L', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error(std::string("model file: truncated while reading ") + what);
  return v;
}

template <typename Scalar>
void write_tensor(std::ostream& os, const MatX<Scalar>& t) {
  write_pod(os, static_cast<std::uint32_t>(t.rows()));
  write_pod(os, static_cast<std::uint32_t>(t.cols()));
  for (int c = 0; c < t.cols(); ++c)
    for (int r = 0; r < t.rows(); ++r) write_pod(os, static_cast<double>(t(r, c)));
}
template <typename Scalar>
void write_tensor(std::ostream& os, const VecX<Scalar>& t) {
  write_pod(os, static_cast<std::uint32_t>(t.size()));
  write_pod(os, std::uint32_t{1});
  for (int r = 0; r < t.size(); ++r) write_pod(os, static_cast<double>(t(r)));
}
template <typename Dest>
void read_tensor(std::istream& is, Dest& t) {
  const auto rows = read_pod<std::uint32_t>(is, "tensor rows");
  const auto cols = read_pod<std::uint32_t>(is, "tensor cols");
  t.resize(rows, cols);
  for (std::uint32_t c = 0; c < cols; ++c)
    for (std::uint32_t r = 0; r < rows; ++r)
      t(r, c) = static_cast<typename Dest::Scalar>(read_pod<double>(is, "tensor data"));
}

}  // namespace

template <typename Scalar>
void save_model(const std::string& path, const Model<Scalar>& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_model: cannot open " + path);
  os.write(kMagic, sizeof(kMagic));
  const auto& s = model.spec;
  write_pod(os, static_cast<std::int32_t>(s.input_dim));
  write_pod(os, static_cast<std::int32_t>(s.n_fc));
  write_pod(os, static_cast<std::int32_t>(s.hidden_width));
  write_pod(os, s.leaky_slope);
  write_pod(os, static_cast<std::int32_t>(s.batch_norm ? 1 : 0));
  write_pod(os, static_cast<std::int32_t>(s.head == HeadKind::kClassification ? 1 : 0));
  write_pod(os, static_cast<std::int32_t>(s.n_heads));
  write_pod(os, static_cast<std::int32_t>(s.n_classes));
  write_pod(os, static_cast<std::int32_t>(s.output_dim));
  for (const auto& l : model.layers) {
    write_tensor(os, l.w);
    write_tensor(os, l.b);
    write_pod(os, static_cast<std::int32_t>(l.has_bn ? 1 : 0));
    if (l.has_bn) {
      write_tensor(os, l.gamma);
      write_tensor(os, l.beta);
      write_tensor(os, l.running_mean);
      write_tensor(os, l.running_var);
    }
  }
  if (!os) throw std::runtime_error("save_model: write failed for " + path);
}

template <typename Scalar>
Model<Scalar> load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_model: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("load_model: bad magic in " + path);
  NetworkSpec s;
  s.input_dim = read_pod<std::int32_t>(is, "input_dim");
  s.n_fc = read_pod<std::int32_t>(is, "n_fc");
  s.hidden_width = read_pod<std::int32_t>(is, "hidden_width");
  s.leaky_slope = read_pod<double>(is, "leaky_slope");
  s.batch_norm = read_pod<std::int32_t>(is, "batch_norm") != 0;
  s.head = read_pod<std::int32_t>(is, "head") != 0 ? HeadKind::kClassification
                                                   : HeadKind::kRegression;
  s.n_heads = read_pod<std::int32_t>(is, "n_heads");
  s.n_classes = read_pod<std::int32_t>(is, "n_classes");
  s.output_dim = read_pod<std::int32_t>(is, "output_dim");
  s.validate();
  Model<Scalar> m;
  m.spec = s;
  const auto dims = s.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    typename Model<Scalar>::Layer layer;
    read_tensor(is, layer.w);
    read_tensor(is, layer.b);
    layer.has_bn = read_pod<std::int32_t>(is, "has_bn") != 0;
    if (layer.has_bn) {
      read_tensor(is, layer.gamma);
      read_tensor(is, layer.beta);
      read_tensor(is, layer.running_mean);
      read_tensor(is, layer.running_var);
      if ((layer.running_var.array() <= Scalar(0)).any())
        throw std::runtime_error("load_model: non-positive running variance");
    }
    if (layer.w.rows() != dims[l + 1] || layer.w.cols() != dims[l])
      throw std::runtime_error("load_model: tensor shape does not match spec");
    m.layers.push_back(std::move(layer));
  }
  return m;
}

template void save_model<float>(const std::string&, const Model<float>&);
template void save_model<double>(const std::string&, const Model<double>&);
template Model<float> load_model<float>(const std::string&);
template Model<double> load_model<double>(const std::string&);

}  // namespace rhb::nn
