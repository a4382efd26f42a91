#include "rhb/harness.hpp"

#include "rhb/rssi_baselines.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace rhb {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

[[noreturn]] void stage_fail(const std::string& stage, const std::string& what, int sample = -1) {
  std::string msg = "pipeline stage '" + stage + "' failed";
  if (sample >= 0) msg += " at sample " + std::to_string(sample);
  throw std::runtime_error(msg + ": " + what);
}

std::string path_in(const ExperimentConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

int train_count(const ExperimentConfig& cfg) {
  return static_cast<int>(std::lround(cfg.n_samples * cfg.train_frac));
}

/// Fix the per-user phase of an FDP: rotate each column so its first antenna
/// entry is real positive. SINR-invariant, and it makes the regression
/// targets well defined (RSSI carries no per-user phase). The anchor must be
/// a *fixed* entry: steering-like columns have a flat magnitude profile, so
/// anchoring on the largest entry picks a different antenna (and hence an
/// essentially random phase) from sample to sample. Falls back to the largest
/// entry only when the first one nearly vanishes.
MatC canonicalize_fdp(MatC u) {
  for (int m = 0; m < u.cols(); ++m) {
    int t_star = 0;
    if (std::abs(u(0, m)) < 1e-3 * u.col(m).norm()) {
      double best = -1.0;
      for (int t = 0; t < u.rows(); ++t) {
        const double a = std::abs(u(t, m));
        if (a > best + 1e-15) {
          best = a;
          t_star = t;
        }
      }
    }
    const Complex v = u(t_star, m);
    if (std::abs(v) > 0) u.col(m) *= std::conj(v) / std::abs(v);
  }
  return u;
}

struct LoadedData {
  std::vector<ChannelSet> channels;
  RssiDataset rssi;
  SSMatrix ss;
  Codebook cb;
};

LoadedData load_common(const ExperimentConfig& cfg) {
  LoadedData d{load_channels(path_in(cfg, "channels.bin")),
               load_rssi(path_in(cfg, "rssi.bin")),
               ss_matrix(cfg.sys.n_tx, cfg.sys.k_ss, cfg.sys.rng_seed),
               Codebook::full(cfg.sys.n_tx)};
  if (static_cast<int>(d.channels.size()) != cfg.n_samples ||
      d.rssi.samples.size() != d.channels.size())
    stage_fail("load", "dataset files disagree with config (run gen first?)");
  return d;
}

nn::Dataset<float> make_analog_dataset(const LoadedData& d,
                                       const std::vector<std::vector<std::uint64_t>>& labels,
                                       int lo, int hi) {
  nn::Dataset<float> ds;
  const int n = hi - lo;
  const int in_dim = static_cast<int>(d.rssi.samples[0].alpha.size());
  const int n_heads = static_cast<int>(labels[0].size());
  ds.x.resize(n, in_dim);
  ds.labels.resize(n, n_heads);
  for (int i = 0; i < n; ++i) {
    const VecR x = nn::flatten_rssi(d.rssi.samples[lo + i].alpha);
    for (int j = 0; j < in_dim; ++j) ds.x(i, j) = static_cast<float>(x[j]);
    for (int h = 0; h < n_heads; ++h)
      ds.labels(i, h) = static_cast<int>(labels[lo + i][h]);
  }
  return ds;
}

nn::Dataset<float> make_delta_dataset(const LoadedData& d, const std::vector<MatC>& fdp, int lo,
                                      int hi) {
  nn::Dataset<float> ds;
  const int n = hi - lo;
  const int in_dim = static_cast<int>(d.rssi.samples[0].alpha.size());
  ds.x.resize(n, in_dim);
  ds.y.resize(n, 2 * in_dim);  // 2 K M outputs
  for (int i = 0; i < n; ++i) {
    const VecR x = nn::flatten_rssi(d.rssi.samples[lo + i].alpha);
    for (int j = 0; j < in_dim; ++j) ds.x(i, j) = static_cast<float>(x[j]);
    const VecR y = nn::flatten_delta(nn::delta_targets(fdp[lo + i], d.ss));
    for (int j = 0; j < y.size(); ++j) ds.y(i, j) = static_cast<float>(y[j]);
  }
  return ds;
}

}  // namespace

void ExperimentConfig::validate() const {
  sys.validate();
  geo.validate(sys.n_tx);
  if (n_samples < 10) throw std::invalid_argument("ExperimentConfig: n_samples must be >= 10");
  if (!(train_frac > 0.0 && train_frac < 1.0))
    throw std::invalid_argument("ExperimentConfig: train_frac must lie in (0, 1)");
  if (out_dir.empty()) throw std::invalid_argument("ExperimentConfig: out_dir must be set");
  if (sweep_k.empty() || sweep_nb.empty())
    throw std::invalid_argument("ExperimentConfig: sweep lists must be nonempty");
}

namespace {

json hyper_to_json(const nn::TrainHyper& h) {
  return {{"lr", h.lr},           {"lr_decay", h.lr_decay},
          {"batch_size", h.batch_size},
          {"epochs", h.epochs},   {"patience", h.patience},
          {"weight_decay", h.weight_decay}, {"val_frac", h.val_frac},
          {"seed", h.seed}};
}
nn::TrainHyper hyper_from_json(const json& j) {
  nn::TrainHyper h;
  h.lr = j.value("lr", h.lr);
  h.lr_decay = j.value("lr_decay", h.lr_decay);
  h.batch_size = j.value("batch_size", h.batch_size);
  h.epochs = j.value("epochs", h.epochs);
  h.patience = j.value("patience", h.patience);
  h.weight_decay = j.value("weight_decay", h.weight_decay);
  h.val_frac = j.value("val_frac", h.val_frac);
  h.seed = j.value("seed", h.seed);
  return h;
}

json config_to_json(const ExperimentConfig& cfg) {
  return {
      {"system",
       {{"n_tx", cfg.sys.n_tx},
        {"n_rf", cfg.sys.n_rf},
        {"n_users", cfg.sys.n_users},
        {"noise_power", cfg.sys.noise_power},
        {"p_max", cfg.sys.p_max},
        {"k_ss", cfg.sys.k_ss},
        {"n_bits", cfg.sys.n_bits},
        {"ss_proc_gain_db", cfg.sys.ss_proc_gain_db},
        {"rng_seed", cfg.sys.rng_seed}}},
      {"geometry",
       {{"n_paths", cfg.geo.n_paths},
        {"panel", {cfg.geo.panel[0], cfg.geo.panel[1], cfg.geo.panel[2]}},
        {"spacing", cfg.geo.spacing},
        {"gain_spread", cfg.geo.gain_spread},
        {"az_min", cfg.geo.az_min},
        {"az_max", cfg.geo.az_max},
        {"el_min", cfg.geo.el_min},
        {"el_max", cfg.geo.el_max},
        {"cluster_spread", cfg.geo.cluster_spread},
        {"path_decay_db", cfg.geo.path_decay_db},
        {"scale_min_db", cfg.geo.scale_min_db},
        {"scale_max_db", cfg.geo.scale_max_db}}},
      {"n_samples", cfg.n_samples},
      {"train_frac", cfg.train_frac},
      {"train",
       {{"n_fc", cfg.train.n_fc},
        {"hidden_width", cfg.train.hidden_width},
        {"analog", hyper_to_json(cfg.train.analog_hp)},
        {"delta", hyper_to_json(cfg.train.delta_hp)}}},
      {"sweep_k", cfg.sweep_k},
      {"sweep_nb", cfg.sweep_nb},
      {"sweep_samples", cfg.sweep_samples},
      {"out_dir", cfg.out_dir}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  if (j.contains("system")) {
    const auto& s = j["system"];
    cfg.sys.n_tx = s.value("n_tx", cfg.sys.n_tx);
    cfg.sys.n_rf = s.value("n_rf", cfg.sys.n_rf);
    cfg.sys.n_users = s.value("n_users", cfg.sys.n_users);
    cfg.sys.noise_power = s.value("noise_power", cfg.sys.noise_power);
    cfg.sys.p_max = s.value("p_max", cfg.sys.p_max);
    cfg.sys.k_ss = s.value("k_ss", cfg.sys.k_ss);
    cfg.sys.n_bits = s.value("n_bits", cfg.sys.n_bits);
    cfg.sys.ss_proc_gain_db = s.value("ss_proc_gain_db", cfg.sys.ss_proc_gain_db);
    cfg.sys.rng_seed = s.value("rng_seed", cfg.sys.rng_seed);
  }
  if (j.contains("geometry")) {
    const auto& g = j["geometry"];
    cfg.geo.n_paths = g.value("n_paths", cfg.geo.n_paths);
    if (g.contains("panel")) {
      const auto p = g["panel"];
      cfg.geo.panel = {p.at(0).get<int>(), p.at(1).get<int>(), p.at(2).get<int>()};
    }
    cfg.geo.spacing = g.value("spacing", cfg.geo.spacing);
    cfg.geo.gain_spread = g.value("gain_spread", cfg.geo.gain_spread);
    cfg.geo.az_min = g.value("az_min", cfg.geo.az_min);
    cfg.geo.az_max = g.value("az_max", cfg.geo.az_max);
    cfg.geo.el_min = g.value("el_min", cfg.geo.el_min);
    cfg.geo.el_max = g.value("el_max", cfg.geo.el_max);
    cfg.geo.cluster_spread = g.value("cluster_spread", cfg.geo.cluster_spread);
    cfg.geo.path_decay_db = g.value("path_decay_db", cfg.geo.path_decay_db);
    cfg.geo.scale_min_db = g.value("scale_min_db", cfg.geo.scale_min_db);
    cfg.geo.scale_max_db = g.value("scale_max_db", cfg.geo.scale_max_db);
  }
  cfg.n_samples = j.value("n_samples", cfg.n_samples);
  cfg.train_frac = j.value("train_frac", cfg.train_frac);
  if (j.contains("train")) {
    const auto& t = j["train"];
    cfg.train.n_fc = t.value("n_fc", cfg.train.n_fc);
    cfg.train.hidden_width = t.value("hidden_width", cfg.train.hidden_width);
    if (t.contains("analog")) cfg.train.analog_hp = hyper_from_json(t["analog"]);
    if (t.contains("delta")) cfg.train.delta_hp = hyper_from_json(t["delta"]);
  }
  if (j.contains("sweep_k")) cfg.sweep_k = j["sweep_k"].get<std::vector<int>>();
  if (j.contains("sweep_nb")) cfg.sweep_nb = j["sweep_nb"].get<std::vector<int>>();
  cfg.sweep_samples = j.value("sweep_samples", cfg.sweep_samples);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  return cfg;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_config: cannot open " + path);
  json j;
  is >> j;
  ExperimentConfig cfg = config_from_json(j);
  cfg.validate();
  return cfg;
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_config: cannot open " + path);
  os << config_to_json(cfg).dump(2) << "\n";
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_results_csv: cannot open " + path);
  os << "method,mean_rate,ratio,nmse,accuracy,k_ss,n_bits,n_samples\n";
  os.precision(12);
  for (const auto& r : rows)
    os << r.method << "," << r.mean_rate << "," << r.ratio << "," << r.nmse << ","
       << r.accuracy << "," << r.k_ss << "," << r.n_bits << "," << r.n_samples << "\n";
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_results_csv: cannot open " + path);
  std::string line;
  std::getline(is, line);
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    ResultRow r;
    std::string cell;
    std::getline(ss, r.method, ',');
    std::getline(ss, cell, ','); r.mean_rate = std::stod(cell);
    std::getline(ss, cell, ','); r.ratio = std::stod(cell);
    std::getline(ss, cell, ','); r.nmse = std::stod(cell);
    std::getline(ss, cell, ','); r.accuracy = std::stod(cell);
    std::getline(ss, cell, ','); r.k_ss = std::stoi(cell);
    std::getline(ss, cell, ','); r.n_bits = std::stoi(cell);
    std::getline(ss, cell, ','); r.n_samples = std::stoi(cell);
    rows.push_back(std::move(r));
  }
  return rows;
}

double measurement_noise(const SystemConfig& sys) {
  return sys.noise_power / std::pow(10.0, sys.ss_proc_gain_db / 10.0);
}

void stage_gen(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  const auto t0 = Clock::now();
  const auto channels = generate_channels(cfg.sys, cfg.geo, cfg.n_samples);
  const SSMatrix ss = ss_matrix(cfg.sys.n_tx, cfg.sys.k_ss, cfg.sys.rng_seed);

  std::mt19937_64 noise_rng(cfg.sys.rng_seed ^ 0x5253534921ULL);
  std::vector<MatR> raw;
  raw.reserve(channels.size());
  for (std::size_t s = 0; s < channels.size(); ++s) {
    try {
      raw.push_back(measure_rssi(channels[s], ss, measurement_noise(cfg.sys), noise_rng));
    } catch (const std::exception& e) {
      stage_fail("gen", e.what(), static_cast<int>(s));
    }
  }
  const int n_train = train_count(cfg);
  const RssiScale scale =
      calibrate_beta({raw.begin(), raw.begin() + n_train});
  RssiDataset ds;
  ds.scale = scale;
  ds.seed = cfg.sys.rng_seed;
  ds.samples.reserve(raw.size());
  for (const auto& r : raw) ds.samples.push_back(quantize(normalize_rssi(r, scale), cfg.sys.n_bits));

  save_channels(path_in(cfg, "channels.bin"), channels);
  save_rssi(path_in(cfg, "rssi.bin"), ds);
  export_ss_csv(path_in(cfg, "ss_matrix.csv"), ss);
  save_config(path_in(cfg, "config.json"), cfg);
  std::cerr << "[gen] " << cfg.n_samples << " samples in " << seconds_since(t0) << " s\n";
}

void stage_labels(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  LoadedData d = load_common(cfg);
  std::vector<MatC> fdp;
  std::vector<std::vector<std::uint64_t>> analog_labels;
  fdp.reserve(d.channels.size());
  analog_labels.reserve(d.channels.size());
  std::ofstream diag(path_in(cfg, "factorize_diag.csv"));
  diag << "sample,iterations,final_objective,fdp_rate,hb_rate\n";
  for (std::size_t s = 0; s < d.channels.size(); ++s) {
    try {
      const FdpResult fr = solve_fdp(d.channels[s], cfg.sys.noise_power, cfg.sys.p_max);
      const MatC u = canonicalize_fdp(fr.u);
      const FactorizeResult hb = factorize(u, d.cb, cfg.sys.n_rf, cfg.sys.p_max);
      diag << s << "," << hb.iterations << "," << hb.objective_trace.back() << ","
           << sum_rate_fdp(d.channels[s], u, cfg.sys.noise_power) << ","
           << sum_rate(d.channels[s], hb.pair.a, hb.pair.w, cfg.sys.noise_power) << "\n";
      fdp.push_back(u);
      analog_labels.push_back(hb.pair.a_idx);
    } catch (const std::exception& e) {
      stage_fail("labels", e.what(), static_cast<int>(s));
    }
  }
  save_fdp(path_in(cfg, "fdp.bin"), fdp);
  export_analog_labels_csv(path_in(cfg, "analog_labels.csv"), analog_labels);
  std::cerr << "[labels] " << fdp.size() << " samples in " << seconds_since(t0) << " s\n";
}

void stage_train(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  LoadedData d = load_common(cfg);
  const auto fdp = load_fdp(path_in(cfg, "fdp.bin"));
  const auto labels = load_analog_labels_csv(path_in(cfg, "analog_labels.csv"));
  if (fdp.size() != d.channels.size() || labels.size() != d.channels.size())
    stage_fail("train", "label files disagree with dataset (run labels first?)");
  const int n_train = train_count(cfg);
  const int in_dim = cfg.sys.k_ss * cfg.sys.n_users;

  nn::NetworkSpec analog_spec;
  analog_spec.input_dim = in_dim;
  analog_spec.n_fc = cfg.train.n_fc;
  analog_spec.hidden_width = cfg.train.hidden_width;
  analog_spec.head = nn::HeadKind::kClassification;
  analog_spec.n_heads = cfg.sys.n_rf;
  analog_spec.n_classes = static_cast<int>(d.cb.size());

  nn::NetworkSpec delta_spec;
  delta_spec.input_dim = in_dim;
  delta_spec.n_fc = cfg.train.n_fc;
  delta_spec.hidden_width = cfg.train.hidden_width;
  delta_spec.head = nn::HeadKind::kRegression;
  delta_spec.output_dim = 2 * in_dim;

  {
    const auto ds = make_analog_dataset(d, labels, 0, n_train);
    auto [model, curves] = nn::train(analog_spec, ds, cfg.train.analog_hp);
    nn::save_model(path_in(cfg, "model_analog.bin"), model);
    nn::save_curves_csv(path_in(cfg, "curves_analog.csv"), curves);
    std::cerr << "[train] analog best epoch " << curves.best_epoch << " val loss "
              << (curves.best_epoch >= 0 ? curves.val_loss[curves.best_epoch] : -1.0) << "\n";
  }
  {
    const auto ds = make_delta_dataset(d, fdp, 0, n_train);
    auto [model, curves] = nn::train(delta_spec, ds, cfg.train.delta_hp);
    nn::save_model(path_in(cfg, "model_delta.bin"), model);
    nn::save_curves_csv(path_in(cfg, "curves_delta.csv"), curves);
    std::cerr << "[train] delta best epoch " << curves.best_epoch << " val loss "
              << (curves.best_epoch >= 0 ? curves.val_loss[curves.best_epoch] : -1.0) << "\n";
  }
  std::cerr << "[train] done in " << seconds_since(t0) << " s\n";
}

std::vector<ResultRow> stage_eval(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  LoadedData d = load_common(cfg);
  const auto fdp = load_fdp(path_in(cfg, "fdp.bin"));
  const auto labels = load_analog_labels_csv(path_in(cfg, "analog_labels.csv"));
  const auto analog_model = nn::load_model<float>(path_in(cfg, "model_analog.bin"));
  const auto delta_model = nn::load_model<float>(path_in(cfg, "model_delta.bin"));
  const int n_train = train_count(cfg);
  const int n_test = cfg.n_samples - n_train;
  if (n_test < 1) stage_fail("eval", "no test samples");

  // Batched network forwards over the test split.
  const auto analog_ds = make_analog_dataset(d, labels, n_train, cfg.n_samples);
  const auto delta_ds = make_delta_dataset(d, fdp, n_train, cfg.n_samples);
  const auto logits = analog_model.forward(analog_ds.x);
  const auto delta_pred = delta_model.forward(delta_ds.x);
  const double accuracy =
      nn::classification_accuracy(analog_model, analog_ds.x, analog_ds.labels);
  const double nmse = nn::delta_nmse(delta_model, delta_ds.x, delta_ds.y);

  double r_fdp = 0, r_hb = 0, r_prop = 0, r_zf = 0, r_md = 0, r_mrc = 0, r_md_hb = 0,
         r_mrc_hb = 0;
  const int n_classes = static_cast<int>(d.cb.size());
  for (int i = 0; i < n_test; ++i) {
    const int s = n_train + i;
    try {
      const ChannelSet& ch = d.channels[s];
      const double sigma2 = cfg.sys.noise_power;
      r_fdp += sum_rate_fdp(ch, fdp[s], sigma2);
      const FactorizeResult hb = factorize(fdp[s], d.cb, cfg.sys.n_rf, cfg.sys.p_max);
      r_hb += sum_rate(ch, hb.pair.a, hb.pair.w, sigma2);

      // proposed: predicted codewords + predicted delta weights
      PrecoderPair pred;
      pred.a_idx.resize(cfg.sys.n_rf);
      for (int h = 0; h < cfg.sys.n_rf; ++h) {
        int arg = 0;
        logits.row(i).segment(h * n_classes, n_classes).maxCoeff(&arg);
        pred.a_idx[h] = static_cast<std::uint64_t>(arg);
      }
      pred.a = analog_from_indices(pred.a_idx, d.cb);
      VecR flat(delta_pred.cols());
      for (int j = 0; j < delta_pred.cols(); ++j) flat[j] = delta_pred(i, j);
      const MatC u_pred =
          nn::delta_reconstruct(nn::unflatten_delta(flat, cfg.sys.n_users, cfg.sys.k_ss), d.ss);
      pred.w = normalize_power(pred.a, ls_digital(pred.a, u_pred), cfg.sys.p_max);
      r_prop += sum_rate(ch, pred.a, pred.w, sigma2);

      r_zf += sum_rate_fdp(ch, zfbf(ch, sigma2, cfg.sys.p_max), sigma2);

      const RssiFeedback& fb = d.rssi.samples[s];
      const MatC u_md = max_direction(fb, d.ss, cfg.sys.p_max);
      r_md += sum_rate_fdp(ch, u_md, sigma2);
      const FactorizeResult md_hb = factorize(u_md, d.cb, cfg.sys.n_rf, cfg.sys.p_max);
      r_md_hb += sum_rate(ch, md_hb.pair.a, md_hb.pair.w, sigma2);
      const MatC u_mrc = mrc_combine(fb, d.ss, cfg.sys.p_max);
      r_mrc += sum_rate_fdp(ch, u_mrc, sigma2);
      const FactorizeResult mrc_hb = factorize(u_mrc, d.cb, cfg.sys.n_rf, cfg.sys.p_max);
      r_mrc_hb += sum_rate(ch, mrc_hb.pair.a, mrc_hb.pair.w, sigma2);
    } catch (const std::exception& e) {
      stage_fail("eval", e.what(), s);
    }
  }
  const double inv = 1.0 / n_test;
  r_fdp *= inv; r_hb *= inv; r_prop *= inv; r_zf *= inv;
  r_md *= inv; r_mrc *= inv; r_md_hb *= inv; r_mrc_hb *= inv;

  auto row = [&](const std::string& name, double rate) {
    ResultRow r;
    r.method = name;
    r.mean_rate = rate;
    r.ratio = rate / r_hb;
    r.k_ss = cfg.sys.k_ss;
    r.n_bits = cfg.sys.n_bits;
    r.n_samples = n_test;
    return r;
  };
  std::vector<ResultRow> rows;
  rows.push_back(row("optimal_hb", r_hb));
  auto proposed = row("proposed", r_prop);
  proposed.nmse = nmse;
  proposed.accuracy = accuracy;
  rows.push_back(proposed);
  rows.push_back(row("zfbf", r_zf));
  rows.push_back(row("max_direction", r_md));
  rows.push_back(row("mrc", r_mrc));
  write_results_csv(path_in(cfg, "results.csv"), rows);

  // side table: upper bound and hybrid-constrained baselines
  std::vector<ResultRow> extra;
  extra.push_back(row("fdp_upper", r_fdp));
  extra.push_back(row("max_direction_hb", r_md_hb));
  extra.push_back(row("mrc_hb", r_mrc_hb));
  write_results_csv(path_in(cfg, "results_extra.csv"), extra);

  json manifest;
  manifest["config"] = config_to_json(cfg);
  manifest["seed"] = cfg.sys.rng_seed;
  json hashes;
  for (const auto* f : {"channels.bin", "rssi.bin", "fdp.bin", "analog_labels.csv",
                        "model_analog.bin", "model_delta.bin", "results.csv"}) {
    const auto p = path_in(cfg, f);
    if (fs::exists(p)) hashes[f] = fnv1a_file(p);
  }
  manifest["file_hashes_fnv1a"] = hashes;
  std::ofstream mos(path_in(cfg, "manifest.json"));
  mos << manifest.dump(2) << "\n";
  std::cerr << "[eval] " << n_test << " test samples in " << seconds_since(t0) << " s\n";
  return rows;
}

std::vector<ResultRow> run_pipeline(const ExperimentConfig& cfg) {
  stage_gen(cfg);
  stage_labels(cfg);
  stage_train(cfg);
  return stage_eval(cfg);
}

std::vector<ResultRow> sweep(const ExperimentConfig& cfg, SweepAxis axis) {
  cfg.validate();
  const auto& values = axis == SweepAxis::kSsBursts ? cfg.sweep_k : cfg.sweep_nb;
  const std::string axis_name = axis == SweepAxis::kSsBursts ? "k" : "nb";
  std::vector<ResultRow> all;
  for (int v : values) {
    ExperimentConfig point = cfg;
    point.n_samples = cfg.sweep_samples;
    if (axis == SweepAxis::kSsBursts)
      point.sys.k_ss = v;
    else
      point.sys.n_bits = v;
    point.out_dir =
        (fs::path(cfg.out_dir) / ("sweep_" + axis_name) / std::to_string(v)).string();
    auto rows = run_pipeline(point);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  fs::create_directories(cfg.out_dir);
  write_results_csv(path_in(cfg, "sweep_" + axis_name + ".csv"), all);
  return all;
}

void print_results(const std::vector<ResultRow>& rows) {
  std::cout << std::left << std::setw(20) << "method" << std::right << std::setw(12)
            << "rate" << std::setw(10) << "ratio" << std::setw(12) << "nmse"
            << std::setw(10) << "acc" << std::setw(6) << "K" << std::setw(6) << "Nb"
            << std::setw(8) << "n" << "\n";
  for (const auto& r : rows) {
    std::cout << std::left << std::setw(20) << r.method << std::right << std::fixed
              << std::setprecision(3) << std::setw(12) << r.mean_rate << std::setw(9)
              << 100.0 * r.ratio << "%" << std::scientific << std::setprecision(2)
              << std::setw(12) << r.nmse << std::fixed << std::setw(10) << r.accuracy
              << std::setw(6) << r.k_ss << std::setw(6) << r.n_bits << std::setw(8)
              << r.n_samples << "\n";
  }
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("fnv1a_file: cannot open " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace rhb
