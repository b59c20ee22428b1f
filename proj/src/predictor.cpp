#include "teleop/predictor.hpp"

#include <cassert>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace teleop {

namespace {

constexpr double kSignalScale = kLstmSignalScale;

MatX sigmoid(const MatX& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

struct BatchCache {
  std::vector<MatX> U;   // (h+2) x N per step
  std::vector<MatX> xc, ig, fg, og, c, tc;  // h x N per step
  MatX x_o_final;        // h x N
  MatX d1_pre, d1, d2;   // 10 x N
  Eigen::RowVectorXd y_deg;  // 1 x N
  // scratch, reused across calls
  MatX gate_pre;
};

void forward_batch(const LstmParams& p, const MatX& windows, BatchCache& cache) {
  const Eigen::Index n = windows.rows();
  const Eigen::Index r = windows.cols();
  const Eigen::Index h = p.hidden_size();

  const auto rs = static_cast<std::size_t>(r);
  if (cache.U.size() != rs) {
    cache.U.resize(rs);
    cache.xc.resize(rs);
    cache.ig.resize(rs);
    cache.fg.resize(rs);
    cache.og.resize(rs);
    cache.c.resize(rs);
    cache.tc.resize(rs);
  }
  cache.gate_pre.resize(h, n);

  for (Eigen::Index t = 0; t < r; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    MatX& u = cache.U[ts];
    u.resize(h + 2, n);
    u.row(0) = windows.col(t).transpose() / kSignalScale;
    if (t == 0) {
      u.middleRows(1, h).setZero();
    } else {
      u.middleRows(1, h) = cache.og[ts - 1].cwiseProduct(cache.tc[ts - 1]);
    }
    u.row(h + 1).setOnes();

    cache.gate_pre.noalias() = p.w1 * u;
    cache.xc[ts] = cache.gate_pre.array().tanh();
    cache.gate_pre.noalias() = p.w2 * u;
    cache.ig[ts] = sigmoid(cache.gate_pre);
    cache.gate_pre.noalias() = p.w3 * u;
    cache.fg[ts] = sigmoid(cache.gate_pre);
    cache.gate_pre.noalias() = p.w4 * u;
    cache.og[ts] = sigmoid(cache.gate_pre);
    if (t == 0) {
      cache.c[ts] = cache.ig[ts].cwiseProduct(cache.xc[ts]);
    } else {
      cache.c[ts] = cache.ig[ts].cwiseProduct(cache.xc[ts]) +
                    cache.fg[ts].cwiseProduct(cache.c[ts - 1]);
    }
    cache.tc[ts] = cache.c[ts].array().tanh();

    assert((cache.ig[ts].array() > 0.0).all() && (cache.ig[ts].array() < 1.0).all());
    assert((cache.fg[ts].array() > 0.0).all() && (cache.fg[ts].array() < 1.0).all());
    assert((cache.og[ts].array() > 0.0).all() && (cache.og[ts].array() < 1.0).all());
    assert((cache.xc[ts].array() > -1.0).all() && (cache.xc[ts].array() < 1.0).all());
  }
  cache.x_o_final = cache.og[rs - 1].cwiseProduct(cache.tc[rs - 1]);
  cache.d1_pre.noalias() = p.dense1_w * cache.x_o_final;
  cache.d1_pre.colwise() += p.dense1_b;
  cache.d1 = cache.d1_pre.cwiseMax(0.0);
  cache.d2.noalias() = p.dense2_w * cache.d1;
  cache.d2.colwise() += p.dense2_b;
  cache.y_deg.noalias() = p.out_w * cache.d2;
  cache.y_deg = kSignalScale * (cache.y_deg.array() + p.out_b).matrix();
}

LstmParams zero_like(const LstmParams& p) {
  LstmParams g;
  g.w1 = MatX::Zero(p.w1.rows(), p.w1.cols());
  g.w2 = MatX::Zero(p.w2.rows(), p.w2.cols());
  g.w3 = MatX::Zero(p.w3.rows(), p.w3.cols());
  g.w4 = MatX::Zero(p.w4.rows(), p.w4.cols());
  g.dense1_w = MatX::Zero(p.dense1_w.rows(), p.dense1_w.cols());
  g.dense1_b = VecX::Zero(p.dense1_b.size());
  g.dense2_w = MatX::Zero(p.dense2_w.rows(), p.dense2_w.cols());
  g.dense2_b = VecX::Zero(p.dense2_b.size());
  g.out_w = MatX::Zero(p.out_w.rows(), p.out_w.cols());
  g.out_b = 0.0;
  return g;
}

/// Backpropagation through the unrolled recurrence; dy_deg is dLoss/dy.
LstmParams backward_batch(const LstmParams& p, const BatchCache& cache,
                          const Eigen::RowVectorXd& dy_deg) {
  const Eigen::Index h = p.hidden_size();
  const auto r = static_cast<Eigen::Index>(cache.U.size());
  const Eigen::Index n = dy_deg.cols();
  LstmParams g = zero_like(p);

  const Eigen::RowVectorXd dy = kSignalScale * dy_deg;
  g.out_w.noalias() = dy * cache.d2.transpose();
  g.out_b = dy.sum();
  MatX dd2(p.out_w.cols(), n);
  dd2.noalias() = p.out_w.transpose() * dy;
  g.dense2_w.noalias() = dd2 * cache.d1.transpose();
  g.dense2_b = dd2.rowwise().sum();
  MatX dd1_pre(p.dense2_w.cols(), n);
  dd1_pre.noalias() = p.dense2_w.transpose() * dd2;
  dd1_pre.array() *= (cache.d1_pre.array() > 0.0).cast<double>();
  g.dense1_w.noalias() = dd1_pre * cache.x_o_final.transpose();
  g.dense1_b = dd1_pre.rowwise().sum();

  MatX dx_o(h, n);
  dx_o.noalias() = p.dense1_w.transpose() * dd1_pre;
  MatX dc = MatX::Zero(h, n);
  MatX dog(h, n), da(h, n), du(h + 2, n);
  for (Eigen::Index t = r - 1; t >= 0; --t) {
    const auto ts = static_cast<std::size_t>(t);
    const MatX& xc = cache.xc[ts];
    const MatX& ig = cache.ig[ts];
    const MatX& fg = cache.fg[ts];
    const MatX& og = cache.og[ts];
    const MatX& tc = cache.tc[ts];
    const MatX& u = cache.U[ts];

    dog.array() = dx_o.array() * tc.array();
    // dc accumulates the carry from step t+1 plus the block-output path.
    dc.array() += dx_o.array() * og.array() * (1.0 - tc.array().square());

    da.array() = dc.array() * ig.array() * (1.0 - xc.array().square());  // candidate
    g.w1.noalias() += da * u.transpose();
    du.noalias() = p.w1.transpose() * da;

    da.array() = dc.array() * xc.array() * ig.array() * (1.0 - ig.array());  // input gate
    g.w2.noalias() += da * u.transpose();
    du.noalias() += p.w2.transpose() * da;

    if (t > 0) {
      da.array() = dc.array() * cache.c[ts - 1].array() * fg.array() * (1.0 - fg.array());
    } else {
      da.setZero();  // c_prev is zero at the first step
    }
    g.w3.noalias() += da * u.transpose();
    du.noalias() += p.w3.transpose() * da;

    da.array() = dog.array() * og.array() * (1.0 - og.array());  // output gate
    g.w4.noalias() += da * u.transpose();
    du.noalias() += p.w4.transpose() * da;

    dx_o = du.middleRows(1, h);
    dc.array() *= fg.array();  // becomes the carry into step t-1
  }
  return g;
}

double mse_deg2(const LstmParams& p, const MatX& windows, const VecX& targets) {
  BatchCache cache;
  forward_batch(p, windows, cache);
  return (cache.y_deg.transpose() - targets).squaredNorm() / static_cast<double>(targets.size());
}

void axpy(LstmParams& p, double a, const LstmParams& g) {
  p.w1 += a * g.w1;
  p.w2 += a * g.w2;
  p.w3 += a * g.w3;
  p.w4 += a * g.w4;
  p.dense1_w += a * g.dense1_w;
  p.dense1_b += a * g.dense1_b;
  p.dense2_w += a * g.dense2_w;
  p.dense2_b += a * g.dense2_b;
  p.out_w += a * g.out_w;
  p.out_b += a * g.out_b;
}

std::vector<double*> param_pointers(LstmParams& p) {
  std::vector<double*> ptrs;
  const auto add = [&ptrs](MatX& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) ptrs.push_back(m.data() + i);
  };
  const auto addv = [&ptrs](VecX& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) ptrs.push_back(v.data() + i);
  };
  add(p.w1);
  add(p.w2);
  add(p.w3);
  add(p.w4);
  add(p.dense1_w);
  addv(p.dense1_b);
  add(p.dense2_w);
  addv(p.dense2_b);
  add(p.out_w);
  ptrs.push_back(&p.out_b);
  return ptrs;
}

}  // namespace

Eigen::Index LstmParams::parameter_count() const {
  return w1.size() + w2.size() + w3.size() + w4.size() + dense1_w.size() + dense1_b.size() +
         dense2_w.size() + dense2_b.size() + out_w.size() + 1;
}

void LstmParams::validate() const {
  const Eigen::Index h = w1.rows();
  if (h <= 0) throw std::invalid_argument("LstmParams: empty gate matrices");
  for (const MatX* w : {&w1, &w2, &w3, &w4}) {
    if (w->rows() != h || w->cols() != h + 2) {
      throw std::invalid_argument("LstmParams: gate matrices must be h x (h+2)");
    }
    if (!w->allFinite()) throw std::invalid_argument("LstmParams: non-finite gate weights");
  }
  if (dense1_w.cols() != h || dense1_w.rows() != dense1_b.size() ||
      dense2_w.cols() != dense1_w.rows() || dense2_w.rows() != dense2_b.size() ||
      out_w.cols() != dense2_w.rows() || out_w.rows() != 1) {
    throw std::invalid_argument("LstmParams: dense layer shapes are inconsistent");
  }
  if (!dense1_w.allFinite() || !dense1_b.allFinite() || !dense2_w.allFinite() ||
      !dense2_b.allFinite() || !out_w.allFinite() || !std::isfinite(out_b)) {
    throw std::invalid_argument("LstmParams: non-finite dense weights");
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be positive");
  if (epochs <= 0) throw std::invalid_argument("TrainConfig: epochs must be positive");
  if (!(train_split > 0.0) || !(train_split < 1.0)) {
    throw std::invalid_argument("TrainConfig: train_split must be in (0, 1)");
  }
  if (hidden_size <= 0) throw std::invalid_argument("TrainConfig: hidden_size must be positive");
  if (batch_size < 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 0");
}

WindowDataset make_windows(const VecX& signal_deg, Eigen::Index r, Eigen::Index m,
                           double period_s) {
  if (r <= 0 || m <= 0) throw std::invalid_argument("make_windows: r and m must be positive");
  const Eigen::Index n = signal_deg.size();
  const Eigen::Index count = n - r - m + 1;
  if (count < 1) {
    throw std::invalid_argument("make_windows: series too short (need at least r + m samples)");
  }
  WindowDataset ds;
  ds.r = r;
  ds.m = m;
  ds.period_s = period_s;
  ds.windows.resize(count, r);
  ds.targets.resize(count);
  for (Eigen::Index s = 0; s < count; ++s) {
    ds.windows.row(s) = signal_deg.segment(s, r).transpose();
    ds.targets(s) = signal_deg(s + r - 1 + m);
  }
  return ds;
}

LstmParams init_lstm_params(Eigen::Index hidden_size, std::uint64_t seed) {
  if (hidden_size <= 0) throw std::invalid_argument("init_lstm_params: hidden_size must be positive");
  std::mt19937_64 rng(seed);
  const auto uniform = [&rng](Eigen::Index rows, Eigen::Index cols, double scale) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    MatX m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
  };
  const Eigen::Index h = hidden_size;
  const double gate_scale = 1.0 / std::sqrt(static_cast<double>(h + 2));
  LstmParams p;
  p.w1 = uniform(h, h + 2, gate_scale);
  p.w2 = uniform(h, h + 2, gate_scale);
  p.w3 = uniform(h, h + 2, gate_scale);
  p.w4 = uniform(h, h + 2, gate_scale);
  p.w3.col(h + 1).array() += 1.0;  // forget-gate bias starts open
  p.dense1_w = uniform(10, h, std::sqrt(6.0 / static_cast<double>(h + 10)));
  p.dense1_b = VecX::Zero(10);
  p.dense2_w = uniform(10, 10, std::sqrt(6.0 / 20.0));
  p.dense2_b = VecX::Zero(10);
  p.out_w = uniform(1, 10, std::sqrt(6.0 / 11.0));
  p.out_b = 0.0;
  return p;
}

double lstm_forward(const LstmParams& params, const VecX& window_deg) {
  params.validate();
  BatchCache cache;
  forward_batch(params, window_deg.transpose(), cache);
  return cache.y_deg(0);
}

LstmActivations lstm_forward_detailed(const LstmParams& params, const VecX& window_deg) {
  params.validate();
  BatchCache cache;
  forward_batch(params, window_deg.transpose(), cache);
  LstmActivations act;
  act.hidden = cache.x_o_final.col(0);
  act.dense1 = cache.d1.col(0);
  act.dense2 = cache.d2.col(0);
  act.output_deg = cache.y_deg(0);
  return act;
}

TrainResult train(const WindowDataset& dataset, const TrainConfig& config,
                  const LstmParams* warm_start) {
  config.validate();
  if (dataset.count() < 1) throw std::invalid_argument("train: empty dataset");

  const Eigen::Index count = dataset.count();
  Eigen::Index n_train = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::floor(config.train_split * static_cast<double>(count))));
  n_train = std::min(n_train, count);
  const Eigen::Index n_val = count - n_train;

  const MatX train_windows = dataset.windows.topRows(n_train);
  const VecX train_targets = dataset.targets.head(n_train);
  const MatX val_windows = dataset.windows.bottomRows(n_val);
  const VecX val_targets = dataset.targets.tail(n_val);

  LstmParams params = warm_start ? *warm_start : init_lstm_params(config.hidden_size, config.seed);
  params.validate();

  TrainResult result;
  result.train_loss_deg2.resize(config.epochs);
  result.val_loss_deg2.resize(config.epochs);

  // The learning rate is expressed against the scale-normalized loss so the
  // same defaults work across signal magnitudes.
  const double loss_scale = 1.0 / (kSignalScale * kSignalScale);
  const Eigen::Index batch = config.batch_size > 0 ? std::min(config.batch_size, n_train) : n_train;

  LstmParams adam_m = zero_like(params);
  LstmParams adam_v = zero_like(params);
  std::vector<double*> theta = param_pointers(params);
  std::vector<double*> m_state = param_pointers(adam_m);
  std::vector<double*> v_state = param_pointers(adam_v);
  std::vector<double> direction(theta.size(), 0.0);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  long update_count = 0;

  BatchCache cache;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n_train; start += batch) {
      const Eigen::Index len = std::min(batch, n_train - start);
      forward_batch(params, train_windows.middleRows(start, len), cache);
      const Eigen::RowVectorXd err =
          cache.y_deg - train_targets.segment(start, len).transpose();
      epoch_loss += err.squaredNorm();
      const double batch_loss = err.squaredNorm() / static_cast<double>(len);
      const Eigen::RowVectorXd dy = 2.0 * err / static_cast<double>(len);
      LstmParams grads = backward_batch(params, cache, dy);

      if (config.optimizer == TrainConfig::Optimizer::GradientDescent) {
        axpy(params, -config.learning_rate * loss_scale, grads);
        continue;
      }

      // Adam direction with backtracking acceptance: a step only lands if
      // the batch loss does not increase, so full-batch training descends
      // monotonically. Moment state advances once per update either way.
      ++update_count;
      std::vector<double*> g = param_pointers(grads);
      const double corr1 = 1.0 - std::pow(kBeta1, static_cast<double>(update_count));
      const double corr2 = 1.0 - std::pow(kBeta2, static_cast<double>(update_count));
      for (std::size_t i = 0; i < theta.size(); ++i) {
        const double gi = *g[i] * loss_scale;
        *m_state[i] = kBeta1 * *m_state[i] + (1.0 - kBeta1) * gi;
        *v_state[i] = kBeta2 * *v_state[i] + (1.0 - kBeta2) * gi * gi;
        direction[i] = (*m_state[i] / corr1) / (std::sqrt(*v_state[i] / corr2) + kAdamEps);
      }

      double alpha = config.learning_rate;
      bool accepted = false;
      for (int attempt = 0; attempt < 7 && !accepted; ++attempt, alpha *= 0.5) {
        for (std::size_t i = 0; i < theta.size(); ++i) *theta[i] -= alpha * direction[i];
        const double trial =
            mse_deg2(params, train_windows.middleRows(start, len), train_targets.segment(start, len));
        if (trial <= batch_loss) {
          accepted = true;
        } else {
          for (std::size_t i = 0; i < theta.size(); ++i) *theta[i] += alpha * direction[i];
        }
      }
    }
    // Per-epoch losses: training loss over the epoch's batches before each
    // update, validation after the epoch.
    const double train_loss = epoch_loss / static_cast<double>(n_train);
    result.train_loss_deg2(epoch) = train_loss;
    result.val_loss_deg2(epoch) =
        n_val > 0 ? mse_deg2(params, val_windows, val_targets) : train_loss;
    if (!std::isfinite(train_loss)) throw DivergenceError(epoch);
  }
  result.params = std::move(params);
  return result;
}

double gradient_check(const LstmParams& params, const VecX& window_deg, double target_deg,
                      double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-4)) {
    throw std::invalid_argument("gradient_check: epsilon must be in [1e-7, 1e-4]");
  }
  params.validate();

  BatchCache cache;
  forward_batch(params, window_deg.transpose(), cache);
  Eigen::RowVectorXd dy(1);
  dy(0) = 2.0 * (cache.y_deg(0) - target_deg);
  LstmParams analytic = backward_batch(params, cache, dy);

  LstmParams probe = params;
  const std::vector<double*> coeffs = param_pointers(probe);
  std::vector<double*> grads = param_pointers(analytic);

  // Loss plus the ReLU activation pattern: a perturbation that flips a unit
  // crosses a kink, where the central difference is not a derivative.
  const auto loss = [&probe, &window_deg, target_deg](std::uint32_t& pattern) {
    BatchCache c;
    forward_batch(probe, window_deg.transpose(), c);
    pattern = 0;
    for (Eigen::Index i = 0; i < c.d1_pre.rows(); ++i) {
      if (c.d1_pre(i, 0) > 0.0) pattern |= (1u << i);
    }
    const double e = c.y_deg(0) - target_deg;
    return e * e;
  };

  double grad_scale = 0.0;
  for (const double* g : grads) grad_scale = std::max(grad_scale, std::abs(*g));
  // Coordinates far below the gradient scale sit at the finite-difference
  // noise floor; compare them against that scale instead of themselves.
  const double floor = std::max(1e-6, 1e-4 * grad_scale);

  double max_rel = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const double saved = *coeffs[i];
    std::uint32_t pattern_up = 0, pattern_down = 0;
    *coeffs[i] = saved + epsilon;
    const double up = loss(pattern_up);
    *coeffs[i] = saved - epsilon;
    const double down = loss(pattern_down);
    *coeffs[i] = saved;
    if (pattern_up != pattern_down) continue;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double ga = *grads[i];
    const double rel = std::abs(ga - numeric) / std::max({std::abs(ga), std::abs(numeric), floor});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

std::vector<StreamPrediction> predict_stream(const LstmModel& model, const std::vector<double>& t,
                                             const VecX& signal_deg) {
  model.params.validate();
  if (static_cast<Eigen::Index>(t.size()) != signal_deg.size()) {
    throw std::invalid_argument("predict_stream: time and signal sizes differ");
  }
  const Eigen::Index n = signal_deg.size();
  const Eigen::Index r = model.r;
  std::vector<StreamPrediction> out;
  if (n < r) return out;

  MatX windows(n - r + 1, r);
  for (Eigen::Index i = r - 1; i < n; ++i) {
    windows.row(i - (r - 1)) = signal_deg.segment(i - r + 1, r).transpose();
  }
  BatchCache cache;
  forward_batch(model.params, windows, cache);

  const double lead = static_cast<double>(model.m) * model.period_s;
  out.reserve(static_cast<std::size_t>(windows.rows()));
  for (Eigen::Index k = 0; k < windows.rows(); ++k) {
    StreamPrediction p;
    p.t_emit = t[static_cast<std::size_t>(k + r - 1)];
    p.t_target = p.t_emit + lead;
    p.value_deg = cache.y_deg(k);
    out.push_back(p);
  }
  return out;
}

namespace {

nlohmann::json matrix_to_json(const MatX& m) {
  nlohmann::json j;
  j["shape"] = {m.rows(), m.cols()};
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = data;
  return j;
}

MatX matrix_from_json(const nlohmann::json& j) {
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  if (shape.size() != 2) throw std::invalid_argument("model file: shape must be [rows, cols]");
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != shape[0] * shape[1]) {
    throw std::invalid_argument("model file: data length does not match shape");
  }
  MatX m(shape[0], shape[1]);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = data[static_cast<std::size_t>(r * m.cols() + c)];
  return m;
}

}  // namespace

void save_lstm_model(const std::string& path, const LstmModel& model) {
  model.params.validate();
  nlohmann::json j;
  j["w1"] = matrix_to_json(model.params.w1);
  j["w2"] = matrix_to_json(model.params.w2);
  j["w3"] = matrix_to_json(model.params.w3);
  j["w4"] = matrix_to_json(model.params.w4);
  j["dense1_w"] = matrix_to_json(model.params.dense1_w);
  j["dense1_b"] = matrix_to_json(model.params.dense1_b);
  j["dense2_w"] = matrix_to_json(model.params.dense2_w);
  j["dense2_b"] = matrix_to_json(model.params.dense2_b);
  j["out_w"] = matrix_to_json(model.params.out_w);
  j["out_b"] = model.params.out_b;
  j["hidden_size"] = model.params.hidden_size();
  j["r"] = model.r;
  j["m"] = model.m;
  j["period_s"] = model.period_s;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << j.dump(2);
}

LstmModel load_lstm_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("model file: invalid JSON: ") + e.what());
  }
  LstmModel model;
  try {
    model.params.w1 = matrix_from_json(j.at("w1"));
    model.params.w2 = matrix_from_json(j.at("w2"));
    model.params.w3 = matrix_from_json(j.at("w3"));
    model.params.w4 = matrix_from_json(j.at("w4"));
    model.params.dense1_w = matrix_from_json(j.at("dense1_w"));
    model.params.dense1_b = matrix_from_json(j.at("dense1_b"));
    model.params.dense2_w = matrix_from_json(j.at("dense2_w"));
    model.params.dense2_b = matrix_from_json(j.at("dense2_b"));
    model.params.out_w = matrix_from_json(j.at("out_w"));
    model.params.out_b = j.at("out_b").get<double>();
    model.r = j.at("r").get<Eigen::Index>();
    model.m = j.at("m").get<Eigen::Index>();
    model.period_s = j.at("period_s").get<double>();
    if (j.at("hidden_size").get<Eigen::Index>() != model.params.hidden_size()) {
      throw std::invalid_argument("model file: hidden_size does not match weight shapes");
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("model file: missing or mistyped field: ") + e.what());
  }
  model.params.validate();
  return model;
}

VecX decimate(const VecX& signal, int factor) {
  if (factor <= 0) throw std::invalid_argument("decimate: factor must be positive");
  const Eigen::Index n = (signal.size() + factor - 1) / factor;
  VecX out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = signal(i * factor);
  return out;
}

std::vector<double> decimate(const std::vector<double>& t, int factor) {
  if (factor <= 0) throw std::invalid_argument("decimate: factor must be positive");
  std::vector<double> out;
  for (std::size_t i = 0; i < t.size(); i += static_cast<std::size_t>(factor)) out.push_back(t[i]);
  return out;
}

VecX resample_linear(const std::vector<double>& t, const VecX& values,
                     const std::vector<double>& t_new) {
  if (static_cast<Eigen::Index>(t.size()) != values.size() || t.empty()) {
    throw std::invalid_argument("resample_linear: time and value sizes differ or empty");
  }
  VecX out(static_cast<Eigen::Index>(t_new.size()));
  std::size_t j = 0;
  for (std::size_t i = 0; i < t_new.size(); ++i) {
    const double x = t_new[i];
    if (x <= t.front()) {
      out(static_cast<Eigen::Index>(i)) = values(0);
      continue;
    }
    if (x >= t.back()) {
      out(static_cast<Eigen::Index>(i)) = values(values.size() - 1);
      continue;
    }
    while (j + 1 < t.size() && t[j + 1] < x) ++j;
    const double w = (x - t[j]) / (t[j + 1] - t[j]);
    out(static_cast<Eigen::Index>(i)) =
        (1.0 - w) * values(static_cast<Eigen::Index>(j)) +
        w * values(static_cast<Eigen::Index>(j + 1));
  }
  return out;
}

int best_correlation_lag(const VecX& reference, const VecX& series, int max_lag) {
  if (max_lag < 0) throw std::invalid_argument("best_correlation_lag: max_lag must be >= 0");
  const auto nr = static_cast<int>(reference.size());
  const auto ns = static_cast<int>(series.size());

  const auto correlation_at = [&](int lag) -> double {
    const int lo = std::max(0, -lag);
    const int hi = std::min(nr, ns - lag);
    const int len = hi - lo;
    if (len < 3) return -std::numeric_limits<double>::infinity();
    const VecX a = reference.segment(lo, len);
    const VecX b = series.segment(lo + lag, len);
    const VecX ac = a.array() - a.mean();
    const VecX bc = b.array() - b.mean();
    const double denom = ac.norm() * bc.norm();
    if (denom < 1e-12) return -std::numeric_limits<double>::infinity();
    return ac.dot(bc) / denom;
  };

  int best_lag = 0;
  double best = correlation_at(0);
  for (int k = 1; k <= max_lag; ++k) {
    for (const int lag : {k, -k}) {
      const double c = correlation_at(lag);
      if (c > best) {
        best = c;
        best_lag = lag;
      }
    }
  }
  return best_lag;
}

}  // namespace teleop
