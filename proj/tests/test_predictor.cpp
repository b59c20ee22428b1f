#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <random>

#include "doctest.h"
#include "teleop/intent.hpp"
#include "teleop/predictor.hpp"

using namespace teleop;

namespace {

// Brute-force oracle: enumerate every window start whose target index fits.
int window_count_oracle(int n, int r, int m) {
  int count = 0;
  for (int start = 0; start < n; ++start) {
    const int end = start + r - 1;
    if (end < n && end + m < n) ++count;
  }
  return count;
}

VecX z_axis_signal_deg(const SigmoidTraceConfig& cfg) {
  const IntentSignal sig = generate_intent_signal(cfg);
  return decimate(VecX(sig.dtheta.col(2) * 180.0 / M_PI), 12);
}

double scalar_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("make_windows counts and geometry") {
  VecX signal(40);
  for (Eigen::Index i = 0; i < 40; ++i) signal(i) = static_cast<double>(i);

  const WindowDataset ds = make_windows(signal, 20, 10, 0.06);
  CHECK(ds.count() == 11);
  CHECK(ds.count() == window_count_oracle(40, 20, 10));

  // Consecutive windows overlap by 19 elements.
  for (Eigen::Index s = 1; s < ds.count(); ++s) {
    CHECK((ds.windows.row(s).head(19) - ds.windows.row(s - 1).tail(19)).norm() == 0.0);
  }
  // Window ending at index n has its target at n + m.
  for (Eigen::Index s = 0; s < ds.count(); ++s) {
    const double last = ds.windows(s, 19);
    CHECK(ds.targets(s) == last + 10.0);
  }

  CHECK_THROWS_AS((void)make_windows(VecX::Zero(25), 20, 10, 0.06), std::invalid_argument);
  CHECK(make_windows(VecX::Zero(30), 20, 10, 0.06).count() == 1);

  std::mt19937_64 rng(131);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 30 + static_cast<int>(rng() % 100);
    const int r = 2 + static_cast<int>(rng() % 10);
    const int m = 1 + static_cast<int>(rng() % 10);
    if (n < r + m) continue;
    CHECK(make_windows(VecX::Zero(n), r, m, 0.01).count() == window_count_oracle(n, r, m));
  }
}

TEST_CASE("lstm_forward matches a manual recurrence") {
  // Tiny network, hand-set weights, oracle recurrence written out scalar by
  // scalar following the gate equations and the documented signal scale.
  const Eigen::Index h = 2;
  LstmParams p;
  p.w1 = MatX::Zero(h, h + 2);
  p.w2 = MatX::Zero(h, h + 2);
  p.w3 = MatX::Zero(h, h + 2);
  p.w4 = MatX::Zero(h, h + 2);
  p.w1 << 0.3, -0.2, 0.1, 0.05, -0.4, 0.25, 0.15, -0.1;
  p.w2 << 0.2, 0.1, -0.3, 0.0, 0.1, -0.2, 0.3, 0.05;
  p.w3 << -0.1, 0.2, 0.1, 0.3, 0.2, 0.1, -0.2, -0.05;
  p.w4 << 0.4, -0.1, 0.2, 0.1, -0.3, 0.2, 0.1, 0.0;
  p.dense1_w = MatX::Zero(10, h);
  p.dense1_w << 0.3, -0.2, 0.1, 0.4, -0.5, 0.2, 0.25, -0.15, 0.05, 0.35, -0.45, 0.1, 0.2, 0.3,
      -0.25, 0.15, 0.1, -0.05, 0.4, -0.3;
  p.dense1_b = VecX::LinSpaced(10, -0.2, 0.25);
  p.dense2_w = 0.1 * MatX::Identity(10, 10);
  p.dense2_w(0, 5) = -0.3;
  p.dense2_w(7, 2) = 0.2;
  p.dense2_b = VecX::Constant(10, 0.05);
  p.out_w = MatX::Zero(1, 10);
  p.out_w << 0.2, -0.1, 0.3, 0.05, -0.2, 0.1, 0.15, -0.05, 0.25, -0.3;
  p.out_b = 0.02;

  const Eigen::Vector3d window(4.0, -7.0, 11.0);

  // Oracle: explicit loops.
  Eigen::Vector2d x_o = Eigen::Vector2d::Zero();
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (int t = 0; t < 3; ++t) {
    Eigen::Vector4d u;
    u << window(t) / kLstmSignalScale, x_o(0), x_o(1), 1.0;
    Eigen::Vector2d cand, in_gate, forget, out_gate;
    for (int i = 0; i < 2; ++i) {
      cand(i) = std::tanh(p.w1.row(i).dot(u));
      in_gate(i) = scalar_sigmoid(p.w2.row(i).dot(u));
      forget(i) = scalar_sigmoid(p.w3.row(i).dot(u));
      out_gate(i) = scalar_sigmoid(p.w4.row(i).dot(u));
    }
    for (int i = 0; i < 2; ++i) {
      c(i) = in_gate(i) * cand(i) + forget(i) * c(i);
      x_o(i) = out_gate(i) * std::tanh(c(i));
    }
  }
  VecX d1 = (p.dense1_w * x_o + p.dense1_b).cwiseMax(0.0);
  VecX d2 = p.dense2_w * d1 + p.dense2_b;
  const double oracle = kLstmSignalScale * ((p.out_w * d2)(0) + p.out_b);

  const double prediction = lstm_forward(p, window);
  CHECK(prediction == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("lstm_forward zero weights and layer shapes") {
  LstmParams p;
  const Eigen::Index h = 20;
  p.w1 = MatX::Zero(h, h + 2);
  p.w2 = MatX::Zero(h, h + 2);
  p.w3 = MatX::Zero(h, h + 2);
  p.w4 = MatX::Zero(h, h + 2);
  p.dense1_w = MatX::Zero(10, h);
  p.dense1_b = VecX::Zero(10);
  p.dense2_w = MatX::Zero(10, 10);
  p.dense2_b = VecX::Zero(10);
  p.out_w = MatX::Zero(1, 10);
  p.out_b = 0.0;

  VecX window = VecX::LinSpaced(20, -5.0, 12.0);
  CHECK(lstm_forward(p, window) == 0.0);

  const LstmParams q = init_lstm_params(20, 7);
  const LstmActivations act = lstm_forward_detailed(q, window);
  CHECK(act.hidden.size() == 20);
  CHECK(act.dense1.size() == 10);
  CHECK(act.dense2.size() == 10);
  CHECK((act.dense1.array() >= 0.0).all());  // ReLU output
  CHECK(std::isfinite(act.output_deg));

  LstmParams bad = q;
  bad.dense1_w = MatX::Zero(10, 7);  // wrong inner dimension
  CHECK_THROWS_AS((void)lstm_forward(bad, window), std::invalid_argument);
}

TEST_CASE("gradient_check against central differences") {
  std::mt19937_64 rng(137);
  std::uniform_real_distribution<double> u(-15.0, 15.0);
  for (const std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const LstmParams p = init_lstm_params(8, seed);
    VecX window(12);
    for (Eigen::Index i = 0; i < 12; ++i) window(i) = u(rng);
    const double target = u(rng);
    CHECK(gradient_check(p, window, target, 1e-5) < 1e-4);
  }
}

TEST_CASE("gradient_check is exactly zero at an exact fit") {
  const Eigen::Index h = 4;
  LstmParams p;
  p.w1 = MatX::Zero(h, h + 2);
  p.w2 = MatX::Zero(h, h + 2);
  p.w3 = MatX::Zero(h, h + 2);
  p.w4 = MatX::Zero(h, h + 2);
  p.dense1_w = MatX::Zero(10, h);
  p.dense1_b = VecX::Zero(10);
  p.dense2_w = MatX::Zero(10, 10);
  p.dense2_b = VecX::Zero(10);
  p.out_w = MatX::Zero(1, 10);
  p.out_b = 0.0;
  // Zero window, zero target, zero output: loss 0 and flat in every
  // direction that matters; analytic and numeric gradients both vanish
  // down to floating-point dust.
  CHECK(gradient_check(p, VecX::Zero(6), 0.0, 1e-5) <= 1e-9);
}

TEST_CASE("directional derivative matches the analytic gradient to second order") {
  const LstmParams p = init_lstm_params(6, 11);
  VecX window = VecX::LinSpaced(10, -8.0, 20.0);
  const double target = 3.0;

  LstmParams probe = p;
  const auto loss_of = [&probe, &window, target]() {
    const double e = lstm_forward(probe, window) - target;
    return e * e;
  };
  const double base = loss_of();

  // Perturb one parameter; the one-sided loss change must follow the
  // symmetric slope with a quadratic remainder (halving delta ~ 4x less).
  const auto remainder = [&](double delta) {
    probe.w2(3, 2) = p.w2(3, 2) + delta;
    const double up = loss_of();
    probe.w2(3, 2) = p.w2(3, 2) - delta;
    const double down = loss_of();
    probe.w2(3, 2) = p.w2(3, 2);
    const double grad = (up - down) / (2.0 * delta);
    return std::abs((up - base) - grad * delta);
  };
  const double r1 = remainder(1e-3);
  const double r2 = remainder(5e-4);
  if (r1 > 1e-14) {
    CHECK(r2 <= 0.35 * r1);
  } else {
    CHECK(r2 <= 1e-14);
  }
}

TEST_CASE("training is deterministic per seed") {
  SigmoidTraceConfig cfg;
  cfg.wavelet_count = 4;
  cfg.seed = 17;
  const WindowDataset ds = make_windows(z_axis_signal_deg(cfg), 20, 10, 0.06);

  TrainConfig tc;
  tc.epochs = 8;
  tc.seed = 5;
  const TrainResult a = train(ds, tc);
  const TrainResult b = train(ds, tc);
  CHECK((a.params.w1 - b.params.w1).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.params.dense2_w - b.params.dense2_w).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.params.out_b == b.params.out_b);
  CHECK((a.train_loss_deg2 - b.train_loss_deg2).lpNorm<Eigen::Infinity>() == 0.0);

  TrainConfig other = tc;
  other.seed = 6;
  const TrainResult c = train(ds, other);
  CHECK((a.params.w1 - c.params.w1).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("training loss is flat at zero learning rate") {
  SigmoidTraceConfig cfg;
  cfg.wavelet_count = 3;
  cfg.seed = 19;
  const WindowDataset ds = make_windows(z_axis_signal_deg(cfg), 20, 10, 0.06);
  TrainConfig tc;
  tc.epochs = 6;
  tc.learning_rate = 1e-300;  // effectively zero, still valid
  const TrainResult res = train(ds, tc);
  for (int e = 1; e < 6; ++e) {
    CHECK(res.train_loss_deg2(e) == doctest::Approx(res.train_loss_deg2(0)).epsilon(1e-12));
  }
}

TEST_CASE("training converges monotonically on a sigmoid dataset") {
  SigmoidTraceConfig cfg;
  cfg.wavelet_count = 12;
  cfg.seed = 23;
  const WindowDataset ds = make_windows(z_axis_signal_deg(cfg), 20, 10, 0.06);

  TrainConfig tc;
  tc.epochs = 80;
  const TrainResult res = train(ds, tc);

  for (int e = 6; e < tc.epochs; ++e) {
    CHECK(res.train_loss_deg2(e) <= res.train_loss_deg2(e - 1) + 1e-9);
  }
  CHECK(res.train_loss_deg2(tc.epochs - 1) < res.train_loss_deg2(0));
  CHECK(res.val_loss_deg2(tc.epochs - 1) < 5.0);
}

TEST_CASE("gradient descent with an absurd rate reports divergence") {
  SigmoidTraceConfig cfg;
  cfg.wavelet_count = 3;
  cfg.seed = 29;
  const WindowDataset ds = make_windows(z_axis_signal_deg(cfg), 20, 10, 0.06);
  TrainConfig tc;
  tc.optimizer = TrainConfig::Optimizer::GradientDescent;
  tc.learning_rate = 1e9;
  tc.epochs = 50;
  try {
    (void)train(ds, tc);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch >= 0);
    CHECK(e.epoch < 50);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("model json round trip preserves every weight") {
  LstmModel model;
  model.params = init_lstm_params(20, 41);
  model.r = 20;
  model.m = 10;
  model.period_s = 0.06;
  const std::string path = "/tmp/teleop_model_test.json";
  save_lstm_model(path, model);
  const LstmModel back = load_lstm_model(path);
  CHECK((back.params.w1 - model.params.w1).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((back.params.w4 - model.params.w4).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((back.params.dense1_w - model.params.dense1_w).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((back.params.dense1_b - model.params.dense1_b).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(back.params.out_b == model.params.out_b);
  CHECK(back.r == 20);
  CHECK(back.m == 10);
  CHECK(back.period_s == 0.06);
  CHECK_THROWS_AS((void)load_lstm_model("/nonexistent/model.json"), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("predict_stream basics") {
  LstmModel model;
  model.params = init_lstm_params(8, 3);
  model.r = 10;
  model.m = 4;
  model.period_s = 0.06;

  std::vector<double> t;
  VecX signal(9);
  for (int i = 0; i < 9; ++i) {
    t.push_back(0.06 * i);
    signal(i) = i;
  }
  CHECK(predict_stream(model, t, signal).empty());

  std::vector<double> t2;
  VecX signal2(25);
  for (int i = 0; i < 25; ++i) {
    t2.push_back(0.06 * i);
    signal2(i) = std::sin(0.3 * i);
  }
  const auto out = predict_stream(model, t2, signal2);
  REQUIRE(out.size() == 16);  // 25 - 10 + 1
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].t_emit == doctest::Approx(t2[i + 9]));
    CHECK(out[i].t_target == doctest::Approx(out[i].t_emit + 4 * 0.06));
  }
}

TEST_CASE("a model trained on constants predicts the constant") {
  const double level = 5.0;
  VecX signal = VecX::Constant(120, level);
  const WindowDataset ds = make_windows(signal, 20, 10, 0.06);
  TrainConfig tc;
  tc.epochs = 60;
  tc.learning_rate = 0.02;
  const TrainResult res = train(ds, tc);

  LstmModel model;
  model.params = res.params;
  std::vector<double> t;
  for (int i = 0; i < 60; ++i) t.push_back(0.06 * i);
  const auto out = predict_stream(model, t, VecX::Constant(60, level));
  REQUIRE(!out.empty());
  for (const auto& p : out) CHECK(p.value_deg == doctest::Approx(level).epsilon(0.02));
}

TEST_CASE("predictions lead the truth by m samples on held-out wavelets") {
  SigmoidTraceConfig train_cfg;
  train_cfg.wavelet_count = 15;
  train_cfg.seed = 31;
  const WindowDataset ds = make_windows(z_axis_signal_deg(train_cfg), 20, 10, 0.06);
  TrainConfig tc;
  tc.epochs = 120;
  const TrainResult res = train(ds, tc);

  SigmoidTraceConfig held_out = train_cfg;
  held_out.seed = 77;
  held_out.wavelet_count = 5;
  const VecX truth = z_axis_signal_deg(held_out);
  std::vector<double> t;
  for (Eigen::Index i = 0; i < truth.size(); ++i) t.push_back(0.06 * static_cast<double>(i));

  LstmModel model;
  model.params = res.params;
  const auto stream = predict_stream(model, t, truth);
  // Emission-aligned series: prediction at emit index i estimates truth at
  // i + m, so it leads the reference.
  VecX emitted(static_cast<Eigen::Index>(stream.size()));
  for (std::size_t i = 0; i < stream.size(); ++i) {
    emitted(static_cast<Eigen::Index>(i)) = stream[i].value_deg;
  }
  const VecX reference = truth.tail(emitted.size());

  const int lag = best_correlation_lag(reference, emitted, 25);
  CHECK(lag >= -11);
  CHECK(lag <= -9);
}

TEST_CASE("decimate and resample helpers") {
  VecX signal = VecX::LinSpaced(10, 0.0, 9.0);
  const VecX dec = decimate(signal, 3);
  REQUIRE(dec.size() == 4);
  CHECK(dec(0) == 0.0);
  CHECK(dec(1) == 3.0);
  CHECK(dec(3) == 9.0);
  CHECK_THROWS_AS((void)decimate(signal, 0), std::invalid_argument);

  std::vector<double> t = {0.0, 1.0, 2.0};
  VecX v(3);
  v << 0.0, 10.0, 0.0;
  const VecX out = resample_linear(t, v, {-1.0, 0.5, 1.5, 3.0});
  CHECK(out(0) == 0.0);   // clamped
  CHECK(out(1) == 5.0);
  CHECK(out(2) == 5.0);
  CHECK(out(3) == 0.0);   // clamped
}

TEST_CASE("best_correlation_lag sign convention") {
  const int n = 200;
  VecX base(n);
  for (int i = 0; i < n; ++i) {
    base(i) = std::sin(0.11 * i) + 0.4 * std::sin(0.041 * i + 0.7);
  }
  // series[i] = base[i + 5]: the series leads the reference.
  const VecX reference = base.head(180);
  const VecX leading = base.segment(5, 180);
  CHECK(best_correlation_lag(reference, leading, 20) == -5);
  // And a delayed series lags it.
  const VecX delayed = base.segment(0, 180);
  const VecX ref2 = base.segment(7, 180);
  CHECK(best_correlation_lag(ref2, delayed, 20) == 7);
  CHECK(best_correlation_lag(reference, reference, 20) == 0);
}
