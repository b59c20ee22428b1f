#ifndef TELEOP_PREDICTOR_HPP
#define TELEOP_PREDICTOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "teleop/se3.hpp"

namespace teleop {

/// Fixed conditioning constant of the network: inputs enter the recurrence
/// divided by this and the output node is multiplied by it, so the
/// recurrence works in O(1) quantities while the interface stays in
/// degrees. Part of the architecture, not a data statistic.
inline constexpr double kLstmSignalScale = 50.0;

/// Supervised sliding windows over a scalar series: window ending at index
/// n is paired with the value at n + m. Consecutive windows overlap by
/// r - 1 elements.
struct WindowDataset {
  MatX windows;  // count x r
  VecX targets;  // count
  Eigen::Index r = 20;
  Eigen::Index m = 10;
  double period_s = 0.06;

  [[nodiscard]] Eigen::Index count() const { return windows.rows(); }
};

/// Trainable parameters: four gate matrices with bias columns over the
/// concatenated [input; previous block output; 1], a ReLU dense layer, a
/// linear dense layer, and a single output node.
struct LstmParams {
  MatX w1, w2, w3, w4;  // h x (h + 2); candidate, input, forget, output gates
  MatX dense1_w;        // 10 x h
  VecX dense1_b;        // 10
  MatX dense2_w;        // 10 x 10
  VecX dense2_b;        // 10
  MatX out_w;           // 1 x 10
  double out_b = 0.0;

  [[nodiscard]] Eigen::Index hidden_size() const { return w1.rows(); }
  [[nodiscard]] Eigen::Index parameter_count() const;
  void validate() const;
};

/// Parameters plus the window geometry they were trained for.
struct LstmModel {
  LstmParams params;
  Eigen::Index r = 20;
  Eigen::Index m = 10;
  double period_s = 0.06;
};

struct TrainConfig {
  /// Adam converges within the epoch budget on this family of signals;
  /// plain gradient descent is kept for reference but needs far more
  /// epochs. Both are deterministic: fixed batch order, seeded init.
  enum class Optimizer { Adam, GradientDescent };

  double learning_rate = 0.01;   // against the scale-normalized loss
  int epochs = 200;
  std::uint64_t seed = 1;
  double train_split = 0.8;      // fraction of windows used for training
  Eigen::Index hidden_size = 20;
  Eigen::Index batch_size = 0;   // 0 = full batch
  Optimizer optimizer = Optimizer::Adam;

  void validate() const;
};

struct TrainResult {
  LstmParams params;
  VecX train_loss_deg2;  // per epoch, after that epoch's update
  VecX val_loss_deg2;
};

/// Thrown when the training loss becomes non-finite.
struct DivergenceError : std::runtime_error {
  int epoch;
  explicit DivergenceError(int at)
      : std::runtime_error("training diverged (loss not finite) at epoch " + std::to_string(at)),
        epoch(at) {}
};

struct LstmActivations {
  VecX hidden;  // final block output, h
  VecX dense1;  // 10, post-ReLU
  VecX dense2;  // 10
  double output_deg = 0.0;
};

struct StreamPrediction {
  double t_emit = 0.0;    // when the prediction is available
  double t_target = 0.0;  // t_emit + m * period: the instant it refers to
  double value_deg = 0.0;
};

/// Throws std::invalid_argument when the series is shorter than r + m.
[[nodiscard]] WindowDataset make_windows(const VecX& signal_deg, Eigen::Index r, Eigen::Index m,
                                         double period_s);

/// Seeded uniform initialization; the forget-gate bias starts positive.
[[nodiscard]] LstmParams init_lstm_params(Eigen::Index hidden_size, std::uint64_t seed);

/// Single-window forward pass; the window is in degrees.
[[nodiscard]] double lstm_forward(const LstmParams& params, const VecX& window_deg);

/// Forward pass exposing the layer activations.
[[nodiscard]] LstmActivations lstm_forward_detailed(const LstmParams& params,
                                                    const VecX& window_deg);

/// Full-batch gradient descent on mean squared error, backpropagation
/// through time for the recurrence. Deterministic per seed. Throws
/// DivergenceError when the loss stops being finite. `warm_start`
/// overrides the seeded initialization when given.
[[nodiscard]] TrainResult train(const WindowDataset& dataset, const TrainConfig& config,
                                const LstmParams* warm_start = nullptr);

/// Max relative difference between analytic gradients of the squared error
/// on one sample and central finite differences over every parameter.
/// Coordinates whose perturbation flips a ReLU unit are skipped (no
/// derivative exists across the kink) and near-zero coordinates compare
/// against the gradient scale, where the difference quotient is all
/// round-off.
[[nodiscard]] double gradient_check(const LstmParams& params, const VecX& window_deg,
                                    double target_deg, double epsilon);

/// Streaming prediction: one output per index once r samples are seen,
/// timestamped m * period ahead of its emission time.
[[nodiscard]] std::vector<StreamPrediction> predict_stream(const LstmModel& model,
                                                           const std::vector<double>& t,
                                                           const VecX& signal_deg);

/// Model file I/O (JSON of named weight arrays with explicit shapes).
void save_lstm_model(const std::string& path, const LstmModel& model);
[[nodiscard]] LstmModel load_lstm_model(const std::string& path);

/// Keep every `factor`-th sample.
[[nodiscard]] VecX decimate(const VecX& signal, int factor);
[[nodiscard]] std::vector<double> decimate(const std::vector<double>& t, int factor);

/// Linear-interpolation resampling of (t, values) onto t_new. Values clamp
/// at the ends.
[[nodiscard]] VecX resample_linear(const std::vector<double>& t, const VecX& values,
                                   const std::vector<double>& t_new);

/// Lag (samples) maximizing the Pearson correlation of reference[i] with
/// series[i + lag] over the overlap; negative when the series leads the
/// reference. Ties resolve to the smallest |lag|.
[[nodiscard]] int best_correlation_lag(const VecX& reference, const VecX& series, int max_lag);

}  // namespace teleop

#endif  // TELEOP_PREDICTOR_HPP
