// teleop: haptic-glove driven in-hand manipulation toolchain.
//
// Subcommands cover the full pipeline: synthetic data generation, intent
// estimation from glove traces, PCA channel analysis, predictor training,
// leading prediction, closed-loop simulation, and the end-to-end run.
//
// Exit codes: 0 success, 1 usage error, 2 input validation failure,
// 3 numerical failure (non-convergence or divergence; diagnostics written
// to the output directory).

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "teleop/csv.hpp"
#include "teleop/intent.hpp"
#include "teleop/plant_sim.hpp"
#include "teleop/predictor.hpp"

namespace fs = std::filesystem;
using namespace teleop;

namespace {

constexpr double kDegToRad = M_PI / 180.0;
constexpr double kRadToDeg = 180.0 / M_PI;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct ValidationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOpts {
  std::string hand_path;
  std::string glove_path;
  std::string out_dir = "out";
  std::string config_path;
  std::uint64_t seed = 0;
};

struct Profiles {
  HandProfile hand;
  GloveProfile glove;
};

struct EpisodeSettings {
  ControllerConfig controller;
  PlantConfig plant;
  VecX gains_k;
  VecX gains_d;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--hand", opts.hand_path, "Hand profile JSON (default: built-in)");
  cmd->add_option("--glove", opts.glove_path, "Glove profile JSON (default: built-in)");
  cmd->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--config", opts.config_path, "JSON config file (flags win)");
  cmd->add_option("--seed", opts.seed, "Random seed")->capture_default_str();
}

nlohmann::json load_config(const CommonOpts& opts) {
  if (opts.config_path.empty()) return nlohmann::json::object();
  std::ifstream in(opts.config_path);
  if (!in) throw ValidationFailure("cannot open config file: " + opts.config_path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationFailure(std::string("config file: invalid JSON: ") + e.what());
  }
}

Profiles load_profiles(const CommonOpts& opts, const nlohmann::json& config) {
  Profiles p;
  std::string hand = opts.hand_path;
  std::string glove = opts.glove_path;
  if (config.contains("paths")) {
    const auto& paths = config.at("paths");
    if (hand.empty() && paths.contains("hand_profile")) hand = paths.at("hand_profile");
    if (glove.empty() && paths.contains("glove_profile")) glove = paths.at("glove_profile");
  }
  try {
    p.hand = hand.empty() ? default_hand_profile() : load_hand_profile(hand);
    p.glove = glove.empty() ? default_glove_profile(p.hand) : load_glove_profile(glove);
    p.glove.validate(&p.hand);
  } catch (const std::exception& e) {
    throw ValidationFailure(e.what());
  }
  return p;
}

void ensure_out_dir(const CommonOpts& opts) {
  std::error_code ec;
  fs::create_directories(opts.out_dir, ec);
  if (ec) throw ValidationFailure("cannot create output directory: " + opts.out_dir);
}

std::string out_path(const CommonOpts& opts, const std::string& name) {
  return (fs::path(opts.out_dir) / name).string();
}

void write_diagnostics(const CommonOpts& opts, const std::string& what) {
  std::error_code ec;
  fs::create_directories(opts.out_dir, ec);
  std::ofstream out(out_path(opts, "diagnostics.txt"));
  out << what << "\n";
}

EpisodeSettings episode_settings(const Profiles& profiles, const nlohmann::json& config) {
  EpisodeSettings s;
  const Eigen::Index k = profiles.hand.total_joints();
  s.gains_k = VecX::Constant(k, 5.0);
  s.gains_d = VecX::Constant(k, 0.1);
  s.controller.dt = 1.0 / profiles.hand.rrm_rate_hz;

  if (config.contains("controller")) {
    const auto& c = config.at("controller");
    if (c.contains("eta")) s.controller.eta = c.at("eta");
    if (c.contains("dt_s")) s.controller.dt = c.at("dt_s");
    if (c.contains("squeeze_depth_m")) s.controller.squeeze_depth = c.at("squeeze_depth_m");
    if (c.contains("rotation_error_tol_rad")) s.controller.rotation_error_tol = c.at("rotation_error_tol_rad");
    if (c.contains("max_steps")) s.controller.max_steps = c.at("max_steps");
    const auto fill = [k](const nlohmann::json& arr, VecX& out_vec) {
      const auto values = arr.get<std::vector<double>>();
      if (values.size() == 1) {
        out_vec.setConstant(values[0]);
      } else if (static_cast<Eigen::Index>(values.size()) == k) {
        out_vec = Eigen::Map<const VecX>(values.data(), k);
      } else {
        throw ValidationFailure("controller gains must have 1 or k entries");
      }
    };
    if (c.contains("gains_k")) fill(c.at("gains_k"), s.gains_k);
    if (c.contains("gains_d")) fill(c.at("gains_d"), s.gains_d);
  }
  if (config.contains("plant")) {
    const auto& p = config.at("plant");
    if (p.contains("viscous_gain")) s.plant.viscous_gain = p.at("viscous_gain");
    if (p.contains("grasp_chains")) {
      s.plant.grasp_chains = p.at("grasp_chains").get<std::vector<Eigen::Index>>();
    }
    if (p.contains("interaction_f_min_n")) s.plant.interaction_f_min = p.at("interaction_f_min_n");
    if (p.contains("encoder_noise_seed")) {
      s.plant.encoder_noise_seed = p.at("encoder_noise_seed").get<std::uint64_t>();
    }
    if (p.contains("shape")) {
      const std::string kind = p.at("shape");
      if (kind == "sphere") {
        s.plant.shape = ObjectShape::sphere(p.value("sphere_radius_m", 0.0));
      } else if (kind == "box") {
        const auto he = p.at("box_half_extents_m").get<std::vector<double>>();
        if (he.size() != 3) throw ValidationFailure("box_half_extents_m needs 3 values");
        s.plant.shape = ObjectShape::box(Vec3(he[0], he[1], he[2]));
      } else {
        throw ValidationFailure("plant shape must be sphere or box");
      }
    }
  }
  return s;
}

void write_trajectory_csv(const std::string& path, const std::vector<TrajectoryRow>& rows,
                          Eigen::Index joints) {
  std::vector<std::string> header = {"t_s"};
  char buf[16];
  for (Eigen::Index j = 0; j < joints; ++j) {
    std::snprintf(buf, sizeof(buf), "q%02d", static_cast<int>(j) + 1);
    header.emplace_back(buf);
  }
  for (Eigen::Index j = 0; j < joints; ++j) {
    std::snprintf(buf, sizeof(buf), "tau%02d", static_cast<int>(j) + 1);
    header.emplace_back(buf);
  }
  for (const char* name : {"qw", "qx", "qy", "qz", "px", "py", "pz"}) header.emplace_back(name);

  MatX data(static_cast<Eigen::Index>(rows.size()), 1 + 2 * joints + 7);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    data(r, 0) = rows[i].t;
    data.block(r, 1, 1, joints) = rows[i].q.transpose();
    data.block(r, 1 + joints, 1, joints) = rows[i].tau.transpose();
    data.block<1, 4>(r, 1 + 2 * joints) = rows[i].quaternion.transpose();
    data.block<1, 3>(r, 1 + 2 * joints + 4) = rows[i].position.transpose();
  }
  write_csv(path, header, data);
}

void write_goal_pose_csv(const std::string& path, const IntentSeries& series) {
  const std::vector<std::string> header = {"t_s", "qw", "qx", "qy", "qz", "px", "py", "pz"};
  MatX data(static_cast<Eigen::Index>(series.t.size()), 8);
  for (std::size_t i = 0; i < series.t.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    IntentState state;
    state.dtheta = series.dtheta.row(r).transpose();
    state.d = series.d.row(r).transpose();
    const Pose pose = goal_pose_from_intent(state);
    const Eigen::Quaterniond q(pose.rotation);
    data(r, 0) = series.t[i];
    data(r, 1) = q.w();
    data(r, 2) = q.x();
    data(r, 3) = q.y();
    data(r, 4) = q.z();
    data.block<1, 3>(r, 5) = pose.origin.transpose();
  }
  write_csv(path, header, data);
}

SigmoidTraceConfig gen_config_from(const CLI::App* cmd, const CommonOpts& common,
                                   const nlohmann::json& config, int wavelets,
                                   double amplitude_deg, double midpoint_s, double steepness,
                                   double spacing_s, double rate_hz, bool allow_translation,
                                   double translation_m, const std::string& sign_pattern) {
  SigmoidTraceConfig cfg;
  if (config.contains("gen")) {
    const auto& g = config.at("gen");
    cfg.wavelet_count = g.value("wavelets", cfg.wavelet_count);
    cfg.amplitude_deg = g.value("amplitude_deg", cfg.amplitude_deg);
    cfg.midpoint_s = g.value("midpoint_s", cfg.midpoint_s);
    cfg.steepness = g.value("steepness", cfg.steepness);
    cfg.spacing_s = g.value("spacing_s", cfg.spacing_s);
    cfg.rate_hz = g.value("rate_hz", cfg.rate_hz);
    cfg.tail_s = g.value("tail_s", cfg.tail_s);
  }
  const auto use_flag = [cmd](const std::string& name) { return cmd->count(name) > 0; };
  if (use_flag("--wavelets") || !config.contains("gen")) cfg.wavelet_count = wavelets;
  if (use_flag("--amplitude-deg") || !config.contains("gen")) cfg.amplitude_deg = amplitude_deg;
  if (use_flag("--midpoint-s") || !config.contains("gen")) cfg.midpoint_s = midpoint_s;
  if (use_flag("--steepness") || !config.contains("gen")) cfg.steepness = steepness;
  if (use_flag("--spacing-s") || !config.contains("gen")) cfg.spacing_s = spacing_s;
  if (use_flag("--rate-hz") || !config.contains("gen")) cfg.rate_hz = rate_hz;
  cfg.seed = common.seed;
  cfg.rotation_only = !allow_translation;
  cfg.translation_amplitude_m = translation_m;
  if (sign_pattern == "alternating") {
    cfg.sign_pattern = SigmoidTraceConfig::SignPattern::Alternating;
  } else if (sign_pattern == "random") {
    cfg.sign_pattern = SigmoidTraceConfig::SignPattern::Random;
  } else if (sign_pattern == "positive") {
    cfg.sign_pattern = SigmoidTraceConfig::SignPattern::AllPositive;
  } else {
    throw ValidationFailure("sign pattern must be alternating, random or positive");
  }
  return cfg;
}

struct IntentContext {
  std::vector<Contact> contacts;
  std::vector<Eigen::Index> grasp_chains;
  Vec3 centroid;
};

IntentContext grasp_context(const Profiles& profiles, const EpisodeSettings& settings) {
  IntentContext ctx;
  ctx.grasp_chains = settings.plant.grasp_chains;
  const VecX posture = settings.plant.initial_q.size() > 0 ? settings.plant.initial_q
                                                           : default_grasp_posture(profiles.hand);
  ctx.contacts = fingertip_contacts(profiles.hand, posture, ctx.grasp_chains, &ctx.centroid);
  return ctx;
}

GloveTrace load_trace(const std::string& path, const GloveProfile& glove) {
  GloveTrace trace;
  try {
    trace = read_glove_trace_csv(path);
    trace.validate(glove);
  } catch (const std::exception& e) {
    throw ValidationFailure(e.what());
  }
  return trace;
}

// ---------------------------------------------------------------------------
// gen-data

int run_gen_data(const CLI::App* cmd, const CommonOpts& common, int wavelets, double amplitude,
                 double midpoint, double steepness, double spacing, double rate,
                 const std::string& mode, bool with_translation, double translation_m,
                 double noise_deg, const std::string& sign_pattern) {
  const nlohmann::json config = load_config(common);
  const Profiles profiles = load_profiles(common, config);
  SigmoidTraceConfig cfg =
      gen_config_from(cmd, common, config, wavelets, amplitude, midpoint, steepness, spacing,
                      rate, with_translation, translation_m, sign_pattern);
  cfg.noise_deg = noise_deg;
  cfg.channels = profiles.glove.encoder_count;

  ensure_out_dir(common);
  SyntheticTrace synth;
  if (mode == "kinematic") {
    const EpisodeSettings settings = episode_settings(profiles, config);
    const IntentContext ctx = grasp_context(profiles, settings);
    synth = generate_consistent_trace(cfg, profiles.glove, profiles.hand, ctx.contacts,
                                      ctx.grasp_chains);
  } else if (mode == "mixing") {
    synth = generate_sigmoid_trace(cfg);
  } else {
    throw ValidationFailure("mode must be kinematic or mixing");
  }

  write_glove_trace_csv(out_path(common, "trace.csv"), synth.trace);
  IntentSeries truth;
  truth.t = synth.truth.t;
  truth.dtheta = synth.truth.dtheta;
  truth.d = synth.truth.d;
  write_intent_csv(out_path(common, "intent_truth.csv"), truth);
  std::cout << "wrote " << out_path(common, "trace.csv") << " ("
            << synth.trace.samples.size() << " samples) and intent_truth.csv\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// intent

int run_intent(const CommonOpts& common, const std::string& trace_path, bool rotation_only) {
  const nlohmann::json config = load_config(common);
  const Profiles profiles = load_profiles(common, config);
  const EpisodeSettings settings = episode_settings(profiles, config);
  const IntentContext ctx = grasp_context(profiles, settings);
  const GloveTrace trace = load_trace(trace_path, profiles.glove);

  const IntentSeries series = estimate_intent(trace, profiles.glove, profiles.hand, ctx.contacts,
                                              ctx.grasp_chains, rotation_only);
  ensure_out_dir(common);
  write_intent_csv(out_path(common, "intent.csv"), series);
  write_goal_pose_csv(out_path(common, "goal_poses.csv"), series);
  std::cout << "wrote " << out_path(common, "intent.csv") << " and goal_poses.csv\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// pca

int run_pca(const CommonOpts& common, const std::vector<std::string>& trace_paths) {
  const nlohmann::json config = load_config(common);
  const Profiles profiles = load_profiles(common, config);
  std::vector<GloveTrace> traces;
  for (const std::string& path : trace_paths) {
    traces.push_back(load_trace(path, profiles.glove));
  }
  PcaResult pca;
  try {
    pca = pca_analysis(traces);
  } catch (const std::invalid_argument& e) {
    throw ValidationFailure(e.what());
  }

  ensure_out_dir(common);
  const Eigen::Index k = pca.eigenvalues.size();
  MatX report(k, 4);
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double ratio = pca.explained_ratio.size() > i ? pca.explained_ratio(i) : 0.0;
    cumulative += ratio;
    report(i, 0) = static_cast<double>(i + 1);
    report(i, 1) = pca.eigenvalues(i);
    report(i, 2) = ratio;
    report(i, 3) = cumulative;
  }
  write_csv(out_path(common, "pca_report.csv"),
            {"component", "eigenvalue", "explained_ratio", "cumulative_ratio"}, report);

  if (pca.components.cols() > 0) {
    std::vector<std::string> header;
    char buf[16];
    for (Eigen::Index i = 0; i < pca.components.cols(); ++i) {
      std::snprintf(buf, sizeof(buf), "pc%02d", static_cast<int>(i) + 1);
      header.emplace_back(buf);
    }
    write_csv(out_path(common, "pca_components.csv"), header, pca.components);
  }
  std::cout << "wrote " << out_path(common, "pca_report.csv") << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct AxisSpec {
  std::string name;
  Eigen::Index column;
};

std::vector<AxisSpec> parse_axes(const std::string& axes) {
  std::vector<AxisSpec> out;
  for (const char c : axes) {
    switch (c) {
      case 'x': out.push_back({"x", 0}); break;
      case 'y': out.push_back({"y", 1}); break;
      case 'z': out.push_back({"z", 2}); break;
      default: throw ValidationFailure("axes must be a subset of xyz");
    }
  }
  if (out.empty()) throw ValidationFailure("no axes selected");
  return out;
}

IntentSeries load_intent_series(const std::string& path) {
  try {
    return read_intent_csv(path);
  } catch (const std::exception& e) {
    throw ValidationFailure(e.what());
  }
}

int run_train(const CommonOpts& common, const std::string& intent_path, const std::string& axes,
              Eigen::Index r, Eigen::Index m, Eigen::Index hidden, int epochs, double lr,
              double split, int decimate_by, const std::string& optimizer,
              Eigen::Index batch_size) {
  const nlohmann::json config = load_config(common);
  nlohmann::json pred = config.contains("predictor") ? config.at("predictor") : nlohmann::json::object();
  r = pred.value("r", r);
  m = pred.value("m", m);
  hidden = pred.value("hidden", hidden);
  epochs = pred.value("epochs", epochs);
  lr = pred.value("learning_rate", lr);
  split = pred.value("train_split", split);
  decimate_by = pred.value("decimate", decimate_by);

  const IntentSeries series = load_intent_series(intent_path);
  if (series.t.size() < 2) throw ValidationFailure("intent series too short");
  const double period = (series.t[1] - series.t[0]) * decimate_by;

  TrainConfig tc;
  tc.learning_rate = lr;
  tc.epochs = epochs;
  tc.seed = common.seed == 0 ? 1 : common.seed;
  tc.train_split = split;
  tc.hidden_size = hidden;
  tc.batch_size = batch_size;
  if (optimizer == "gd") {
    tc.optimizer = TrainConfig::Optimizer::GradientDescent;
  } else if (optimizer != "adam") {
    throw ValidationFailure("optimizer must be adam or gd");
  }
  try {
    tc.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationFailure(e.what());
  }

  ensure_out_dir(common);
  // Per-axis models are independent; train them concurrently.
  std::vector<AxisSpec> specs = parse_axes(axes);
  std::vector<std::future<std::pair<TrainResult, WindowDataset>>> jobs;
  for (const AxisSpec& spec : specs) {
    jobs.push_back(std::async(std::launch::async, [&, spec]() {
      const VecX axis_deg = decimate(VecX(series.dtheta.col(spec.column) * kRadToDeg), decimate_by);
      WindowDataset ds;
      try {
        ds = make_windows(axis_deg, r, m, period);
      } catch (const std::invalid_argument& e) {
        throw ValidationFailure(e.what());
      }
      return std::make_pair(train(ds, tc), std::move(ds));
    }));
  }

  for (std::size_t i = 0; i < specs.size(); ++i) {
    const AxisSpec& spec = specs[i];
    TrainResult result;
    try {
      result = jobs[i].get().first;
    } catch (const DivergenceError& e) {
      throw NumericalFailure("axis " + spec.name + ": " + e.what());
    }
    LstmModel model;
    model.params = result.params;
    model.r = r;
    model.m = m;
    model.period_s = period;
    save_lstm_model(out_path(common, "model_" + spec.name + ".json"), model);

    MatX history(result.train_loss_deg2.size(), 3);
    for (Eigen::Index e = 0; e < history.rows(); ++e) {
      history(e, 0) = static_cast<double>(e);
      history(e, 1) = result.train_loss_deg2(e);
      history(e, 2) = result.val_loss_deg2(e);
    }
    write_csv(out_path(common, "loss_history_" + spec.name + ".csv"),
              {"epoch", "train_mse_deg2", "val_mse_deg2"}, history);
    std::cout << "axis " << spec.name << ": final train "
              << result.train_loss_deg2(result.train_loss_deg2.size() - 1) << " val "
              << result.val_loss_deg2(result.val_loss_deg2.size() - 1) << " deg^2\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// predict

struct AxisPrediction {
  std::string axis;
  std::vector<StreamPrediction> stream;
  int lag_samples = 0;
  double lag_seconds = 0.0;
};

std::optional<LstmModel> try_load_model(const std::string& dir, const std::string& axis) {
  const fs::path path = fs::path(dir) / ("model_" + axis + ".json");
  if (!fs::exists(path)) return std::nullopt;
  return load_lstm_model(path.string());
}

int run_predict(const CommonOpts& common, const std::string& intent_path,
                const std::string& trace_path, const std::string& models_dir,
                const std::string& truth_path) {
  const nlohmann::json config = load_config(common);

  IntentSeries series;
  if (!intent_path.empty()) {
    series = load_intent_series(intent_path);
  } else if (!trace_path.empty()) {
    const Profiles profiles = load_profiles(common, config);
    const EpisodeSettings settings = episode_settings(profiles, config);
    const IntentContext ctx = grasp_context(profiles, settings);
    const GloveTrace trace = load_trace(trace_path, profiles.glove);
    series = estimate_intent(trace, profiles.glove, profiles.hand, ctx.contacts,
                             ctx.grasp_chains, true);
  } else {
    throw ValidationFailure("predict needs --intent or --trace");
  }

  std::optional<IntentSeries> truth;
  if (!truth_path.empty()) truth = load_intent_series(truth_path);

  ensure_out_dir(common);
  nlohmann::json lag_report;
  std::vector<AxisPrediction> predictions;
  for (const std::string axis : {"x", "y", "z"}) {
    const auto model = try_load_model(models_dir.empty() ? common.out_dir : models_dir, axis);
    if (!model) continue;
    const Eigen::Index column = axis == "x" ? 0 : axis == "y" ? 1 : 2;
    const double period_in = series.t[1] - series.t[0];
    const int decimate_by = std::max(1, static_cast<int>(std::lround(model->period_s / period_in)));
    const VecX signal_deg = decimate(VecX(series.dtheta.col(column) * kRadToDeg), decimate_by);
    const std::vector<double> t = decimate(series.t, decimate_by);

    AxisPrediction ap;
    ap.axis = axis;
    ap.stream = predict_stream(*model, t, signal_deg);
    if (!ap.stream.empty()) {
      // Lag of the emission-aligned prediction against the reference
      // signal (the truth when given, the input intent otherwise).
      VecX emitted(static_cast<Eigen::Index>(ap.stream.size()));
      std::vector<double> emit_t;
      for (std::size_t i = 0; i < ap.stream.size(); ++i) {
        emitted(static_cast<Eigen::Index>(i)) = ap.stream[i].value_deg;
        emit_t.push_back(ap.stream[i].t_emit);
      }
      VecX reference;
      if (truth) {
        reference = resample_linear(truth->t, VecX(truth->dtheta.col(column) * kRadToDeg), emit_t);
      } else {
        reference = signal_deg.tail(emitted.size());
      }
      ap.lag_samples = best_correlation_lag(reference, emitted, 3 * static_cast<int>(model->m));
      ap.lag_seconds = ap.lag_samples * model->period_s;
      lag_report[axis] = {{"lag_samples", ap.lag_samples},
                          {"lag_seconds", ap.lag_seconds},
                          {"lead_m_samples", model->m}};
    }
    predictions.push_back(std::move(ap));
  }
  if (predictions.empty()) {
    throw ValidationFailure("no model_<axis>.json files found in " +
                            (models_dir.empty() ? common.out_dir : models_dir));
  }

  // Wide CSV over the union of emission times (axes share the grid when
  // they share a model geometry).
  const auto& grid = predictions.front().stream;
  std::vector<std::string> header = {"t_emit_s", "t_target_s"};
  for (const auto& ap : predictions) header.push_back("pred_dth" + ap.axis + "_deg");
  MatX data(static_cast<Eigen::Index>(grid.size()), 2 + static_cast<Eigen::Index>(predictions.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    data(row, 0) = grid[i].t_emit;
    data(row, 1) = grid[i].t_target;
    for (std::size_t a = 0; a < predictions.size(); ++a) {
      data(row, 2 + static_cast<Eigen::Index>(a)) =
          i < predictions[a].stream.size() ? predictions[a].stream[i].value_deg
                                           : std::numeric_limits<double>::quiet_NaN();
    }
  }
  write_csv(out_path(common, "prediction.csv"), header, data);
  std::ofstream(out_path(common, "lag_report.json")) << lag_report.dump(2) << "\n";
  std::cout << "wrote prediction.csv and lag_report.json: " << lag_report.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate and pipeline share the episode runner

struct GoalStream {
  // Absolute goal pose as a function of time.
  std::function<Pose(double)> goal_at;
  double duration = 0.0;
};

GoalStream goal_stream_from_intent(const IntentSeries& series, const Pose& initial_pose,
                                   bool rotation_only) {
  GoalStream gs;
  gs.duration = series.t.back();
  // Copy the series into the closure; goals compose the accumulated intent
  // with the initial object pose.
  gs.goal_at = [series, initial_pose, rotation_only](double t) {
    const auto it = std::upper_bound(series.t.begin(), series.t.end(), t);
    const auto idx = static_cast<Eigen::Index>(
        std::max<std::ptrdiff_t>(0, std::distance(series.t.begin(), it) - 1));
    Pose goal;
    goal.rotation = rodrigues_exp<double>(series.dtheta.row(idx).transpose()) * initial_pose.rotation;
    goal.origin = initial_pose.origin;
    if (!rotation_only) goal.origin += series.d.row(idx).transpose();
    return goal;
  };
  return gs;
}

nlohmann::json episode_report(const EpisodeResult& result) {
  nlohmann::json j;
  j["converged"] = result.converged;
  j["outer_steps"] = result.outer_steps;
  j["final_rotation_error_rad"] = result.final_rotation_error;
  j["final_rotation_error_deg"] = result.final_rotation_error * kRadToDeg;
  j["final_translation_error_m"] = result.final_translation_error;
  j["inner_steps_logged"] = result.log.size();
  return j;
}

int run_simulate(const CommonOpts& common, double rot_x_deg, double rot_y_deg, double rot_z_deg,
                 const std::vector<double>& translate_m, const std::string& intent_path,
                 double f_min) {
  const nlohmann::json config = load_config(common);
  const Profiles profiles = load_profiles(common, config);
  EpisodeSettings settings = episode_settings(profiles, config);
  if (f_min > 0.0) settings.plant.interaction_f_min = f_min;
  const GainSet gains{settings.gains_k, settings.gains_d};

  ensure_out_dir(common);
  EpisodeResult result;
  if (!intent_path.empty()) {
    const IntentSeries series = load_intent_series(intent_path);
    const PlantState init = make_initial_state(profiles.hand, settings.plant);
    const GoalStream gs = goal_stream_from_intent(series, init.object_pose, true);
    result = run_episode_streaming(profiles.hand, settings.plant, settings.controller, gains,
                                   gs.goal_at, gs.duration);
  } else {
    const PlantState init = make_initial_state(profiles.hand, settings.plant);
    Pose goal = init.object_pose;
    const Vec3 rotvec(rot_x_deg * kDegToRad, rot_y_deg * kDegToRad, rot_z_deg * kDegToRad);
    goal.rotation = rodrigues_exp<double>(rotvec) * goal.rotation;
    if (translate_m.size() == 3) {
      goal.origin += Vec3(translate_m[0], translate_m[1], translate_m[2]);
    }
    result = run_episode(profiles.hand, settings.plant, settings.controller, gains, goal);
  }

  write_trajectory_csv(out_path(common, "trajectory.csv"), result.log,
                       profiles.hand.total_joints());
  std::ofstream(out_path(common, "episode_report.json")) << episode_report(result).dump(2) << "\n";
  std::cout << "episode: converged=" << result.converged << " outer_steps=" << result.outer_steps
            << " final_rotation_error_deg=" << result.final_rotation_error * kRadToDeg << "\n";

  if (intent_path.empty() && !result.converged) {
    write_diagnostics(common, "simulate did not converge: final rotation error " +
                                  std::to_string(result.final_rotation_error * kRadToDeg) +
                                  " deg after " + std::to_string(result.outer_steps) +
                                  " outer steps");
    return kExitNumerical;
  }
  return kExitOk;
}

// Lag (seconds) of the simulated object rotation against the truth intent,
// measured on the dominant axis over a uniform 20 Hz grid.
double object_lag_seconds(const EpisodeResult& result, const IntentSeries& truth,
                          Eigen::Index axis, const Pose& initial_pose) {
  std::vector<double> log_t;
  VecX log_angle(static_cast<Eigen::Index>(result.log.size()));
  for (std::size_t i = 0; i < result.log.size(); ++i) {
    const auto& row = result.log[i];
    const Eigen::Quaterniond q(row.quaternion(0), row.quaternion(1), row.quaternion(2),
                               row.quaternion(3));
    const Mat3 relative = q.toRotationMatrix() * initial_pose.rotation.transpose();
    log_t.push_back(row.t);
    log_angle(static_cast<Eigen::Index>(i)) = rotation_log<double>(relative)(axis);
  }

  const double grid_dt = 0.05;
  std::vector<double> grid;
  for (double t = 0.0; t <= log_t.back(); t += grid_dt) grid.push_back(t);
  const VecX object_on_grid = resample_linear(log_t, log_angle, grid);
  const VecX truth_on_grid = resample_linear(truth.t, VecX(truth.dtheta.col(axis)), grid);

  const int max_lag = static_cast<int>(2.0 / grid_dt);
  const int lag = best_correlation_lag(truth_on_grid, object_on_grid, max_lag);
  return lag * grid_dt;
}

int run_pipeline(const CommonOpts& common, const std::string& trace_path, bool use_predictor,
                 const std::string& models_dir, const std::string& truth_path) {
  const nlohmann::json config = load_config(common);
  const Profiles profiles = load_profiles(common, config);
  const EpisodeSettings settings = episode_settings(profiles, config);
  const GainSet gains{settings.gains_k, settings.gains_d};
  const IntentContext ctx = grasp_context(profiles, settings);
  const GloveTrace trace = load_trace(trace_path, profiles.glove);

  ensure_out_dir(common);
  const IntentSeries estimated = estimate_intent(trace, profiles.glove, profiles.hand,
                                                 ctx.contacts, ctx.grasp_chains, true);
  write_intent_csv(out_path(common, "intent.csv"), estimated);

  IntentSeries goal_series = estimated;
  if (use_predictor) {
    // Replace each axis with its led prediction, emission-aligned: the goal
    // available at time t is the intent predicted for t + m * period.
    const std::string dir = models_dir.empty() ? common.out_dir : models_dir;
    const double period_in = estimated.t[1] - estimated.t[0];
    bool any = false;
    nlohmann::json pred_report;
    for (const std::string axis : {"x", "y", "z"}) {
      const auto model = try_load_model(dir, axis);
      if (!model) continue;
      const Eigen::Index column = axis == "x" ? 0 : axis == "y" ? 1 : 2;
      const int decimate_by =
          std::max(1, static_cast<int>(std::lround(model->period_s / period_in)));
      const VecX signal_deg = decimate(VecX(estimated.dtheta.col(column) * kRadToDeg), decimate_by);
      const std::vector<double> t = decimate(estimated.t, decimate_by);
      const auto stream = predict_stream(*model, t, signal_deg);
      if (stream.empty()) continue;
      any = true;

      // Rebuild the axis on the estimation grid: before the first emission
      // the estimate itself is the best goal.
      std::vector<double> emit_t;
      VecX emitted(static_cast<Eigen::Index>(stream.size()));
      for (std::size_t i = 0; i < stream.size(); ++i) {
        emit_t.push_back(stream[i].t_emit);
        emitted(static_cast<Eigen::Index>(i)) = stream[i].value_deg * kDegToRad;
      }
      for (std::size_t i = 0; i < goal_series.t.size(); ++i) {
        const double t_now = goal_series.t[i];
        if (t_now < emit_t.front()) continue;
        const VecX v = resample_linear(emit_t, emitted, {t_now});
        goal_series.dtheta(static_cast<Eigen::Index>(i), column) = v(0);
      }
      pred_report[axis] = {{"predictions", stream.size()}};
    }
    if (!any) {
      throw ValidationFailure("pipeline --use-predictor found no models in " + dir);
    }
    write_intent_csv(out_path(common, "intent_predicted.csv"), goal_series);
  }

  const PlantState init = make_initial_state(profiles.hand, settings.plant);
  const GoalStream gs = goal_stream_from_intent(goal_series, init.object_pose, true);
  const EpisodeResult result = run_episode_streaming(profiles.hand, settings.plant,
                                                     settings.controller, gains, gs.goal_at,
                                                     gs.duration);
  write_trajectory_csv(out_path(common, "trajectory.csv"), result.log,
                       profiles.hand.total_joints());

  nlohmann::json report = episode_report(result);
  report["used_predictor"] = use_predictor;
  if (!truth_path.empty()) {
    const IntentSeries truth = load_intent_series(truth_path);
    // Dominant axis of the truth motion carries the lag measurement.
    Eigen::Index axis;
    truth.dtheta.cwiseAbs().colwise().maxCoeff().maxCoeff(&axis);
    const double lag = object_lag_seconds(result, truth, axis, result.initial_object_pose);
    report["object_lag_seconds"] = lag;
    report["lag_axis"] = axis == 0 ? "x" : axis == 1 ? "y" : "z";
  }
  std::ofstream(out_path(common, "pipeline_report.json")) << report.dump(2) << "\n";
  std::cout << "pipeline report: " << report.dump() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Glove-driven in-hand manipulation: estimation, prediction, control"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate synthetic glove traces with ground truth");
  CommonOpts gen_common;
  add_common(gen, gen_common);
  int wavelets = 3;
  double amplitude = 15.0, midpoint = 2.5, steepness = 2.0, spacing = 4.0, rate = 200.0;
  double translation_m = 0.0, noise_deg = 0.05;
  bool with_translation = false;
  std::string mode = "kinematic", sign_pattern = "alternating";
  gen->add_option("--wavelets", wavelets, "Number of intent wavelets")->capture_default_str();
  gen->add_option("--amplitude-deg", amplitude, "Per-wavelet rotation amplitude")->capture_default_str();
  gen->add_option("--midpoint-s", midpoint, "First wavelet midpoint")->capture_default_str();
  gen->add_option("--steepness", steepness, "Logistic rate (1/s)")->capture_default_str();
  gen->add_option("--spacing-s", spacing, "Wavelet midpoint spacing")->capture_default_str();
  gen->add_option("--rate-hz", rate, "Glove sample rate")->capture_default_str();
  gen->add_option("--mode", mode, "kinematic (mapping-consistent) or mixing")->capture_default_str();
  gen->add_flag("--with-translation", with_translation, "Add translational intent");
  gen->add_option("--translation-m", translation_m, "Per-wavelet translation amplitude")->capture_default_str();
  gen->add_option("--noise-deg", noise_deg, "Channel noise sigma (mixing mode)")->capture_default_str();
  gen->add_option("--sign-pattern", sign_pattern, "alternating, random or positive")->capture_default_str();

  // intent
  auto* intent_cmd = app.add_subcommand("intent", "Estimate cumulative intent from a glove trace");
  CommonOpts intent_common;
  add_common(intent_cmd, intent_common);
  std::string intent_trace;
  bool translation_too = false;
  intent_cmd->add_option("--trace", intent_trace, "Glove trace CSV")->required();
  intent_cmd->add_flag("--with-translation", translation_too,
                       "Integrate translational intent as well");

  // pca
  auto* pca_cmd = app.add_subcommand("pca", "Principal component analysis of glove traces");
  CommonOpts pca_common;
  add_common(pca_cmd, pca_common);
  std::vector<std::string> pca_traces;
  pca_cmd->add_option("--trace", pca_traces, "Glove trace CSV (repeatable)")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train per-axis predictors on an intent CSV");
  CommonOpts train_common;
  add_common(train_cmd, train_common);
  std::string train_intent, train_axes = "z", optimizer = "adam";
  Eigen::Index opt_r = 20, opt_m = 10, hidden = 20, batch_size = 0;
  int epochs = 200;
  double lr = 0.01, split = 0.8;
  int decimate_by = 12;
  train_cmd->add_option("--intent", train_intent, "Intent CSV (truth or estimated)")->required();
  train_cmd->add_option("--axes", train_axes, "Axes to train (subset of xyz)")->capture_default_str();
  train_cmd->add_option("--r", opt_r, "Window length")->capture_default_str();
  train_cmd->add_option("--m", opt_m, "Prediction lead (samples)")->capture_default_str();
  train_cmd->add_option("--hidden", hidden, "LSTM hidden size")->capture_default_str();
  train_cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--lr", lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--split", split, "Training fraction")->capture_default_str();
  train_cmd->add_option("--decimate", decimate_by, "Decimation factor from the intent rate")->capture_default_str();
  train_cmd->add_option("--optimizer", optimizer, "adam or gd")->capture_default_str();
  train_cmd->add_option("--batch", batch_size, "Mini-batch size (0 = full batch)")->capture_default_str();

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Run a trained predictor over a trace");
  CommonOpts predict_common;
  add_common(predict_cmd, predict_common);
  std::string predict_intent, predict_trace, models_dir, predict_truth;
  predict_cmd->add_option("--intent", predict_intent, "Intent CSV input");
  predict_cmd->add_option("--trace", predict_trace, "Glove trace CSV input (estimated first)");
  predict_cmd->add_option("--models", models_dir, "Directory with model_<axis>.json files");
  predict_cmd->add_option("--truth", predict_truth, "Ground-truth intent CSV for the lag report");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Closed-loop relocation to a goal pose");
  CommonOpts sim_common;
  add_common(sim_cmd, sim_common);
  double rot_x = 0.0, rot_y = 0.0, rot_z = 0.0, f_min = 0.0;
  std::vector<double> translate;
  std::string sim_intent;
  sim_cmd->add_option("--goal-rot-x-deg", rot_x, "Goal rotation about x")->capture_default_str();
  sim_cmd->add_option("--goal-rot-y-deg", rot_y, "Goal rotation about y")->capture_default_str();
  sim_cmd->add_option("--goal-rot-z-deg", rot_z, "Goal rotation about z")->capture_default_str();
  sim_cmd->add_option("--goal-translate-m", translate, "Goal translation (3 values)")->expected(3);
  sim_cmd->add_option("--intent", sim_intent, "Stream goals from an intent CSV instead");
  sim_cmd->add_option("--f-min", f_min, "Interaction squeeze floor (N)")->capture_default_str();

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "Glove trace to simulated relocation, end to end");
  CommonOpts pipe_common;
  add_common(pipe_cmd, pipe_common);
  std::string pipe_trace, pipe_models, pipe_truth;
  bool use_predictor = false;
  pipe_cmd->add_option("--trace", pipe_trace, "Glove trace CSV")->required();
  pipe_cmd->add_flag("--use-predictor", use_predictor, "Lead the goals with trained predictors");
  pipe_cmd->add_option("--models", pipe_models, "Directory with model_<axis>.json files");
  pipe_cmd->add_option("--truth", pipe_truth, "Ground-truth intent CSV for the lag report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const CommonOpts* active_common = nullptr;
  try {
    if (gen->parsed()) {
      active_common = &gen_common;
      return run_gen_data(gen, gen_common, wavelets, amplitude, midpoint, steepness, spacing,
                          rate, mode, with_translation, translation_m, noise_deg, sign_pattern);
    }
    if (intent_cmd->parsed()) {
      active_common = &intent_common;
      return run_intent(intent_common, intent_trace, !translation_too);
    }
    if (pca_cmd->parsed()) {
      active_common = &pca_common;
      return run_pca(pca_common, pca_traces);
    }
    if (train_cmd->parsed()) {
      active_common = &train_common;
      return run_train(train_common, train_intent, train_axes, opt_r, opt_m, hidden, epochs, lr,
                       split, decimate_by, optimizer, batch_size);
    }
    if (predict_cmd->parsed()) {
      active_common = &predict_common;
      return run_predict(predict_common, predict_intent, predict_trace, models_dir, predict_truth);
    }
    if (sim_cmd->parsed()) {
      active_common = &sim_common;
      return run_simulate(sim_common, rot_x, rot_y, rot_z, translate, sim_intent, f_min);
    }
    if (pipe_cmd->parsed()) {
      active_common = &pipe_common;
      return run_pipeline(pipe_common, pipe_trace, use_predictor, pipe_models, pipe_truth);
    }
  } catch (const ValidationFailure& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    if (active_common) write_diagnostics(*active_common, e.what());
    return kExitNumerical;
  } catch (const DivergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    if (active_common) write_diagnostics(*active_common, e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}
