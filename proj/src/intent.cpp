#include "teleop/intent.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "teleop/csv.hpp"

namespace teleop {

namespace {
constexpr double kDegToRad = M_PI / 180.0;
constexpr double kRadToDeg = 180.0 / M_PI;
}  // namespace

void GloveProfile::validate(const HandProfile* hand) const {
  if (encoder_count <= 0) throw std::invalid_argument("GloveProfile: encoder_count must be positive");
  if (static_cast<Eigen::Index>(mapping.size()) != encoder_count) {
    throw std::invalid_argument("GloveProfile: mapping must cover every encoder");
  }
  if (static_cast<Eigen::Index>(encoder_ranges_deg.size()) != encoder_count) {
    throw std::invalid_argument("GloveProfile: encoder_ranges_deg must cover every encoder");
  }
  for (const auto& r : encoder_ranges_deg) {
    if (!(r[0] < r[1])) throw std::invalid_argument("GloveProfile: encoder range min must be < max");
  }
  if (static_cast<Eigen::Index>(restrained_joints.size()) > encoder_count) {
    throw std::invalid_argument("GloveProfile: more restrained joints than encoders");
  }
  for (const Eigen::Index j : restrained_joints) {
    if (j < 0 || j >= encoder_count) {
      throw std::invalid_argument("GloveProfile: restrained joint index out of range");
    }
  }
  for (const EncoderMapping& m : mapping) {
    if (!std::isfinite(m.scale)) throw std::invalid_argument("GloveProfile: mapping scale not finite");
    if (!m.screw.vector().allFinite()) {
      throw std::invalid_argument("GloveProfile: mapping screw not finite");
    }
    if (m.chain < 0) throw std::invalid_argument("GloveProfile: negative chain index");
    if (hand && m.chain >= hand->chain_count()) {
      throw std::invalid_argument("GloveProfile: mapping references a chain the hand does not have");
    }
  }
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("GloveProfile: sample_rate_hz must be positive");
}

void GloveTrace::validate(const GloveProfile& profile) const {
  double last_t = -std::numeric_limits<double>::infinity();
  for (const GloveSample& s : samples) {
    if (!(s.t > last_t)) throw std::invalid_argument("GloveTrace: timestamps must strictly increase");
    last_t = s.t;
    if (s.values_deg.size() != profile.encoder_count) {
      throw std::invalid_argument("GloveTrace: sample width does not match encoder count");
    }
    for (Eigen::Index j = 0; j < s.values_deg.size(); ++j) {
      const auto& r = profile.encoder_ranges_deg[static_cast<std::size_t>(j)];
      if (s.values_deg(j) < r[0] - 1e-9 || s.values_deg(j) > r[1] + 1e-9) {
        throw std::invalid_argument("GloveTrace: encoder value outside profile range");
      }
    }
  }
}

std::vector<Twist> glove_to_fingertip_twists(const GloveSample& previous,
                                             const GloveSample& current,
                                             const GloveProfile& glove, const HandProfile& hand) {
  glove.validate(&hand);
  if (previous.values_deg.size() != glove.encoder_count ||
      current.values_deg.size() != glove.encoder_count) {
    throw std::invalid_argument("glove_to_fingertip_twists: sample width mismatch");
  }
  const double dt = current.t - previous.t;
  if (!(dt > 0.0)) throw std::invalid_argument("glove_to_fingertip_twists: non-positive sample spacing");

  std::vector<Twist> twists(static_cast<std::size_t>(hand.chain_count()));
  for (Eigen::Index j = 0; j < glove.encoder_count; ++j) {
    const EncoderMapping& m = glove.mapping[static_cast<std::size_t>(j)];
    const double rate_deg = (current.values_deg(j) - previous.values_deg(j)) / dt;
    Twist& acc = twists[static_cast<std::size_t>(m.chain)];
    acc.angular += m.screw.angular * (m.scale * rate_deg);
    acc.linear += m.screw.linear * (m.scale * rate_deg);
  }
  return twists;
}

VecX stack_twists_for_chains(const std::vector<Twist>& chain_twists,
                             const std::vector<Eigen::Index>& chains) {
  VecX stacked(6 * static_cast<Eigen::Index>(chains.size()));
  for (std::size_t i = 0; i < chains.size(); ++i) {
    const Eigen::Index c = chains[i];
    if (c < 0 || c >= static_cast<Eigen::Index>(chain_twists.size())) {
      throw std::invalid_argument("stack_twists_for_chains: chain index out of range");
    }
    stacked.segment<6>(6 * static_cast<Eigen::Index>(i)) =
        chain_twists[static_cast<std::size_t>(c)].vector();
  }
  return stacked;
}

Twist estimate_object_twist(const VecX& stacked_twists, const ObjectJacobian& object_jac) {
  return min_norm_object_twist(stacked_twists, object_jac);
}

IntentState integrate_intent(const IntentState& state, const Twist& twist, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_intent: dt must be positive");
  IntentState next = state;
  if (state.has_last) {
    next.dtheta += 0.5 * dt * (state.last_twist.angular + twist.angular);
    if (!state.rotation_only) next.d += 0.5 * dt * (state.last_twist.linear + twist.linear);
  } else {
    next.dtheta += dt * twist.angular;
    if (!state.rotation_only) next.d += dt * twist.linear;
  }
  if (state.rotation_only) next.d.setZero();
  next.last_twist = twist;
  next.has_last = true;
  next.goal = goal_pose_from_intent(next);
  return next;
}

Pose goal_pose_from_intent(const IntentState& state) {
  return Pose{rodrigues_exp<double>(state.dtheta), state.d};
}

PcaResult pca_analysis(const std::vector<GloveTrace>& traces) {
  Eigen::Index n = 0;
  Eigen::Index k = -1;
  for (const GloveTrace& t : traces) {
    for (const GloveSample& s : t.samples) {
      if (k < 0) k = s.values_deg.size();
      if (s.values_deg.size() != k) {
        throw std::invalid_argument("pca_analysis: inconsistent channel counts");
      }
      ++n;
    }
  }
  if (n < 2) throw std::invalid_argument("pca_analysis: need at least two samples");

  MatX data(n, k);
  Eigen::Index row = 0;
  for (const GloveTrace& t : traces) {
    for (const GloveSample& s : t.samples) data.row(row++) = s.values_deg.transpose();
  }
  const MatX centered = data.rowwise() - data.colwise().mean();
  const MatX covariance =
      centered.transpose() * centered / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<MatX> es(covariance);
  PcaResult out;
  out.eigenvalues = es.eigenvalues().reverse().cwiseMax(0.0);  // descending
  const double total = out.eigenvalues.sum();
  if (total <= 1e-300) {
    out.eigenvalues = VecX::Zero(k);
    out.components = MatX(k, 0);
    out.explained_ratio = VecX(0);
    return out;
  }
  out.components = es.eigenvectors().rowwise().reverse();
  out.explained_ratio = out.eigenvalues / total;
  return out;
}

namespace {

struct Wavelet {
  double amplitude;  // signed, rad or m
  double midpoint;   // s
  double rate;       // 1/s
  Vec3 axis;         // unit
};

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> time_grid(const SigmoidTraceConfig& cfg, double* duration_out) {
  const double duration =
      cfg.midpoint_s + cfg.spacing_s * std::max(0, cfg.wavelet_count - 1) + cfg.tail_s;
  const auto n = static_cast<Eigen::Index>(std::floor(duration * cfg.rate_hz)) + 1;
  std::vector<double> t(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = static_cast<double>(i) / cfg.rate_hz;
  if (duration_out) *duration_out = duration;
  return t;
}

std::vector<Wavelet> draw_wavelets(const SigmoidTraceConfig& cfg, double base_amplitude,
                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp_jitter(1.0 - cfg.amplitude_jitter,
                                                    1.0 + cfg.amplitude_jitter);
  std::uniform_real_distribution<double> rate_jitter(1.0 - cfg.steepness_jitter,
                                                     1.0 + cfg.steepness_jitter);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::bernoulli_distribution flip(0.5);

  std::vector<Wavelet> wavelets;
  for (int w = 0; w < cfg.wavelet_count; ++w) {
    Wavelet wl;
    wl.midpoint = cfg.midpoint_s + cfg.spacing_s * w;
    Vec3 axis = cfg.dominant_axis;
    if (w == 0) {
      // The first wavelet is exactly as configured.
      wl.amplitude = base_amplitude;
      wl.rate = cfg.steepness;
      if (axis.norm() < 1e-12) {
        do {
          axis = Vec3(unit(rng), unit(rng), unit(rng));
        } while (axis.norm() < 1e-6);
      }
    } else {
      wl.amplitude = base_amplitude * amp_jitter(rng);
      switch (cfg.sign_pattern) {
        case SigmoidTraceConfig::SignPattern::Alternating:
          if (w % 2 == 1) wl.amplitude = -wl.amplitude;
          break;
        case SigmoidTraceConfig::SignPattern::Random:
          if (flip(rng)) wl.amplitude = -wl.amplitude;
          break;
        case SigmoidTraceConfig::SignPattern::AllPositive:
          break;
      }
      wl.rate = cfg.steepness * rate_jitter(rng);
      if (axis.norm() < 1e-12) {
        do {
          axis = Vec3(unit(rng), unit(rng), unit(rng));
        } while (axis.norm() < 1e-6);
      } else {
        // Jitter around the dominant axis so the signal stays axis-heavy.
        axis += 0.2 * Vec3(unit(rng), unit(rng), unit(rng));
      }
    }
    wl.axis = axis.normalized();
    wavelets.push_back(wl);
  }
  return wavelets;
}

void accumulate(const std::vector<Wavelet>& wavelets, const std::vector<double>& t,
                MatX& cumulative, MatX& derivative) {
  const auto n = static_cast<Eigen::Index>(t.size());
  cumulative = MatX::Zero(n, 3);
  derivative = MatX::Zero(n, 3);
  for (const Wavelet& w : wavelets) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = w.rate * (t[static_cast<std::size_t>(i)] - w.midpoint);
      const double value = logistic(x);
      cumulative.row(i) += (w.amplitude * value) * w.axis.transpose();
      derivative.row(i) += (w.amplitude * w.rate * value * (1.0 - value)) * w.axis.transpose();
    }
  }
}

}  // namespace

IntentSignal generate_intent_signal(const SigmoidTraceConfig& config) {
  if (!(config.rate_hz > 0.0)) throw std::invalid_argument("generate_intent_signal: rate must be positive");
  IntentSignal sig;
  sig.t = time_grid(config, nullptr);

  std::mt19937_64 rng(config.seed);
  const auto rot_wavelets = draw_wavelets(config, config.amplitude_deg * kDegToRad, rng);
  accumulate(rot_wavelets, sig.t, sig.dtheta, sig.omega);

  if (!config.rotation_only && config.translation_amplitude_m > 0.0) {
    const auto trans_wavelets = draw_wavelets(config, config.translation_amplitude_m, rng);
    accumulate(trans_wavelets, sig.t, sig.d, sig.v);
  } else {
    const auto n = static_cast<Eigen::Index>(sig.t.size());
    sig.d = MatX::Zero(n, 3);
    sig.v = MatX::Zero(n, 3);
  }
  return sig;
}

SyntheticTrace generate_sigmoid_trace(const SigmoidTraceConfig& config) {
  SyntheticTrace out;
  out.truth = generate_intent_signal(config);
  const auto n = static_cast<Eigen::Index>(out.truth.t.size());

  // Mixing map and noise come from a stream seeded independently of the
  // wavelet draw so channel structure is stable per seed.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  MatX mixing(config.channels, 6);
  for (Eigen::Index r = 0; r < mixing.rows(); ++r) {
    for (Eigen::Index c = 0; c < mixing.cols(); ++c) mixing(r, c) = unit(rng);
  }
  std::normal_distribution<double> noise(0.0, config.noise_deg);

  out.trace.samples.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec6 rate;
    rate << out.truth.omega.row(i).transpose(), out.truth.v.row(i).transpose();
    GloveSample& s = out.trace.samples[static_cast<std::size_t>(i)];
    s.t = out.truth.t[static_cast<std::size_t>(i)];
    s.values_deg = config.mixing_gain * (mixing * rate);
    for (Eigen::Index c = 0; c < s.values_deg.size(); ++c) s.values_deg(c) += noise(rng);
  }
  return out;
}

MatX glove_mapping_matrix(const GloveProfile& glove, const std::vector<Eigen::Index>& grasp_chains) {
  MatX m = MatX::Zero(6 * static_cast<Eigen::Index>(grasp_chains.size()), glove.encoder_count);
  for (Eigen::Index j = 0; j < glove.encoder_count; ++j) {
    const EncoderMapping& map = glove.mapping[static_cast<std::size_t>(j)];
    for (std::size_t block = 0; block < grasp_chains.size(); ++block) {
      if (grasp_chains[block] == map.chain) {
        m.block<6, 1>(6 * static_cast<Eigen::Index>(block), j) = map.screw.vector() * map.scale;
      }
    }
  }
  return m;
}

SyntheticTrace generate_consistent_trace(const SigmoidTraceConfig& config,
                                         const GloveProfile& glove, const HandProfile& hand,
                                         const std::vector<Contact>& contacts,
                                         const std::vector<Eigen::Index>& grasp_chains) {
  glove.validate(&hand);
  if (contacts.size() != grasp_chains.size()) {
    throw std::invalid_argument("generate_consistent_trace: one contact per grasp chain required");
  }
  SyntheticTrace out;
  out.truth = generate_intent_signal(config);
  const auto n = static_cast<Eigen::Index>(out.truth.t.size());

  const ObjectJacobian object_jac = object_jacobians(contacts);
  const MatX mapping_pinv = pseudoinverse(glove_mapping_matrix(glove, grasp_chains));
  const double dt = 1.0 / config.rate_hz;

  VecX baseline(glove.encoder_count);
  for (Eigen::Index j = 0; j < glove.encoder_count; ++j) {
    const auto& r = glove.encoder_ranges_deg[static_cast<std::size_t>(j)];
    baseline(j) = 0.5 * (r[0] + r[1]);
  }

  out.trace.samples.resize(static_cast<std::size_t>(n));
  VecX angles = baseline;
  VecX prev_rates = VecX::Zero(glove.encoder_count);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec6 twist;
    twist << out.truth.omega.row(i).transpose(), out.truth.v.row(i).transpose();
    const VecX rates_deg = mapping_pinv * (object_jac.stacked * twist);  // deg/s
    if (i > 0) angles += 0.5 * dt * (prev_rates + rates_deg);
    prev_rates = rates_deg;

    GloveSample& s = out.trace.samples[static_cast<std::size_t>(i)];
    s.t = out.truth.t[static_cast<std::size_t>(i)];
    s.values_deg = angles;
  }
  return out;
}

IntentSeries estimate_intent(const GloveTrace& trace, const GloveProfile& glove,
                             const HandProfile& hand, const std::vector<Contact>& contacts,
                             const std::vector<Eigen::Index>& grasp_chains, bool rotation_only) {
  if (trace.samples.size() < 2) {
    throw std::invalid_argument("estimate_intent: need at least two samples");
  }
  const ObjectJacobian object_jac = object_jacobians(contacts);

  IntentSeries series;
  const auto n = static_cast<Eigen::Index>(trace.samples.size());
  series.t.resize(static_cast<std::size_t>(n));
  series.dtheta = MatX::Zero(n, 3);
  series.d = MatX::Zero(n, 3);

  IntentState state;
  state.rotation_only = rotation_only;
  series.t[0] = trace.samples[0].t;
  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    const auto chain_twists =
        glove_to_fingertip_twists(trace.samples[i - 1], trace.samples[i], glove, hand);
    const VecX stacked = stack_twists_for_chains(chain_twists, grasp_chains);
    const Twist object_twist = estimate_object_twist(stacked, object_jac);
    const double dt = trace.samples[i].t - trace.samples[i - 1].t;
    state = integrate_intent(state, object_twist, dt);

    const auto row = static_cast<Eigen::Index>(i);
    series.t[i] = trace.samples[i].t;
    series.dtheta.row(row) = state.dtheta.transpose();
    series.d.row(row) = state.d.transpose();
  }
  return series;
}

GloveProfile default_glove_profile(const HandProfile& hand) {
  GloveProfile g;
  g.name = "dexmo_like";
  g.encoder_count = 11;
  g.sample_rate_hz = 200.0;
  g.resolution_deg = 0.08;
  g.static_stiffness_kgcm_per_deg = {0.0, 0.33};

  // Encoder layout: four fingers with (bend, split) pairs, then three thumb
  // encoders. Bend encoders sweep [0, 147] deg, split encoders +-15 deg.
  const std::array<double, 2> bend_range = {0.0, 147.0};
  const std::array<double, 2> split_range = {-15.0, 15.0};
  const bool is_bend[11] = {true, false, true, false, true, false,
                            true, false, true, false, false};
  for (int j = 0; j < 11; ++j) {
    g.encoder_ranges_deg.push_back(is_bend[j] ? bend_range : split_range);
  }
  g.restrained_joints = {0, 2, 4, 6, 8};

  // Three encoders per grasping chain, spanning the rotation axes of the
  // object at the nominal grasp; the two leftover pinky encoders drive the
  // free chain. Split-type encoders use a larger scale so the same object
  // motion needs less of their limited range.
  const std::vector<Eigen::Index> grasp_chains = {0, 1, 3};
  const VecX posture = default_grasp_posture(hand);
  const std::vector<Contact> contacts = fingertip_contacts(hand, posture, grasp_chains);

  struct Slot {
    int encoder;
    Eigen::Index chain_block;  // index into grasp_chains, or -1 for free chain
    int axis;
  };
  const std::vector<Slot> slots = {
      {0, 0, 0}, {1, 0, 1}, {4, 0, 2},   // index bend/split + ring bend
      {2, 1, 0}, {3, 1, 1}, {5, 1, 2},   // middle bend/split + ring split
      {8, 2, 0}, {9, 2, 1}, {10, 2, 2},  // thumb
      {6, -1, 0}, {7, -1, 1},            // pinky -> free chain
  };

  g.mapping.resize(11);
  for (const Slot& s : slots) {
    EncoderMapping m;
    Vec3 axis = Vec3::Zero();
    axis(s.axis) = 1.0;
    if (s.chain_block >= 0) {
      m.chain = grasp_chains[static_cast<std::size_t>(s.chain_block)];
      const Vec3 r = contacts[static_cast<std::size_t>(s.chain_block)].r;
      m.screw.angular = axis;
      m.screw.linear = axis.cross(r);
    } else {
      m.chain = 2;  // free chain
      m.screw.angular = axis;
      m.screw.linear = Vec3::Zero();
    }
    m.scale = (is_bend[s.encoder] ? 1.0 : 4.0) * kDegToRad;
    g.mapping[static_cast<std::size_t>(s.encoder)] = m;
  }
  g.validate(&hand);
  return g;
}

GloveProfile parse_glove_profile_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("glove profile: invalid JSON: ") + e.what());
  }
  GloveProfile g;
  try {
    g.name = j.at("name").get<std::string>();
    g.encoder_count = j.at("encoder_count").get<Eigen::Index>();
    g.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    g.resolution_deg = j.at("resolution_deg").get<double>();
    for (const auto& jr : j.at("encoder_ranges_deg")) {
      const auto pair = jr.get<std::vector<double>>();
      if (pair.size() != 2) throw std::invalid_argument("glove profile: each range is [min, max]");
      g.encoder_ranges_deg.push_back({pair[0], pair[1]});
    }
    const auto stiffness = j.at("static_stiffness_kgcm_per_deg").get<std::vector<double>>();
    if (stiffness.size() != 2) {
      throw std::invalid_argument("glove profile: static_stiffness_kgcm_per_deg is [min, max]");
    }
    g.static_stiffness_kgcm_per_deg = {stiffness[0], stiffness[1]};
    g.restrained_joints = j.at("restrained_joints").get<std::vector<Eigen::Index>>();
    for (const auto& jm : j.at("mapping")) {
      EncoderMapping m;
      m.chain = jm.at("chain").get<Eigen::Index>();
      const auto screw = jm.at("screw").get<std::vector<double>>();
      if (screw.size() != 6) throw std::invalid_argument("glove profile: screw must have 6 entries");
      Vec6 v;
      for (int i = 0; i < 6; ++i) v(i) = screw[static_cast<std::size_t>(i)];
      m.screw = Twist::from_vector(v);
      m.scale = jm.at("scale").get<double>();
      g.mapping.push_back(m);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("glove profile: missing or mistyped field: ") + e.what());
  }
  g.validate();
  return g;
}

GloveProfile load_glove_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open glove profile: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_glove_profile_json(ss.str());
}

std::string glove_profile_to_json(const GloveProfile& profile) {
  nlohmann::json j;
  j["name"] = profile.name;
  j["encoder_count"] = profile.encoder_count;
  j["sample_rate_hz"] = profile.sample_rate_hz;
  j["resolution_deg"] = profile.resolution_deg;
  for (const auto& r : profile.encoder_ranges_deg) j["encoder_ranges_deg"].push_back({r[0], r[1]});
  j["static_stiffness_kgcm_per_deg"] = {profile.static_stiffness_kgcm_per_deg[0],
                                        profile.static_stiffness_kgcm_per_deg[1]};
  j["restrained_joints"] = profile.restrained_joints;
  for (const EncoderMapping& m : profile.mapping) {
    const Vec6 v = m.screw.vector();
    j["mapping"].push_back({{"chain", m.chain},
                            {"screw", {v(0), v(1), v(2), v(3), v(4), v(5)}},
                            {"scale", m.scale}});
  }
  return j.dump(2);
}

void write_glove_trace_csv(const std::string& path, const GloveTrace& trace) {
  const Eigen::Index k = trace.samples.empty() ? 0 : trace.samples[0].values_deg.size();
  std::vector<std::string> header = {"t_s"};
  for (Eigen::Index j = 0; j < k; ++j) {
    char name[16];
    std::snprintf(name, sizeof(name), "jm%02d", static_cast<int>(j) + 1);
    header.emplace_back(name);
  }
  MatX data(static_cast<Eigen::Index>(trace.samples.size()), k + 1);
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    data(static_cast<Eigen::Index>(i), 0) = trace.samples[i].t;
    data.block(static_cast<Eigen::Index>(i), 1, 1, k) = trace.samples[i].values_deg.transpose();
  }
  write_csv(path, header, data);
}

GloveTrace read_glove_trace_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header[0] != "t_s") {
    throw std::invalid_argument("glove trace csv: first column must be t_s");
  }
  GloveTrace trace;
  const Eigen::Index k = table.data.cols() - 1;
  trace.samples.resize(static_cast<std::size_t>(table.data.rows()));
  for (Eigen::Index i = 0; i < table.data.rows(); ++i) {
    trace.samples[static_cast<std::size_t>(i)].t = table.data(i, 0);
    trace.samples[static_cast<std::size_t>(i)].values_deg = table.data.row(i).tail(k).transpose();
  }
  return trace;
}

void write_intent_csv(const std::string& path, const IntentSeries& series) {
  const std::vector<std::string> header = {"t_s",  "dthx_rad", "dthy_rad", "dthz_rad",
                                           "dx_m", "dy_m",     "dz_m"};
  MatX data(static_cast<Eigen::Index>(series.t.size()), 7);
  for (std::size_t i = 0; i < series.t.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    data(r, 0) = series.t[i];
    data.block<1, 3>(r, 1) = series.dtheta.row(r);
    data.block<1, 3>(r, 4) = series.d.row(r);
  }
  write_csv(path, header, data);
}

IntentSeries read_intent_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::vector<std::string> expected = {"t_s",  "dthx_rad", "dthy_rad", "dthz_rad",
                                             "dx_m", "dy_m",     "dz_m"};
  if (table.header != expected) {
    throw std::invalid_argument("intent csv: unexpected header in " + path);
  }
  IntentSeries series;
  series.t.resize(static_cast<std::size_t>(table.data.rows()));
  series.dtheta.resize(table.data.rows(), 3);
  series.d.resize(table.data.rows(), 3);
  for (Eigen::Index i = 0; i < table.data.rows(); ++i) {
    series.t[static_cast<std::size_t>(i)] = table.data(i, 0);
    series.dtheta.row(i) = table.data.row(i).segment<3>(1);
    series.d.row(i) = table.data.row(i).segment<3>(4);
  }
  return series;
}

}  // namespace teleop
