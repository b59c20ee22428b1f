#ifndef TELEOP_INTENT_HPP
#define TELEOP_INTENT_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "teleop/hand_model.hpp"
#include "teleop/se3.hpp"

namespace teleop {

/// One glove encoder mapped onto the hand model: an equivalent fingertip
/// screw for a chain, scaled per degree of encoder motion.
struct EncoderMapping {
  Eigen::Index chain = 0;
  Twist screw;          // fingertip twist per unit (scaled) encoder rate
  double scale = M_PI / 180.0;  // twist units per deg/s of encoder rate
};

struct GloveProfile {
  std::string name;
  Eigen::Index encoder_count = 11;
  double sample_rate_hz = 200.0;
  double resolution_deg = 0.08;
  std::vector<std::array<double, 2>> encoder_ranges_deg;   // per encoder
  std::array<double, 2> static_stiffness_kgcm_per_deg = {0.0, 0.33};
  std::vector<Eigen::Index> restrained_joints;  // k2 <= k, hardware-side only
  std::vector<EncoderMapping> mapping;          // one entry per encoder

  /// Throws std::invalid_argument on an incomplete mapping, k2 > k, or
  /// (when a hand is given) chain references outside the hand.
  void validate(const HandProfile* hand = nullptr) const;
};

struct GloveSample {
  double t = 0.0;   // s
  VecX values_deg;  // k encoder angles
};

struct GloveTrace {
  std::vector<GloveSample> samples;

  /// Throws std::invalid_argument on non-increasing timestamps, size
  /// mismatches, or values outside the profile ranges.
  void validate(const GloveProfile& profile) const;
};

/// Accumulated intent: displacement and rotation-vector integrals plus the
/// goal pose they synthesize.
struct IntentState {
  Vec3 d = Vec3::Zero();       // m
  Vec3 dtheta = Vec3::Zero();  // rad
  Pose goal;
  bool rotation_only = false;
  Twist last_twist;            // previous-node twist for the trapezoid rule
  bool has_last = false;
};

struct PcaResult {
  VecX eigenvalues;       // descending
  MatX components;        // orthonormal columns, one per component
  VecX explained_ratio;   // sums to 1; empty for degenerate data
};

/// Time-stamped intent trajectory (glove-rate unless noted).
struct IntentSeries {
  std::vector<double> t;
  MatX dtheta;  // N x 3, rad
  MatX d;       // N x 3, m
};

/// Ground-truth synthetic motion: cumulative intent plus its derivative.
struct IntentSignal {
  std::vector<double> t;
  MatX dtheta;  // N x 3, rad
  MatX d;       // N x 3, m
  MatX omega;   // N x 3, rad/s
  MatX v;       // N x 3, m/s
};

struct SyntheticTrace {
  GloveTrace trace;
  IntentSignal truth;
};

/// Sum-of-logistic-wavelets intent generator: slow start, fast growth,
/// saturation per wavelet. Wavelet axes, signs and rate jitter are drawn
/// from the seed.
struct SigmoidTraceConfig {
  double amplitude_deg = 15.0;   // per-wavelet rotation magnitude
  double midpoint_s = 2.5;       // first wavelet midpoint (and lead-in)
  double steepness = 2.0;        // logistic rate, 1/s
  int wavelet_count = 3;
  double rate_hz = 200.0;
  std::uint64_t seed = 0;
  double spacing_s = 4.0;        // between wavelet midpoints
  double tail_s = 2.5;
  bool rotation_only = true;
  double translation_amplitude_m = 0.0;  // per-wavelet, when not rotation_only
  double noise_deg = 0.05;       // channel noise sigma (mixed mode)
  double mixing_gain = 100.0;    // deg per (rad/s) in the mixing map
  Eigen::Index channels = 11;
  /// Rotation axis of the first wavelet; subsequent wavelets jitter around
  /// it. Zero = fully random axes.
  Vec3 dominant_axis = Vec3::UnitZ();
  /// Wavelet sign sequencing. Alternating keeps the cumulative signal
  /// bounded (rotate, rotate back), the repeated-task pattern; Random is a
  /// drifting walk; AllPositive accumulates monotonically. The first
  /// wavelet always uses the configured amplitude, midpoint and steepness
  /// exactly.
  enum class SignPattern { Alternating, Random, AllPositive };
  SignPattern sign_pattern = SignPattern::Alternating;
  /// Relative spread of the per-wavelet amplitude and steepness draws.
  /// Repetitions of a practiced manipulation cluster tightly.
  double amplitude_jitter = 0.1;
  double steepness_jitter = 0.1;
};

/// Per-chain hypothetical fingertip twists from one pair of consecutive
/// samples: backward finite differences of the encoder angles pushed
/// through the mapping. Chains without mapped encoders get zero twists.
/// Throws std::invalid_argument when the mapping references a chain the
/// hand does not have.
[[nodiscard]] std::vector<Twist> glove_to_fingertip_twists(const GloveSample& previous,
                                                           const GloveSample& current,
                                                           const GloveProfile& glove,
                                                           const HandProfile& hand);

/// Stacks per-chain twists for the chains holding the grasp, in order.
[[nodiscard]] VecX stack_twists_for_chains(const std::vector<Twist>& chain_twists,
                                           const std::vector<Eigen::Index>& chains);

/// Minimum-norm object twist for the stacked hypothetical twists.
[[nodiscard]] Twist estimate_object_twist(const VecX& stacked_twists,
                                          const ObjectJacobian& object_jac);

/// Trapezoidal accumulation of the twist into (d, dtheta). The first call
/// integrates a rectangle step (no previous node yet). rotation_only keeps
/// d at zero. Updates the synthesized goal pose.
[[nodiscard]] IntentState integrate_intent(const IntentState& state, const Twist& twist, double dt);

/// T_o = [R(dtheta), d; 0, 1] with R from rodrigues_exp.
[[nodiscard]] Pose goal_pose_from_intent(const IntentState& state);

/// Mean-centered covariance eigendecomposition over all samples of all
/// traces. Degenerate (constant) data yields all-zero eigenvalues and no
/// components. Throws std::invalid_argument with fewer than two samples.
[[nodiscard]] PcaResult pca_analysis(const std::vector<GloveTrace>& traces);

/// Ground-truth wavelet intent signal.
[[nodiscard]] IntentSignal generate_intent_signal(const SigmoidTraceConfig& config);

/// Synthetic glove trace: channels are a seeded linear mixing of the intent
/// derivative [omega; v] plus Gaussian channel noise.
[[nodiscard]] SyntheticTrace generate_sigmoid_trace(const SigmoidTraceConfig& config);

/// Synthetic glove trace consistent with the glove mapping: channel rates
/// are the mapping pseudo-inverse of the fingertip twists J_o * twist, so
/// the estimation path can reconstruct the motion. Channels start at their
/// range midpoints.
[[nodiscard]] SyntheticTrace generate_consistent_trace(const SigmoidTraceConfig& config,
                                                       const GloveProfile& glove,
                                                       const HandProfile& hand,
                                                       const std::vector<Contact>& contacts,
                                                       const std::vector<Eigen::Index>& grasp_chains);

/// Stacked mapping matrix (6m x k): column j carries encoder j's scaled
/// screw in the block of its chain, for chains in the grasp list.
[[nodiscard]] MatX glove_mapping_matrix(const GloveProfile& glove,
                                        const std::vector<Eigen::Index>& grasp_chains);

/// Full estimation pass over a trace: finite differences, per-chain twists,
/// minimum-norm object twist against the contact set, integration.
[[nodiscard]] IntentSeries estimate_intent(const GloveTrace& trace, const GloveProfile& glove,
                                           const HandProfile& hand,
                                           const std::vector<Contact>& contacts,
                                           const std::vector<Eigen::Index>& grasp_chains,
                                           bool rotation_only);

/// Built-in glove profile matched to the default hand: three encoders per
/// grasping chain spanning the rotation axes at the nominal grasp, the
/// remaining two on the free chain.
[[nodiscard]] GloveProfile default_glove_profile(const HandProfile& hand);

[[nodiscard]] GloveProfile parse_glove_profile_json(const std::string& text);
[[nodiscard]] GloveProfile load_glove_profile(const std::string& path);
[[nodiscard]] std::string glove_profile_to_json(const GloveProfile& profile);

/// Glove trace CSV: header t_s,jm01..jmNN, angles in degrees.
void write_glove_trace_csv(const std::string& path, const GloveTrace& trace);
[[nodiscard]] GloveTrace read_glove_trace_csv(const std::string& path);

/// Intent CSV: header t_s,dthx_rad,dthy_rad,dthz_rad,dx_m,dy_m,dz_m.
void write_intent_csv(const std::string& path, const IntentSeries& series);
[[nodiscard]] IntentSeries read_intent_csv(const std::string& path);

}  // namespace teleop

#endif  // TELEOP_INTENT_HPP
