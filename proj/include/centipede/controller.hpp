#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "centipede/body.hpp"
#include "centipede/morphology.hpp"
#include "centipede/physics.hpp"

namespace centipede {

// Which proprioceptive detectors modulate the leg oscillators.
enum class Variant { A, C, AC };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::A: return "A";
    case Variant::C: return "C";
    case Variant::AC: return "A+C";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "A") return Variant::A;
  if (s == "C") return Variant::C;
  if (s == "A+C" || s == "AC") return Variant::AC;
  throw std::invalid_argument("unknown controller variant '" + s + "' (expected A, C or A+C)");
}

// How the head and tail segments, which have only one neighbouring trunk
// joint, fill in the missing one for their detectors.
enum class BoundaryRule {
  Silent,         // no detector input at all
  NaturalLength,  // the missing joint reads l_n
  Mirror,         // the missing joint reads the same as the present one
};

inline std::string to_string(BoundaryRule b) {
  switch (b) {
    case BoundaryRule::Silent: return "silent";
    case BoundaryRule::NaturalLength: return "natural-length";
    case BoundaryRule::Mirror: return "mirror";
  }
  return "?";
}

inline BoundaryRule parse_boundary_rule(const std::string& s) {
  if (s == "silent") return BoundaryRule::Silent;
  if (s == "natural-length") return BoundaryRule::NaturalLength;
  if (s == "mirror") return BoundaryRule::Mirror;
  throw std::invalid_argument("unknown boundary rule '" + s + "' (expected silent, natural-length or mirror)");
}

constexpr bool uses_angle_detector(Variant v) { return v == Variant::A || v == Variant::AC; }
constexpr bool uses_contraction_detector(Variant v) { return v == Variant::C || v == Variant::AC; }

struct ControllerParams {
  double natural_length = 1.0;  // l_n
  double gamma = 0.005;         // touch sensitivity
  double beta = 0.0;            // contraction amplitude
  double omega = 0.02 * kPi;    // radians per control step
  double sigma_angle = 0.09;
  double sigma_contraction = 0.076;
  double c = 0.5;               // contraction-term phase lag, in units of pi
  double alpha_leg = deg_to_rad(20.0);
  double alpha_foot = deg_to_rad(20.0);
  Variant variant = Variant::A;
  int touch_window = 20;
  double min_length_fraction = 0.1;  // desired trunk length floor, fraction of l_n
  double touch_gain = 2.0;           // scales contact force into the touch signal N
  BoundaryRule boundary = BoundaryRule::NaturalLength;

  void validate() const {
    if (!(natural_length > 0.0)) throw std::invalid_argument("natural length must be positive");
    if (!(gamma >= 0.0 && beta >= 0.0 && omega >= 0.0 && sigma_angle >= 0.0 && sigma_contraction >= 0.0 &&
          c >= 0.0 && alpha_leg >= 0.0 && alpha_foot >= 0.0))
      throw std::invalid_argument("controller parameters must be non-negative");
    if (touch_window < 1) throw std::invalid_argument("touch window must be >= 1");
  }
};

// Mean over the touch window; samples not yet observed count as zero.
inline double touch_average(std::span<const double> buffer) {
  if (buffer.empty()) return 0.0;
  return std::accumulate(buffer.begin(), buffer.end(), 0.0) / static_cast<double>(buffer.size());
}

// Fixed-length ring buffer of per-control-step foot contact magnitudes.
class TouchWindow {
 public:
  explicit TouchWindow(std::size_t length = 20) : samples_(length, 0.0) {}

  void push(double value) {
    samples_[head_] = value;
    head_ = (head_ + 1) % samples_.size();
  }
  double average() const { return touch_average(samples_); }
  std::span<const double> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }

 private:
  std::vector<double> samples_;
  std::size_t head_ = 0;
};

// Desired length of a trunk active joint from the touch signal of the foot
// ahead of it, floored at min_length_fraction * l_n.
inline double body_controller_target(double touch, const ControllerParams& p) {
  const double desired = p.natural_length - p.beta * std::tanh(p.gamma * touch);
  return std::max(desired, p.min_length_fraction * p.natural_length);
}

// Measured lengths of the four trunk joints around one segment. "rear" is the
// joint toward the tail (i - 1/2), "front" toward the head (i + 1/2).
struct NeighborLengths {
  double left_rear = 1.0;
  double right_rear = 1.0;
  double left_front = 1.0;
  double right_front = 1.0;
};

// Positive when the left side is shorter, i.e. the trunk bends to the left.
inline double angle_detector(const NeighborLengths& l) {
  return l.right_rear - l.left_front + l.right_front - l.left_rear;
}

// Positive when the joints ahead are longer than the joints behind.
inline double contraction_detector(const NeighborLengths& l) {
  return l.left_front + l.right_front - l.left_rear - l.right_rear;
}

// Right-hand side of the phase equation for one leg, minus omega.
inline double phase_modulation(double theta, Side side, double angle_signal, double contraction_signal,
                               const ControllerParams& p) {
  double m = 0.0;
  if (uses_angle_detector(p.variant)) m += side_sign(side) * p.sigma_angle * angle_signal * std::cos(theta);
  if (uses_contraction_detector(p.variant))
    m -= p.sigma_contraction * contraction_signal * std::cos(theta + p.c * kPi);
  return m;
}

// Wraps to [0, 2pi).
inline double wrap_phase(double theta) {
  double w = std::fmod(theta, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

// One explicit Euler step (one control step) of the leg oscillator.
inline double leg_phase_step(double theta, Side side, double angle_signal, double contraction_signal,
                             const ControllerParams& p) {
  return wrap_phase(theta + p.omega + phase_modulation(theta, side, angle_signal, contraction_signal, p));
}

// Thigh sweep about the yaw axis, positive toward the tail.
inline double leg_target_angle(double theta, const ControllerParams& p) { return p.alpha_leg * std::cos(theta); }

// Foot swing about the roll axis, positive lifts the foot.
inline double foot_target_angle(double theta, const ControllerParams& p) { return p.alpha_foot * std::sin(theta); }

struct ControllerState {
  std::vector<std::array<double, 2>> phase;           // per segment, [left, right]
  std::vector<std::array<TouchWindow, 2>> touch;      // per segment foot
  std::vector<std::array<double, 2>> touch_signal;    // smoothed N per foot
  std::vector<std::array<double, 2>> angle_signal;    // last A^D per segment (same for both sides)
  std::vector<double> contraction_signal;
  LegPosture posture;
  std::uint64_t ticks = 0;
};

inline ControllerState make_controller_state(std::size_t segments, const ControllerParams& p,
                                             const LegPosture& posture) {
  ControllerState s;
  s.phase.assign(segments, {0.0, 0.0});
  const auto window = static_cast<std::size_t>(p.touch_window);
  s.touch.assign(segments, {TouchWindow(window), TouchWindow(window)});
  s.touch_signal.assign(segments, {0.0, 0.0});
  s.angle_signal.assign(segments, {0.0, 0.0});
  s.contraction_signal.assign(segments, 0.0);
  s.posture = posture;
  return s;
}

// Initial phases uniform in [0, 2pi), drawn segment by segment, left then right.
inline void seed_phases(ControllerState& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, kTwoPi);
  for (auto& legs : s.phase)
    for (auto& theta : legs) theta = wrap_phase(dist(rng));
}

// Detector inputs for segment i from the measured trunk joint lengths.
// Returns false when the segment gets no input.
inline bool neighbor_lengths(const std::vector<std::array<double, 2>>& joint_lengths, std::size_t segment,
                             NeighborLengths& out, BoundaryRule rule = BoundaryRule::Silent,
                             double natural_length = 1.0) {
  const bool has_rear = segment > 0 && segment <= joint_lengths.size();
  const bool has_front = segment < joint_lengths.size();
  if (!has_rear && !has_front) return false;
  if (!(has_rear && has_front) && rule == BoundaryRule::Silent) return false;
  std::array<double, 2> fill{natural_length, natural_length};
  if (rule == BoundaryRule::Mirror) fill = has_rear ? joint_lengths[segment - 1] : joint_lengths[segment];
  const auto& rear = has_rear ? joint_lengths[segment - 1] : fill;
  const auto& front = has_front ? joint_lengths[segment] : fill;
  out.left_rear = rear[side_index(Side::Left)];
  out.right_rear = rear[side_index(Side::Right)];
  out.left_front = front[side_index(Side::Left)];
  out.right_front = front[side_index(Side::Right)];
  return true;
}

inline std::vector<std::array<double, 2>> measure_trunk_joints(const Body& body) {
  std::vector<std::array<double, 2>> lengths(body.trunk_joints.size());
  for (std::size_t j = 0; j < lengths.size(); ++j)
    for (Side s : kSides)
      lengths[j][side_index(s)] = link_length(body, body.links[body.trunk_joints[j][side_index(s)]]);
  return lengths;
}

// Writes knee and foot targets for the current phases.
inline void apply_leg_targets(Body& body, const ControllerState& state, const ControllerParams& p) {
  for (std::size_t i = 0; i < body.segment_count(); ++i) {
    for (Side s : kSides) {
      const double theta = state.phase[i][side_index(s)];
      body.links[body.knee_joints[i][side_index(s)]].target_angle = state.posture.knee_yaw + leg_target_angle(theta, p);
      body.links[body.foot_joints[i][side_index(s)]].target_angle =
          state.posture.foot_roll - foot_target_angle(theta, p);
    }
  }
}

// One control step. foot_forces[i][side] is the contact magnitude of each
// foot over the last control step.
inline void controller_tick(Body& body, ControllerState& state, const ControllerParams& p,
                            const std::vector<std::array<double, 2>>& foot_forces) {
  const std::size_t n = body.segment_count();
  for (std::size_t i = 0; i < n; ++i) {
    for (Side s : kSides) {
      auto& window = state.touch[i][side_index(s)];
      window.push(p.touch_gain * foot_forces[i][side_index(s)]);
      state.touch_signal[i][side_index(s)] = window.average();
    }
  }

  // Joint j joins segments j and j+1 and listens to the foot of segment j+1.
  for (std::size_t j = 0; j + 1 < n; ++j)
    for (Side s : kSides)
      body.links[body.trunk_joints[j][side_index(s)]].rest_length =
          body_controller_target(state.touch_signal[j + 1][side_index(s)], p);

  const auto lengths = measure_trunk_joints(body);
  for (std::size_t i = 0; i < n; ++i) {
    NeighborLengths nl;
    double a = 0.0;
    double c = 0.0;
    if (neighbor_lengths(lengths, i, nl, p.boundary, p.natural_length)) {
      a = angle_detector(nl);
      c = contraction_detector(nl);
    }
    state.angle_signal[i] = {a, a};
    state.contraction_signal[i] = c;
    for (Side s : kSides) {
      auto& theta = state.phase[i][side_index(s)];
      theta = leg_phase_step(theta, s, a, c, p);
    }
  }
  apply_leg_targets(body, state, p);
  ++state.ticks;
}

}  // namespace centipede
