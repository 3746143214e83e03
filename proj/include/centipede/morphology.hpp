#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "centipede/body.hpp"
#include "centipede/physics.hpp"
#include "centipede/vec3.hpp"

namespace centipede {

class MorphologyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MorphologyParams {
  int segment_count = 12;
  double trunk_width = 1.0;
  double trunk_height = 1.0;
  double segment_length = 1.0;  // spine spacing, equal to the trunk joints' natural length
  // One entry per segment, ordered tail to head. Empty means uniform default_leg_length.
  std::vector<double> leg_lengths;
  double default_leg_length = 3.0;
  double leg_mass = 0.1;  // per leg, split between knee and foot
  double trunk_segment_mass = 0.3;
  double knee_fraction = 0.3;
  // Walking posture: foot droop below the horizontal thigh, degrees.
  double foot_neutral_deg = 70.0;
  // Climbing fold. When non-zero it replaces the walking droop: the foot is
  // folded this far below the horizontal thigh so the legs wrap the pole.
  double climbing_neutral_offset_deg = 0.0;
  // Apply the climbing fold as a downward thigh elevation instead of the foot.
  bool climbing_offset_on_knee = false;
  double spawn_clearance = 0.05;
  // Spawn the feet this much less folded than neutral (the controller closes
  // them). Used on the pole so that no foot starts inside it.
  double spawn_foot_open_deg = 0.0;

  std::vector<double> resolved_leg_lengths() const {
    if (leg_lengths.empty()) return std::vector<double>(static_cast<std::size_t>(std::max(segment_count, 0)), default_leg_length);
    return leg_lengths;
  }

  void validate() const {
    if (segment_count < 2) throw MorphologyError("segment_count must be >= 2, got " + std::to_string(segment_count));
    if (!(trunk_segment_mass > 0.0)) throw MorphologyError("trunk_segment_mass must be positive");
    if (!(leg_mass > 0.0)) throw MorphologyError("leg_mass must be positive");
    if (!(knee_fraction > 0.0 && knee_fraction < 1.0)) throw MorphologyError("knee_fraction must lie in (0, 1)");
    if (!(trunk_width > 0.0 && trunk_height > 0.0 && segment_length > 0.0))
      throw MorphologyError("trunk dimensions must be positive");
    const auto legs = resolved_leg_lengths();
    if (legs.size() != static_cast<std::size_t>(segment_count))
      throw MorphologyError("leg_lengths has " + std::to_string(legs.size()) + " entries for " +
                            std::to_string(segment_count) + " segments");
    for (double l : legs)
      if (!(l > 0.0)) throw MorphologyError("leg lengths must be positive");
  }
};

// Neutral joint angles the controller modulates around.
struct LegPosture {
  double knee_yaw = 0.0;        // thigh sweep, positive toward the tail
  double thigh_elevation = 0.0; // thigh droop below the horizontal
  double foot_roll = 0.0;       // foot droop below the thigh
};

inline LegPosture neutral_posture(const MorphologyParams& p) {
  LegPosture posture;
  if (p.climbing_neutral_offset_deg != 0.0) {
    if (p.climbing_offset_on_knee)
      posture.thigh_elevation = deg_to_rad(p.climbing_neutral_offset_deg);
    else
      posture.foot_roll = deg_to_rad(p.climbing_neutral_offset_deg);
  } else {
    posture.foot_roll = deg_to_rad(p.foot_neutral_deg);
  }
  return posture;
}

namespace detail {

inline std::size_t add_point(Body& body, const Vec3& pos, double mass) {
  MassPoint p;
  p.position = pos;
  p.mass = mass;
  body.points.push_back(p);
  return body.points.size() - 1;
}

inline std::size_t add_linear(Body& body, LinkKind kind, std::size_t a, std::size_t b, int category) {
  Link l;
  l.kind = kind;
  l.a = a;
  l.b = b;
  l.category = category;
  const JointGains g = gains_for_category(category);
  l.k_lin = g.k_lin;
  l.d_lin = g.d_lin;
  l.k_rot = g.k_rot;
  l.d_rot = g.d_rot;
  l.rest_length = norm(body.points[a].position - body.points[b].position);
  body.links.push_back(l);
  return body.links.size() - 1;
}

inline std::size_t add_rotational(Body& body, HingeAxis axis, std::size_t anchor, std::size_t distal,
                                  std::size_t reference, int segment, Side side, int category) {
  Link l;
  l.kind = LinkKind::Rotational;
  l.axis = axis;
  l.a = anchor;
  l.b = distal;
  l.reference = reference;
  l.segment = segment;
  l.side = side;
  l.category = category;
  const JointGains g = gains_for_category(category);
  l.k_lin = g.k_lin;
  l.d_lin = g.d_lin;
  l.k_rot = g.k_rot;
  l.d_rot = g.d_rot;
  body.links.push_back(l);
  return body.links.size() - 1;
}

}  // namespace detail

// Builds the rest-pose body lying along world +x (head at the largest x),
// trunk axis at height zero. Callers place it in the world with place_body().
inline Body build_centipede(const MorphologyParams& params) {
  params.validate();
  const auto legs = params.resolved_leg_lengths();
  const std::size_t n = static_cast<std::size_t>(params.segment_count);
  const double seg_len = params.segment_length;
  const double half_w = 0.5 * params.trunk_width;
  const double half_h = 0.5 * params.trunk_height;
  const double share = params.trunk_segment_mass / 6.0;
  const double leg_point_mass = 0.5 * params.leg_mass;
  const LegPosture posture = neutral_posture(params);

  Body body;
  body.leg_lengths = legs;
  body.segments.resize(n);
  body.knee_joints.resize(n);
  body.foot_joints.resize(n);
  body.trunk_joints.resize(n - 1);
  body.points.reserve(n + 1 + 8 * n);

  // Spine points carry the share of every segment they belong to.
  std::vector<std::size_t> spine(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double owners = (k == 0 || k == n) ? 1.0 : 2.0;
    spine[k] = detail::add_point(body, {static_cast<double>(k) * seg_len, 0.0, 0.0}, owners * share);
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto& seg = body.segments[i];
    const double xc = (static_cast<double>(i) + 0.5) * seg_len;
    seg.back = spine[i];
    seg.front = spine[i + 1];
    seg.left = detail::add_point(body, {xc, 0.0, -half_w}, share);
    seg.right = detail::add_point(body, {xc, 0.0, half_w}, share);
    seg.top = detail::add_point(body, {xc, half_h, 0.0}, share);
    seg.bottom = detail::add_point(body, {xc, -half_h, 0.0}, share);

    for (Side side : kSides) {
      const double s = side_sign(side);
      const Vec3 outward{0.0, 0.0, s};
      const Vec3 attach = body.points[seg.lateral(side)].position;
      const Vec3 thigh_dir = outward * std::cos(posture.thigh_elevation) + Vec3{0.0, -1.0, 0.0} * std::sin(posture.thigh_elevation);
      const double leg = legs[i];
      const Vec3 knee = attach + thigh_dir * (params.knee_fraction * leg);
      const Vec3 down_perp = normalized(Vec3{0.0, -1.0, 0.0} - thigh_dir * dot(Vec3{0.0, -1.0, 0.0}, thigh_dir));
      const double spawn_roll = posture.foot_roll - deg_to_rad(params.spawn_foot_open_deg);
      const Vec3 foot_dir = thigh_dir * std::cos(spawn_roll) + down_perp * std::sin(spawn_roll);
      const Vec3 foot = knee + foot_dir * ((1.0 - params.knee_fraction) * leg);
      seg.knee[side_index(side)] = detail::add_point(body, knee, leg_point_mass);
      seg.foot[side_index(side)] = detail::add_point(body, foot, leg_point_mass);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& seg = body.segments[i];
    for (std::size_t tip : {seg.front, seg.back})
      for (std::size_t v : {seg.left, seg.right, seg.top, seg.bottom})
        detail::add_linear(body, LinkKind::PassiveLinear, tip, v, 3);
    detail::add_linear(body, LinkKind::PassiveLinear, seg.left, seg.top, 3);
    detail::add_linear(body, LinkKind::PassiveLinear, seg.top, seg.right, 3);
    detail::add_linear(body, LinkKind::PassiveLinear, seg.right, seg.bottom, 3);
    detail::add_linear(body, LinkKind::PassiveLinear, seg.bottom, seg.left, 3);
  }

  for (std::size_t j = 0; j + 1 < n; ++j) {
    const auto& rear = body.segments[j];
    const auto& front = body.segments[j + 1];
    detail::add_linear(body, LinkKind::PassiveLinear, rear.top, front.top, 4);
    detail::add_linear(body, LinkKind::PassiveLinear, rear.bottom, front.bottom, 4);
    body.trunk_joints[j][side_index(Side::Left)] =
        detail::add_linear(body, LinkKind::ActiveLinear, rear.left, front.left, 5);
    body.trunk_joints[j][side_index(Side::Right)] =
        detail::add_linear(body, LinkKind::ActiveLinear, rear.right, front.right, 5);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& seg = body.segments[i];
    for (Side side : kSides) {
      const std::size_t si = side_index(side);
      const std::size_t attach = seg.lateral(side);
      detail::add_linear(body, LinkKind::PassiveLinear, attach, seg.knee[si], 2);
      detail::add_linear(body, LinkKind::PassiveLinear, seg.knee[si], seg.foot[si], 1);
      const auto knee = detail::add_rotational(body, HingeAxis::Yaw, attach, seg.knee[si], kNoIndex,
                                               static_cast<int>(i), side, 2);
      // The yaw hinge axis points down on the right and up on the left.
      body.links[knee].target_angle = posture.knee_yaw;
      body.links[knee].target_elevation = side_sign(side) * posture.thigh_elevation;
      body.knee_joints[i][si] = knee;
      const auto foot = detail::add_rotational(body, HingeAxis::Roll, seg.knee[si], seg.foot[si], attach,
                                               static_cast<int>(i), side, 1);
      body.links[foot].target_angle = posture.foot_roll;
      body.foot_joints[i][si] = foot;
    }
  }
  return body;
}

// Rigidly rotates the body about the world z axis by angle (radians) and
// translates it by offset.
inline void transform_body(Body& body, double angle_z, const Vec3& offset) {
  const Vec3 axis{0.0, 0.0, 1.0};
  for (auto& p : body.points) p.position = rotate(p.position, axis, angle_z) + offset;
}

// Places a freshly built body in the world: on the plane with the lowest
// point spawn_clearance above the ground, or lying on the pole's upper face
// with its belly spawn_clearance above it.
inline void place_body(Body& body, const WorldGeometry& world, const MorphologyParams& params) {
  if (world.kind == WorldKind::Plane) {
    double lowest = 0.0;
    for (const auto& p : body.points) lowest = std::min(lowest, p.position.y);
    transform_body(body, 0.0, {0.0, params.spawn_clearance - lowest, 0.0});
    return;
  }
  const double body_len = params.segment_length * params.segment_count;
  const double lift = 0.5 * params.trunk_height + params.spawn_clearance;
  // Centre the body a few lengths up the pole from its lower end.
  const double along = world.pole_start + 2.0 * body_len;
  transform_body(body, 0.0, {along, lift, 0.0});
  transform_body(body, deg_to_rad(world.pole_incline_deg), {});
}

struct GridPoint {
  double beta = 0.0;
  double axis_value = 0.0;
};

struct AxisRange {
  std::string name;
  double min = 0.0;
  double max = 0.0;
};

struct ExperimentPreset {
  int id = 1;
  MorphologyParams morphology;
  WorldGeometry world;
  SimConfig sim;
  double beta = 0.0;
  double touch_gain = 2.0;
  AxisRange axis;
  bool climbing = false;
};

inline AxisRange experiment_axis(int id) {
  switch (id) {
    case 1: return {"leg_length", 1.0, 8.75};
    case 2: return {"trunk_mass", 0.06, 3.66};
    case 3: return {"incline_deg", 0.0, 93.0};
    case 4: return {"none", 0.0, 0.0};
    default: throw std::out_of_range("unknown experiment id " + std::to_string(id));
  }
}

inline constexpr double kClimbingOffsetDeg = 115.0;
inline constexpr double kPoleWidth = 1.12;
// Viscous friction coefficients for the walking plane and the pole.
inline constexpr double kPlaneFrictionDamping = 10.0;
inline constexpr double kPoleFrictionDamping = 50.0;
// Feet clamped onto the pole need a finer physics step; the control step
// stays 0.02.
inline constexpr double kPolePhysicsDt = 0.000125;
inline constexpr int kPoleSubsteps = 160;
// Contact force to touch signal scale. Feet pressed onto the pole carry far
// larger normal forces than feet standing on the plane.
inline constexpr double kWalkingTouchGain = 2.0;
inline constexpr double kClimbingTouchGain = 0.3;

// Fully resolved morphology and world of experiments 1-4 at one grid point.
// Experiment 4 ignores the axis value (mixed legs: back half 1, front half 3).
inline ExperimentPreset experiment_preset(int id, GridPoint point) {
  ExperimentPreset preset;
  preset.id = id;
  preset.axis = experiment_axis(id);
  preset.beta = point.beta;
  if (!(point.beta >= 0.0)) throw std::out_of_range("beta must be >= 0");
  constexpr double eps = 1e-9;
  if (id != 4 && (point.axis_value < preset.axis.min - eps || point.axis_value > preset.axis.max + eps))
    throw std::out_of_range(preset.axis.name + " = " + std::to_string(point.axis_value) + " outside [" +
                            std::to_string(preset.axis.min) + ", " + std::to_string(preset.axis.max) +
                            "] for experiment " + std::to_string(id));
  auto& m = preset.morphology;
  m.segment_count = 12;
  m.trunk_width = 1.0;
  m.leg_mass = 0.1;
  m.trunk_segment_mass = 0.3;
  preset.world.d_tangent = kPlaneFrictionDamping;
  preset.touch_gain = kWalkingTouchGain;
  switch (id) {
    case 1:
      m.default_leg_length = point.axis_value;
      break;
    case 2:
      m.default_leg_length = 3.0;
      m.trunk_segment_mass = point.axis_value;
      break;
    case 3:
      m.default_leg_length = 1.5;
      m.climbing_neutral_offset_deg = kClimbingOffsetDeg;
      m.spawn_foot_open_deg = 20.0;
      preset.world.kind = WorldKind::Pole;
      preset.world.pole_half_width = 0.5 * kPoleWidth;
      preset.world.pole_incline_deg = point.axis_value;
      preset.world.d_tangent = kPoleFrictionDamping;
      preset.sim.physics_dt = kPolePhysicsDt;
      preset.sim.substeps_per_control_step = kPoleSubsteps;
      preset.touch_gain = kClimbingTouchGain;
      preset.climbing = true;
      break;
    case 4: {
      m.segment_count = 22;
      m.leg_lengths.assign(22, 1.0);
      std::fill(m.leg_lengths.begin() + 11, m.leg_lengths.end(), 3.0);
      break;
    }
  }
  m.leg_lengths = m.resolved_leg_lengths();
  return preset;
}

}  // namespace centipede
