#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <vector>

#include "centipede/vec3.hpp"

namespace centipede {

inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

struct MassPoint {
  Vec3 position;
  Vec3 velocity;
  double mass = 1.0;
  Vec3 force;                         // zeroed at the start of every substep
  double contact_normal_force = 0.0;  // this substep
  // Where the tangential contact spring is attached while the point touches
  // a surface.
  Vec3 anchor;
  bool anchored = false;
};

enum class LinkKind { PassiveLinear, ActiveLinear, Rotational };
enum class HingeAxis { Yaw, Roll };
enum class Side : int { Left = 0, Right = 1 };

inline constexpr std::array<Side, 2> kSides{Side::Left, Side::Right};
constexpr std::size_t side_index(Side s) { return static_cast<std::size_t>(s); }
// +1 for the right side (world +z at rest), -1 for the left.
constexpr double side_sign(Side s) { return s == Side::Right ? 1.0 : -1.0; }

// Spring/damper gains of one joint category. Linear gains act along a link,
// rotational gains act on hinge angles.
struct JointGains {
  double k_lin = 0.0;
  double d_lin = 0.0;
  double k_rot = 0.0;
  double d_rot = 0.0;
};

// Categories 1-5: foot-knee, knee-trunk, trunk internal, trunk passive
// (top/bottom between segments), trunk active (left/right between segments).
inline constexpr std::array<JointGains, 5> kCategoryGains{{
    {4500.0, 5.0, 7000.0, 40.0},
    {1750.0, 20.0, 8500.0, 0.0},
    {5000.0, 300.0, 600.0, 0.0},
    {5500.0, 10.0, 5000.0, 20.0},
    {1500.0, 20.0, 6000.0, 30.0},
}};

inline JointGains gains_for_category(int category) {
  return kCategoryGains.at(static_cast<std::size_t>(category - 1));
}

struct Link {
  LinkKind kind = LinkKind::PassiveLinear;
  // Linear kinds: the two endpoints. Rotational: a is the hinge anchor and
  // b the distal point.
  std::size_t a = kNoIndex;
  std::size_t b = kNoIndex;
  // Rotational roll joints: the proximal limb point that, together with the
  // anchor, defines the reference direction of the hinge.
  std::size_t reference = kNoIndex;
  int segment = -1;  // owning segment of a rotational joint
  HingeAxis axis = HingeAxis::Yaw;
  Side side = Side::Left;

  double rest_length = 0.0;       // linear kinds; ActiveLinear: the current target
  double target_angle = 0.0;      // rotational, radians, about the hinge axis
  double target_elevation = 0.0;  // rotational, radians, out of the hinge plane
  double k_lin = 0.0;
  double d_lin = 0.0;
  double k_rot = 0.0;
  double d_rot = 0.0;
  int category = 3;

  bool is_linear() const { return kind != LinkKind::Rotational; }
};

// Point indices of one trunk segment. front/back are spine points shared with
// the neighbouring segments. Leg arrays are indexed by side_index().
struct SegmentPoints {
  std::size_t front = kNoIndex;
  std::size_t back = kNoIndex;
  std::size_t left = kNoIndex;
  std::size_t right = kNoIndex;
  std::size_t top = kNoIndex;
  std::size_t bottom = kNoIndex;
  std::array<std::size_t, 2> knee{kNoIndex, kNoIndex};
  std::array<std::size_t, 2> foot{kNoIndex, kNoIndex};

  std::size_t lateral(Side s) const { return s == Side::Left ? left : right; }
  std::array<std::size_t, 6> octahedron() const { return {front, back, left, right, top, bottom}; }
};

struct PhysicsDiagnostics {
  std::size_t degenerate_links = 0;    // coincident endpoints, force skipped
  std::size_t singular_joints = 0;     // lever arm below threshold, joint skipped
};

// The mass-point/link graph of one centipede. Segments are ordered from tail
// (index 0) to head.
struct Body {
  std::vector<MassPoint> points;
  std::vector<Link> links;
  std::vector<SegmentPoints> segments;
  // trunk_joints[j][side]: ActiveLinear link joining segment j and j+1.
  std::vector<std::array<std::size_t, 2>> trunk_joints;
  // Per segment and side: the knee (yaw) and foot (roll) rotational links.
  std::vector<std::array<std::size_t, 2>> knee_joints;
  std::vector<std::array<std::size_t, 2>> foot_joints;
  std::vector<double> leg_lengths;
  PhysicsDiagnostics diagnostics;

  std::size_t segment_count() const { return segments.size(); }
  std::size_t foot_point(std::size_t segment, Side s) const {
    return segments[segment].foot[side_index(s)];
  }
  double total_mass() const {
    double m = 0.0;
    for (const auto& p : points) m += p.mass;
    return m;
  }
};

inline Vec3 total_momentum(const Body& body) {
  Vec3 p;
  for (const auto& mp : body.points) p += mp.velocity * mp.mass;
  return p;
}

inline Vec3 segment_centroid(const Body& body, std::size_t segment) {
  Vec3 c;
  for (auto idx : body.segments[segment].octahedron()) c += body.points[idx].position;
  return c / 6.0;
}

inline Vec3 head_position(const Body& body) { return segment_centroid(body, body.segment_count() - 1); }

}  // namespace centipede
