#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "centipede/body.hpp"
#include "centipede/vec3.hpp"

namespace centipede {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) { return std::atan2(std::sin(a), std::cos(a)); }

class PhysicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite state after a substep.
class NumericalBlowUp : public PhysicsError {
 public:
  explicit NumericalBlowUp(std::size_t step)
      : PhysicsError("numerical blow-up at physics step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

enum class WorldKind { Plane, Pole };

struct WorldGeometry {
  WorldKind kind = WorldKind::Plane;
  double pole_half_width = 1.12 / 2.0;
  double pole_incline_deg = 0.0;
  // Pole extent along its axis, measured from the world origin.
  double pole_start = -30.0;
  double pole_length = 400.0;
  double k_contact = 2.0e4;
  double d_contact = 50.0;
  double k_tangent = 0.0;    // stick-slip anchor spring; 0 disables it
  double d_tangent = 50.0;   // viscous friction below the Coulomb limit
  double friction_mu = 5.0;
  double gravity = -24.525;

  void validate() const {
    if (!(pole_incline_deg >= 0.0 && pole_incline_deg <= 93.0))
      throw std::invalid_argument("pole incline must lie in [0, 93] degrees");
    if (!(friction_mu >= 0.0)) throw std::invalid_argument("friction coefficient must be >= 0");
    if (!(k_contact >= 0.0 && k_tangent >= 0.0 && d_contact >= 0.0 && d_tangent >= 0.0)) throw std::invalid_argument("contact gains must be >= 0");
    if (kind == WorldKind::Pole && !(pole_half_width > 0.0 && pole_length > 0.0))
      throw std::invalid_argument("pole dimensions must be positive");
  }

  // Unit vector along the pole, pointing up-slope.
  Vec3 pole_axis() const {
    const double a = deg_to_rad(pole_incline_deg);
    return {std::cos(a), std::sin(a), 0.0};
  }
  // Outward normal of the pole's upper face.
  Vec3 pole_up() const {
    const double a = deg_to_rad(pole_incline_deg);
    return {-std::sin(a), std::cos(a), 0.0};
  }
  // The pole's upper face contains the origin; its centre line lies one
  // half-width below that face.
  Vec3 pole_center_point() const { return pole_up() * -pole_half_width; }

  double distance_from_pole_axis(const Vec3& p) const {
    const Vec3 rel = p - pole_center_point();
    return norm(rel - pole_axis() * dot(rel, pole_axis()));
  }
};

struct SimConfig {
  double physics_dt = 0.0004;
  int substeps_per_control_step = 50;
  int total_control_steps = 6000;

  double control_dt() const { return physics_dt * substeps_per_control_step; }
  void validate() const {
    if (!(physics_dt > 0.0)) throw std::invalid_argument("physics_dt must be positive");
    if (substeps_per_control_step < 1) throw std::invalid_argument("substeps_per_control_step must be >= 1");
    if (total_control_steps < 1) throw std::invalid_argument("total_control_steps must be >= 1");
  }
};

struct SegmentFrame {
  Vec3 forward{1.0, 0.0, 0.0};
  Vec3 up{0.0, 1.0, 0.0};
  Vec3 right{0.0, 0.0, 1.0};
  Vec3 origin;
};

// forward from back to front spine point, up from bottom to top orthogonalised
// against forward, right = forward x up.
inline SegmentFrame compute_segment_frame(const Vec3& front, const Vec3& back, const Vec3& top,
                                          const Vec3& bottom, int segment = -1) {
  const Vec3 axis = front - back;
  const double axis_len = norm(axis);
  if (!(axis_len > 1e-12))
    throw PhysicsError("degenerate segment frame (front/back coincide) in segment " + std::to_string(segment));
  SegmentFrame f;
  f.forward = axis / axis_len;
  const Vec3 vertical = top - bottom;
  Vec3 up = vertical - f.forward * dot(vertical, f.forward);
  const double up_len = norm(up);
  if (!(up_len > 1e-9 * std::max(1.0, norm(vertical))))
    throw PhysicsError("degenerate segment frame (top/bottom parallel to spine) in segment " +
                       std::to_string(segment));
  f.up = up / up_len;
  // One Gram-Schmidt refinement pass keeps the triad orthonormal to ~1e-16.
  f.up = normalized(f.up - f.forward * dot(f.up, f.forward));
  f.right = normalized(cross(f.forward, f.up));
  f.origin = (front + back + top + bottom) * 0.25;
  return f;
}

inline SegmentFrame compute_segment_frame(const Body& body, std::size_t segment) {
  const auto& s = body.segments[segment];
  const auto& p = body.points;
  return compute_segment_frame(p[s.front].position, p[s.back].position, p[s.top].position,
                               p[s.bottom].position, static_cast<int>(segment));
}

struct ForcePair {
  Vec3 on_a;
  Vec3 on_b;
};

// Spring-damper along the axis from b to a. Coincident points yield zero force
// and bump the degenerate-link counter when diagnostics are supplied.
inline ForcePair linear_spring_damper_force(const MassPoint& pa, const MassPoint& pb, double rest, double k,
                                            double d, PhysicsDiagnostics* diag = nullptr) {
  const Vec3 delta = pa.position - pb.position;
  const double len = norm(delta);
  if (!(len > 1e-12)) {
    if (diag) ++diag->degenerate_links;
    return {};
  }
  const Vec3 axis = delta / len;
  const double closing = dot(pa.velocity - pb.velocity, axis);
  const Vec3 f = axis * (-k * (len - rest) - d * closing);
  return {f, -f};
}

// Derivatives of a hinge joint's angle and elevation with respect to the
// positions of the points that define it. The joint energy
// 1/2 k (target - angle)^2 + 1/2 k (target_elevation - elevation)^2 is a
// function of these points only, so the forces derived from it sum to zero
// and exert no net torque.
struct HingeJacobian {
  static constexpr std::size_t kMaxPoints = 8;

  std::array<std::size_t, kMaxPoints> index{};
  std::array<Vec3, kMaxPoints> d_angle{};
  std::array<Vec3, kMaxPoints> d_elevation{};
  std::size_t count = 0;
  double angle = 0.0;
  double elevation = 0.0;
  double lever = 0.0;  // distal lever length
  bool valid = false;

  void add(std::size_t point, const Vec3& da, const Vec3& de) {
    for (std::size_t i = 0; i < count; ++i) {
      if (index[i] == point) {
        d_angle[i] += da;
        d_elevation[i] += de;
        return;
      }
    }
    index[count] = point;
    d_angle[count] = da;
    d_elevation[count] = de;
    ++count;
  }
};

// Forces of one rotational joint, one entry per involved point.
struct RotationalForceSet {
  std::array<std::size_t, HingeJacobian::kMaxPoints> index{};
  std::array<Vec3, HingeJacobian::kMaxPoints> force{};
  std::size_t count = 0;
  double angle = 0.0;      // measured hinge angle
  double elevation = 0.0;  // measured out-of-plane angle
  double angle_rate = 0.0;
  bool skipped = false;

  Vec3 net_force() const {
    Vec3 f;
    for (std::size_t i = 0; i < count; ++i) f += force[i];
    return f;
  }
  Vec3 on(std::size_t point) const {
    Vec3 f;
    for (std::size_t i = 0; i < count; ++i)
      if (index[i] == point) f += force[i];
    return f;
  }
  Vec3 net_torque(const Body& body) const {
    Vec3 t;
    for (std::size_t i = 0; i < count; ++i) t += cross(body.points[index[i]].position, force[i]);
    return t;
  }
};

namespace detail {

struct AngleGradient {
  double value = 0.0;
  Vec3 d_axis;
  Vec3 d_reference;
  Vec3 d_lever;
  bool valid = false;
};

// Signed angle of `lever` about `axis`, measured from `reference`, both
// projected onto the plane normal to the axis. Positive turns toward
// axis x reference.
inline AngleGradient hinge_angle(const Vec3& axis, const Vec3& reference, const Vec3& lever) {
  AngleGradient g;
  const double a2 = dot(axis, axis);
  if (!(a2 > 0.0)) return g;
  const double a = std::sqrt(a2);
  const Vec3 n = axis / a;
  const Vec3 rxw = cross(reference, lever);
  const double y = dot(n, rxw);
  const double p = dot(reference, n);
  const double q = dot(lever, n);
  const double x = dot(reference, lever) - p * q;
  const double h = x * x + y * y;
  const double scale = dot(reference, reference) * dot(lever, lever);
  if (!(h > 1e-24 * scale) || !(scale > 0.0)) return g;
  g.value = std::atan2(y, x);

  const Vec3 dy_axis = (rxw - n * y) / a;
  const Vec3 dy_ref = cross(lever, n);
  const Vec3 dy_lever = cross(n, reference);
  const Vec3 dx_axis = (n * (2.0 * p * q) - reference * q - lever * p) / a;
  const Vec3 dx_ref = lever - n * q;
  const Vec3 dx_lever = reference - n * p;
  g.d_axis = (dy_axis * x - dx_axis * y) / h;
  g.d_reference = (dy_ref * x - dx_ref * y) / h;
  g.d_lever = (dy_lever * x - dx_lever * y) / h;
  g.valid = true;
  return g;
}

// Angle of `lever` out of the plane normal to `axis`, positive toward the axis.
inline AngleGradient elevation_angle(const Vec3& axis, const Vec3& lever) {
  AngleGradient g;
  const double a = norm(axis);
  const double r = norm(lever);
  if (!(a > 0.0) || !(r > 0.0)) return g;
  const Vec3 n = axis / a;
  const Vec3 u = lever / r;
  const double s = std::clamp(dot(n, u), -1.0, 1.0);
  const double c = std::sqrt(std::max(0.0, 1.0 - s * s));
  g.value = std::asin(s);
  if (!(c > 1e-9)) return g;
  g.d_lever = (n - u * s) / (r * c);
  g.d_axis = (u - n * s) / (a * c);
  g.valid = true;
  return g;
}

}  // namespace detail

inline constexpr double kMinLever = 1e-6;

// Yaw joints (thigh, anchored at the lateral point) swing in the plane normal
// to the segment's bottom-to-top axis, measured from the outward lateral
// direction, positive toward the tail. Roll joints (foot, anchored at the
// knee) swing about the axis normal to both the thigh and the downward
// direction, measured from the thigh, positive downward.
inline HingeJacobian hinge_jacobian(const Link& joint, const Body& body) {
  HingeJacobian jac;
  const auto& seg = body.segments[static_cast<std::size_t>(joint.segment)];
  const auto pos = [&](std::size_t i) { return body.points[i].position; };
  const Vec3 lever = pos(joint.b) - pos(joint.a);
  jac.lever = norm(lever);
  if (!(jac.lever > kMinLever)) return jac;
  const double s = side_sign(joint.side);

  if (joint.axis == HingeAxis::Yaw) {
    const Vec3 axis = (pos(seg.top) - pos(seg.bottom)) * -s;
    const Vec3 reference = (pos(seg.right) - pos(seg.left)) * s;
    const auto ang = detail::hinge_angle(axis, reference, lever);
    const auto elev = detail::elevation_angle(axis, lever);
    if (!ang.valid || !elev.valid) return jac;
    jac.angle = ang.value;
    jac.elevation = elev.value;
    jac.add(seg.top, ang.d_axis * -s, elev.d_axis * -s);
    jac.add(seg.bottom, ang.d_axis * s, elev.d_axis * s);
    jac.add(seg.right, ang.d_reference * s, {});
    jac.add(seg.left, ang.d_reference * -s, {});
    jac.add(joint.b, ang.d_lever, elev.d_lever);
    jac.add(joint.a, -ang.d_lever, -elev.d_lever);
  } else {
    const Vec3 thigh = pos(joint.a) - pos(joint.reference);
    const Vec3 down = pos(seg.bottom) - pos(seg.top);
    const Vec3 axis = cross(thigh, down);
    const auto ang = detail::hinge_angle(axis, thigh, lever);
    const auto elev = detail::elevation_angle(axis, lever);
    if (!ang.valid || !elev.valid) return jac;
    jac.angle = ang.value;
    jac.elevation = elev.value;
    // axis = thigh x down: d(axis) = d(thigh) x down + thigh x d(down).
    const Vec3 a_thigh = ang.d_reference + cross(down, ang.d_axis);
    const Vec3 e_thigh = cross(down, elev.d_axis);
    const Vec3 a_down = cross(ang.d_axis, thigh);
    const Vec3 e_down = cross(elev.d_axis, thigh);
    jac.add(joint.b, ang.d_lever, elev.d_lever);
    jac.add(joint.a, a_thigh - ang.d_lever, e_thigh - elev.d_lever);
    jac.add(joint.reference, -a_thigh, -e_thigh);
    jac.add(seg.bottom, a_down, e_down);
    jac.add(seg.top, -a_down, -e_down);
  }
  jac.valid = true;
  return jac;
}

// PD forces of one rotational joint: the torque
// tau = k_rot (target - angle) - d_rot * rate is applied through the
// derivative of the angle, which gives the distal point a force of tau / r
// and balances it over the points that define the hinge. With
// include_damping = false only the stiffness part is returned.
inline RotationalForceSet rotational_pd_force(const Link& joint, const HingeJacobian& jac, const Body& body,
                                              bool include_damping = true) {
  RotationalForceSet set;
  if (!jac.valid) {
    set.skipped = true;
    return set;
  }
  double angle_rate = 0.0;
  double elev_rate = 0.0;
  for (std::size_t i = 0; i < jac.count; ++i) {
    const Vec3& v = body.points[jac.index[i]].velocity;
    angle_rate += dot(jac.d_angle[i], v);
    elev_rate += dot(jac.d_elevation[i], v);
  }
  const double d = include_damping ? joint.d_rot : 0.0;
  const double tau_angle = joint.k_rot * wrap_angle(joint.target_angle - jac.angle) - d * angle_rate;
  const double tau_elev = joint.k_rot * (joint.target_elevation - jac.elevation) - d * elev_rate;
  set.angle = jac.angle;
  set.elevation = jac.elevation;
  set.angle_rate = angle_rate;
  set.count = jac.count;
  for (std::size_t i = 0; i < jac.count; ++i) {
    set.index[i] = jac.index[i];
    set.force[i] = jac.d_angle[i] * tau_angle + jac.d_elevation[i] * tau_elev;
  }
  return set;
}

inline RotationalForceSet rotational_pd_force(const Link& joint, const Body& body,
                                              PhysicsDiagnostics* diag = nullptr) {
  const HingeJacobian jac = hinge_jacobian(joint, body);
  if (!jac.valid && diag) ++diag->singular_joints;
  return rotational_pd_force(joint, jac, body);
}

struct ContactForce {
  Vec3 normal;    // unit outward surface normal
  Vec3 force;     // normal + friction
  double normal_magnitude = 0.0;
  double friction_magnitude = 0.0;
  bool touching = false;
  Vec3 anchor;            // updated tangential spring anchor
  bool anchored = false;  // false: the point keeps no anchor
};

// Signed distance to the contact surface (negative inside) and the outward
// normal of the nearest face.
struct SurfaceSample {
  double signed_distance = 1.0;
  Vec3 normal{0.0, 1.0, 0.0};
};

inline SurfaceSample sample_surface(const WorldGeometry& g, const Vec3& p) {
  if (g.kind == WorldKind::Plane) return {p.y, {0.0, 1.0, 0.0}};
  const Vec3 axis = g.pole_axis();
  const Vec3 up = g.pole_up();
  const Vec3 side{0.0, 0.0, 1.0};
  const double h = g.pole_half_width;
  const double half_len = 0.5 * g.pole_length;
  const Vec3 rel = p - g.pole_center_point() - axis * (g.pole_start + half_len);
  const double lu = dot(rel, axis);
  const double lv = dot(rel, up);
  const double ls = dot(rel, side);
  const double qu = std::abs(lu) - half_len;
  const double qv = std::abs(lv) - h;
  const double qs = std::abs(ls) - h;
  if (qu > 0.0 || qv > 0.0 || qs > 0.0) return {std::max({qu, qv, qs}), up};
  if (qv >= qs && qv >= qu) return {qv, up * (lv >= 0.0 ? 1.0 : -1.0)};
  if (qs >= qu) return {qs, side * (ls >= 0.0 ? 1.0 : -1.0)};
  return {qu, axis * (lu >= 0.0 ? 1.0 : -1.0)};
}

// Penalty contact with stick-slip friction. While touching, a point is held
// to its anchor by a tangential spring (k_tangent) and damper (d_tangent);
// when that force would leave the Coulomb cone it is clamped and the anchor
// is dragged along. k_tangent = 0 leaves only the clamped viscous term.
// dt > 0 evaluates the damping terms linearly implicitly over a substep of
// that length (for a point of the given mass); dt = 0 gives the plain
// explicit forces.
inline ContactForce resolve_contact(const MassPoint& p, const WorldGeometry& g, double dt = 0.0) {
  ContactForce c;
  const SurfaceSample s = sample_surface(g, p.position);
  c.normal = s.normal;
  if (!(s.signed_distance < 0.0)) return c;
  c.touching = true;
  const double v_n = dot(p.velocity, s.normal);
  const double damp_n = 1.0 + dt * g.d_contact / p.mass;
  c.normal_magnitude = std::max(0.0, (-g.k_contact * s.signed_distance - g.d_contact * v_n) / damp_n);

  const double limit = g.friction_mu * c.normal_magnitude;
  const Vec3 v_t = p.velocity - s.normal * v_n;
  Vec3 friction = v_t * (-g.d_tangent / (1.0 + dt * g.d_tangent / p.mass));
  Vec3 offset;
  if (g.k_tangent > 0.0) {
    if (p.anchored) offset = p.position - p.anchor;
    offset -= s.normal * dot(offset, s.normal);
    friction -= offset * g.k_tangent;
    c.anchored = true;
  }
  const double magnitude = norm(friction);
  if (magnitude > limit) {
    friction *= limit / magnitude;
    const double stretch = norm(offset);
    if (stretch > 0.0) offset *= std::min(1.0, limit / (g.k_tangent * stretch));
  }
  c.anchor = p.position - offset;
  c.friction_magnitude = std::min(magnitude, limit);
  c.force = s.normal * c.normal_magnitude + friction;
  return c;
}

inline std::vector<ContactForce> resolve_contacts(const Body& body, const WorldGeometry& g, double dt = 0.0) {
  std::vector<ContactForce> out;
  out.reserve(body.points.size());
  for (const auto& p : body.points) out.push_back(resolve_contact(p, g, dt));
  return out;
}

inline double link_length(const Body& body, const Link& link) {
  return norm(body.points[link.a].position - body.points[link.b].position);
}

// Kinetic energy plus linear and rotational spring energy, optionally plus
// gravitational potential energy.
inline double mechanical_energy(const Body& body, const WorldGeometry& g, bool include_gravity) {
  double e = 0.0;
  for (const auto& p : body.points) {
    e += 0.5 * p.mass * dot(p.velocity, p.velocity);
    if (include_gravity) e -= p.mass * g.gravity * p.position.y;
  }
  for (const auto& l : body.links) {
    if (l.is_linear()) {
      const double stretch = link_length(body, l) - l.rest_length;
      e += 0.5 * l.k_lin * stretch * stretch;
      continue;
    }
    const HingeJacobian jac = hinge_jacobian(l, body);
    if (!jac.valid) continue;
    const double da = wrap_angle(l.target_angle - jac.angle);
    const double de = l.target_elevation - jac.elevation;
    e += 0.5 * l.k_rot * (da * da + de * de);
  }
  return e;
}

// Largest substep for which the explicit stiffness terms stay inside the
// semi-implicit Euler stability region, from a Gershgorin bound on the
// mass-weighted stiffness of every point. Damping is integrated implicitly
// and does not constrain the step.
inline double stable_timestep_bound(const Body& body) {
  std::vector<double> load(body.points.size(), 0.0);
  auto add = [&](std::size_t i, std::size_t j, double k) {
    const double s = k * (1.0 / body.points[i].mass + 1.0 / body.points[j].mass);
    load[i] += s;
    load[j] += s;
  };
  for (const auto& l : body.links) {
    if (l.is_linear()) {
      add(l.a, l.b, l.k_lin);
      continue;
    }
    const HingeJacobian jac = hinge_jacobian(l, body);
    if (!jac.valid) continue;
    for (const auto* grad : {&jac.d_angle, &jac.d_elevation}) {
      double total = 0.0;
      for (std::size_t j = 0; j < jac.count; ++j) total += norm((*grad)[j]);
      for (std::size_t i = 0; i < jac.count; ++i)
        load[jac.index[i]] += l.k_rot * norm((*grad)[i]) * total / body.points[jac.index[i]].mass;
    }
  }
  const double lambda = *std::max_element(load.begin(), load.end());
  return lambda > 0.0 ? 2.0 / std::sqrt(lambda) : std::numeric_limits<double>::infinity();
}

struct StepOptions {
  bool gravity = true;
  bool contact = true;
};

// Scratch buffers reused across substeps on the calling thread.
struct StepWorkspace {
  std::vector<HingeJacobian> hinges;
  std::vector<const Link*> hinge_links;
  std::vector<Vec3> impulse;
  std::vector<double> degree;
};

inline StepWorkspace& step_workspace() {
  thread_local StepWorkspace ws;
  return ws;
}

// Advances one semi-implicit Euler substep:
//   1. accumulate elastic link forces, rotational joint stiffness and gravity;
//   2. v += F/m dt;
//   3. linear and rotational dampers as implicit impulses. Each point's mass
//      is split evenly among the damped rows that touch it, every row is
//      solved exactly on its share, and the impulses are applied together.
//      This is unconditionally stable, conserves momentum, never adds
//      kinetic energy and does not depend on link order;
//   4. penalty contact with implicit damping and cone-clamped friction;
//   5. x += v dt.
// Throws NumericalBlowUp if any point leaves the finite range.
inline void step_physics(Body& body, const WorldGeometry& g, const SimConfig& cfg, std::size_t step_index = 0,
                         StepOptions opts = {}) {
  const double dt = cfg.physics_dt;
  auto& pts = body.points;
  auto& ws = step_workspace();

  for (auto& p : pts) {
    p.force = opts.gravity ? Vec3{0.0, g.gravity * p.mass, 0.0} : Vec3{};
    p.contact_normal_force = 0.0;
  }

  for (const auto& l : body.links) {
    if (!l.is_linear() || l.k_lin == 0.0) continue;
    const Vec3 delta = pts[l.a].position - pts[l.b].position;
    const double len = norm(delta);
    if (!(len > 1e-12)) {
      ++body.diagnostics.degenerate_links;
      continue;
    }
    const Vec3 f = delta * (-l.k_lin * (len - l.rest_length) / len);
    pts[l.a].force += f;
    pts[l.b].force -= f;
  }

  ws.hinges.clear();
  ws.hinge_links.clear();
  for (const auto& l : body.links) {
    if (l.is_linear()) continue;
    HingeJacobian jac = hinge_jacobian(l, body);
    if (!jac.valid) {
      ++body.diagnostics.singular_joints;
      continue;
    }
    const auto set = rotational_pd_force(l, jac, body, false);
    for (std::size_t i = 0; i < set.count; ++i) pts[set.index[i]].force += set.force[i];
    if (l.d_rot != 0.0) {
      ws.hinges.push_back(jac);
      ws.hinge_links.push_back(&l);
    }
  }

  for (auto& p : pts) p.velocity += p.force * (dt / p.mass);

  ws.degree.assign(pts.size(), 0.0);
  ws.impulse.assign(pts.size(), Vec3{});
  for (const auto& l : body.links) {
    if (!l.is_linear() || l.d_lin == 0.0) continue;
    ws.degree[l.a] += 1.0;
    ws.degree[l.b] += 1.0;
  }
  for (const auto& jac : ws.hinges)
    for (std::size_t i = 0; i < jac.count; ++i) ws.degree[jac.index[i]] += 2.0;

  for (const auto& l : body.links) {
    if (!l.is_linear() || l.d_lin == 0.0) continue;
    const auto& pa = pts[l.a];
    const auto& pb = pts[l.b];
    const Vec3 delta = pa.position - pb.position;
    const double len = norm(delta);
    if (!(len > 1e-12)) continue;
    const Vec3 axis = delta / len;
    const double ma = pa.mass / ws.degree[l.a];
    const double mb = pb.mass / ws.degree[l.b];
    const double reduced = ma * mb / (ma + mb);
    const double c = dt * l.d_lin / reduced;
    const double v_rel = dot(pa.velocity - pb.velocity, axis);
    const Vec3 j = axis * (-reduced * v_rel * c / (1.0 + c));
    ws.impulse[l.a] += j;
    ws.impulse[l.b] -= j;
  }

  for (std::size_t h = 0; h < ws.hinges.size(); ++h) {
    const auto& jac = ws.hinges[h];
    const double d = ws.hinge_links[h]->d_rot;
    for (const auto* grad : {&jac.d_angle, &jac.d_elevation}) {
      double rate = 0.0;
      double inv_mass = 0.0;
      for (std::size_t i = 0; i < jac.count; ++i) {
        const std::size_t k = jac.index[i];
        rate += dot((*grad)[i], pts[k].velocity);
        inv_mass += norm_squared((*grad)[i]) * ws.degree[k] / pts[k].mass;
      }
      if (!(inv_mass > 0.0)) continue;
      const double lambda = d * dt * rate / (1.0 + d * dt * inv_mass);
      for (std::size_t i = 0; i < jac.count; ++i) ws.impulse[jac.index[i]] -= (*grad)[i] * lambda;
    }
  }
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i].velocity += ws.impulse[i] / pts[i].mass;

  if (opts.contact) {
    for (auto& p : pts) {
      const ContactForce c = resolve_contact(p, g, dt);
      p.anchored = c.anchored;
      p.anchor = c.anchor;
      if (!c.touching) continue;
      p.contact_normal_force = c.normal_magnitude;
      p.force += c.force;
      p.velocity += c.force * (dt / p.mass);
    }
  }

  for (auto& p : pts) {
    p.position += p.velocity * dt;
    if (!is_finite(p.position) || !is_finite(p.velocity)) throw NumericalBlowUp(step_index);
  }
}

}  // namespace centipede
