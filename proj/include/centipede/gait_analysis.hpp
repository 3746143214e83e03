#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "centipede/body.hpp"
#include "centipede/physics.hpp"
#include "centipede/vec3.hpp"

namespace centipede {

enum class PatternLabel { InPhase, Peristaltic, DirectLow, DirectHigh, RetroLow, RetroHigh, Unconverged };

inline constexpr std::array<PatternLabel, 7> kAllLabels{
    PatternLabel::InPhase,  PatternLabel::Peristaltic, PatternLabel::DirectLow,  PatternLabel::DirectHigh,
    PatternLabel::RetroLow, PatternLabel::RetroHigh,   PatternLabel::Unconverged};

inline std::string to_string(PatternLabel l) {
  switch (l) {
    case PatternLabel::InPhase: return "InPhase";
    case PatternLabel::Peristaltic: return "Peristaltic";
    case PatternLabel::DirectLow: return "DirectLow";
    case PatternLabel::DirectHigh: return "DirectHigh";
    case PatternLabel::RetroLow: return "RetroLow";
    case PatternLabel::RetroHigh: return "RetroHigh";
    case PatternLabel::Unconverged: return "Unconverged";
  }
  return "Unconverged";
}

inline PatternLabel parse_label(const std::string& s) {
  for (PatternLabel l : kAllLabels)
    if (to_string(l) == s) return l;
  throw std::invalid_argument("unknown pattern label '" + s + "'");
}

enum class PatternFamily { InPhase, Direct, Retro, None };

inline PatternFamily family_of(PatternLabel l) {
  switch (l) {
    case PatternLabel::InPhase:
    case PatternLabel::Peristaltic: return PatternFamily::InPhase;
    case PatternLabel::DirectLow:
    case PatternLabel::DirectHigh: return PatternFamily::Direct;
    case PatternLabel::RetroLow:
    case PatternLabel::RetroHigh: return PatternFamily::Retro;
    case PatternLabel::Unconverged: return PatternFamily::None;
  }
  return PatternFamily::None;
}

// ---------------------------------------------------------------------------
// Per-segment metrics

inline double ipsilateral_phase_difference(const std::array<double, 2>& rear, const std::array<double, 2>& front) {
  double sum = 0.0;
  for (std::size_t s = 0; s < 2; ++s) {
    const double d = rear[s] - front[s];
    sum += std::atan2(std::sin(d), std::cos(d));
  }
  return 0.5 * sum;
}

// Left minus right, in (-pi, pi].
inline double contralateral_phase_difference(double theta_left, double theta_right) {
  const double d = theta_left - theta_right;
  return std::atan2(std::sin(d), std::cos(d));
}

// Angle in degrees between two consecutive segment axes; nullopt when either
// axis has zero length.
inline std::optional<double> undulation(const Vec3& front_prev, const Vec3& back_prev, const Vec3& front,
                                        const Vec3& back) {
  const Vec3 a = front_prev - back_prev;
  const Vec3 b = front - back;
  if (norm_squared(a) == 0.0 || norm_squared(b) == 0.0) return std::nullopt;
  return rad_to_deg(std::abs(std::atan2(norm(cross(a, b)), dot(a, b))));
}

inline double segment_length(const Vec3& front, const Vec3& back) { return norm(front - back); }

inline double distance_moved(const Vec3& head_start, const Vec3& head_end) { return norm(head_end - head_start); }

// Signed progress along a (unit) pole axis.
inline double distance_along(const Vec3& head_start, const Vec3& head_end, const Vec3& axis) {
  return dot(head_end - head_start, axis);
}

// ---------------------------------------------------------------------------
// Statistics

struct CircularStats {
  double mean = 0.0;  // (-pi, pi]
  double std = 0.0;   // sqrt(-2 ln R)
};

inline CircularStats circular_stats(std::span<const double> angles) {
  if (angles.empty()) return {};
  double s = 0.0;
  double c = 0.0;
  for (double a : angles) {
    s += std::sin(a);
    c += std::cos(a);
  }
  const double n = static_cast<double>(angles.size());
  // Floored so that perfectly cancelling angles give a large finite spread.
  const double r = std::max(std::hypot(s, c) / n, 1e-12);
  CircularStats out;
  out.mean = (s == 0.0 && c == 0.0) ? 0.0 : std::atan2(s, c);
  out.std = r >= 1.0 ? 0.0 : std::sqrt(-2.0 * std::log(r));
  return out;
}

struct LinearStats {
  double mean = 0.0;
  double std = 0.0;  // population
};

inline LinearStats linear_stats(std::span<const double> values) {
  if (values.empty()) return {};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

// Segment-level aggregates for one control step.
struct FrameStats {
  double mean_ipd = 0.0;
  double std_ipd = 0.0;
  double mean_cpd = 0.0;
  double std_cpd = 0.0;
  double mean_undulation = 0.0;  // degrees
  double std_undulation = 0.0;
  double mean_bl = 0.0;
  double std_bl = 0.0;
  Vec3 head;
  std::size_t excluded_segments = 0;

  bool operator==(const FrameStats&) const = default;
};

// Phases and spine positions of one control step, restricted to the segment
// range [first, last). spine has one more entry than phases: segment i spans
// spine[i] (back) to spine[i + 1] (front).
struct FrameInput {
  std::span<const std::array<double, 2>> phases;
  std::span<const Vec3> spine;
  Vec3 head;
};

inline FrameStats frame_stats(const FrameInput& in, std::size_t first, std::size_t last) {
  if (in.spine.size() != in.phases.size() + 1) throw std::invalid_argument("spine must have segments + 1 points");
  if (first >= last || last > in.phases.size()) throw std::out_of_range("invalid segment range");

  std::vector<double> ipd;
  std::vector<double> cpd;
  std::vector<double> und;
  std::vector<double> bl;
  FrameStats out;
  for (std::size_t i = first; i < last; ++i) {
    cpd.push_back(contralateral_phase_difference(in.phases[i][0], in.phases[i][1]));
    bl.push_back(segment_length(in.spine[i + 1], in.spine[i]));
    if (i + 1 < last) ipd.push_back(ipsilateral_phase_difference(in.phases[i], in.phases[i + 1]));
    if (i > first) {
      auto u = undulation(in.spine[i], in.spine[i - 1], in.spine[i + 1], in.spine[i]);
      if (u)
        und.push_back(*u);
      else
        ++out.excluded_segments;
    }
  }
  const auto ci = circular_stats(ipd);
  const auto cc = circular_stats(cpd);
  const auto lu = linear_stats(und);
  const auto lb = linear_stats(bl);
  out.mean_ipd = ci.mean;
  out.std_ipd = ci.std;
  out.mean_cpd = cc.mean;
  out.std_cpd = cc.std;
  out.mean_undulation = lu.mean;
  out.std_undulation = lu.std;
  out.mean_bl = lb.mean;
  out.std_bl = lb.std;
  out.head = in.head;
  return out;
}

inline FrameStats frame_stats(const FrameInput& in) { return frame_stats(in, 0, in.phases.size()); }

inline std::vector<Vec3> spine_positions(const Body& body) {
  std::vector<Vec3> spine;
  spine.reserve(body.segment_count() + 1);
  for (const auto& seg : body.segments) spine.push_back(body.points[seg.back].position);
  if (!body.segments.empty()) spine.push_back(body.points[body.segments.back().front].position);
  return spine;
}

// ---------------------------------------------------------------------------
// Classification

struct ClassifierThresholds {
  double cpd_mean_max = 0.6;
  double cpd_std_max = 0.7;
  double bl_std_min = 0.02;
  double ipd_std_max = 0.7;
  double undulation_high = 2.0;  // degrees
  std::size_t window = 200;

  void validate() const {
    if (!(cpd_mean_max > 0 && cpd_std_max > 0 && bl_std_min > 0 && ipd_std_max > 0 && undulation_high > 0 &&
          window > 0))
      throw std::invalid_argument("classifier thresholds must be positive");
  }
};

struct GaitSummary {
  double mean_ipd = 0.0;
  double std_ipd = 0.0;
  double mean_cpd = 0.0;
  double std_cpd = 0.0;
  double mean_undulation = 0.0;
  double std_bl = 0.0;

  bool operator==(const GaitSummary&) const = default;
};

// Time average over the last `window` frames. Circular means are averaged on
// the circle, everything else arithmetically.
inline GaitSummary aggregate(std::span<const FrameStats> history, const ClassifierThresholds& t) {
  if (history.size() < t.window)
    throw std::invalid_argument("history has " + std::to_string(history.size()) + " frames, classification needs " +
                                std::to_string(t.window));
  const auto tail = history.subspan(history.size() - t.window);
  std::vector<double> ipd;
  std::vector<double> cpd;
  ipd.reserve(tail.size());
  cpd.reserve(tail.size());
  GaitSummary s;
  for (const auto& f : tail) {
    ipd.push_back(f.mean_ipd);
    cpd.push_back(f.mean_cpd);
    s.std_ipd += f.std_ipd;
    s.std_cpd += f.std_cpd;
    s.mean_undulation += f.mean_undulation;
    s.std_bl += f.std_bl;
  }
  const double n = static_cast<double>(tail.size());
  s.mean_ipd = circular_stats(ipd).mean;
  s.mean_cpd = circular_stats(cpd).mean;
  s.std_ipd /= n;
  s.std_cpd /= n;
  s.mean_undulation /= n;
  s.std_bl /= n;
  return s;
}

inline PatternLabel classify(const GaitSummary& s, const ClassifierThresholds& t) {
  if (std::abs(s.mean_cpd) < t.cpd_mean_max && s.std_cpd < t.cpd_std_max)
    return s.std_bl > t.bl_std_min ? PatternLabel::Peristaltic : PatternLabel::InPhase;
  if (s.std_ipd < t.ipd_std_max) {
    const bool high = s.mean_undulation > t.undulation_high;
    if (s.mean_ipd > 0.0) return high ? PatternLabel::DirectHigh : PatternLabel::DirectLow;
    return high ? PatternLabel::RetroHigh : PatternLabel::RetroLow;
  }
  return PatternLabel::Unconverged;
}

}  // namespace centipede
