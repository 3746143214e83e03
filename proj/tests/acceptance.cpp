// Acceptance suite: prints one PASS/FAIL line per criterion.
//
//   acceptance [--only N] [--trials7 K] [--seeds6 K] [--verbose]
//
// Exit status is non-zero when any required criterion fails. The
// mode-diversity criterion (7) is best-effort: its outcome is printed but a
// miss is reported as a calibration gap rather than a failure of the suite.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "centipede/centipede.hpp"

using namespace centipede;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool g_verbose = false;

void note(const std::string& s) {
  if (g_verbose) std::printf("    %s\n", s.c_str());
}

// ---------------------------------------------------------------------------
// Independent scalar references

double ref_tanh(double x) {
  const double e = std::exp(-2.0 * std::abs(x));
  return std::copysign((1.0 - e) / (1.0 + e), x);
}

double ref_wrap_2pi(double x) {
  double r = x - 2.0 * pi * std::floor(x / (2.0 * pi));
  if (r >= 2.0 * pi) r -= 2.0 * pi;
  return r;
}

// Signed difference in (-pi, pi] by remainder.
double ref_diff(double a, double b) {
  double r = std::remainder(a - b, 2.0 * pi);
  if (r <= -pi) r += 2.0 * pi;
  return r;
}

// Shortest distance between two angles on the circle.
double circle_gap(double a, double b) { return std::abs(ref_diff(a, b)); }

double ref_norm(double x, double y, double z) { return std::sqrt(x * x + y * y + z * z); }

// Angle between two vectors in degrees, by the half-angle chord formula.
double ref_angle_deg(const Vec3& a, const Vec3& b) {
  const double na = ref_norm(a.x, a.y, a.z);
  const double nb = ref_norm(b.x, b.y, b.z);
  const Vec3 ua{a.x / na, a.y / na, a.z / na};
  const Vec3 ub{b.x / nb, b.y / nb, b.z / nb};
  const double minus = ref_norm(ua.x - ub.x, ua.y - ub.y, ua.z - ub.z);
  const double plus = ref_norm(ua.x + ub.x, ua.y + ub.y, ua.z + ub.z);
  return 2.0 * std::atan2(minus, plus) * 180.0 / pi;
}

// ---------------------------------------------------------------------------
// 1. Equation oracles

Outcome criterion_equations() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };

  for (int k = 0; k < 1000; ++k) {
    ControllerParams p;
    p.beta = 3.0 * u(rng);
    p.gamma = 0.02 * u(rng);
    const double n = 400.0 * u(rng);
    const double expected = std::max(p.natural_length - p.beta * ref_tanh(p.gamma * n), 0.1 * p.natural_length);
    track(body_controller_target(n, p), expected);

    const double lr = 0.3 + u(rng);
    const double rr = 0.3 + u(rng);
    const double lf = 0.3 + u(rng);
    const double rf = 0.3 + u(rng);
    const NeighborLengths nl{lr, rr, lf, rf};
    track(angle_detector(nl), (rr + rf) - (lf + lr));
    track(contraction_detector(nl), (lf + rf) - (lr + rr));

    const double theta = 2.0 * pi * u(rng);
    const double ad = 2.0 * u(rng) - 1.0;
    const double cd = 2.0 * u(rng) - 1.0;
    for (Variant v : {Variant::A, Variant::C, Variant::AC}) {
      p.variant = v;
      for (Side s : kSides) {
        const double sign = s == Side::Right ? 1.0 : -1.0;
        double rate = 0.02 * pi;
        if (v != Variant::C) rate += sign * 0.09 * ad * std::cos(theta);
        if (v != Variant::A) rate -= 0.076 * cd * std::cos(theta + 0.5 * pi);
        const double next = leg_phase_step(theta, s, ad, cd, p);
        worst = std::max(worst, circle_gap(next, ref_wrap_2pi(theta + rate)));
        if (!(next >= 0.0 && next < 2.0 * pi)) worst = 1.0;
      }
    }
    track(leg_target_angle(theta, p), (20.0 * pi / 180.0) * std::cos(theta));
    track(foot_target_angle(theta, p), (20.0 * pi / 180.0) * std::sin(theta));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-12 && secs < 1.0, fmt("max |error| %.2e over 1000 inputs, %.3f s", worst, secs)};
}

// ---------------------------------------------------------------------------
// 2. Metric oracles

Outcome criterion_metrics() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> turns(-3, 3);
  double worst = 0.0;
  auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
  const double special[] = {pi, -pi, 0.0, 2.0 * pi, pi - 1e-12, -pi + 1e-12};

  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 12;
    std::vector<std::array<double, 2>> phases(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double base = 2.0 * pi * u(rng);
      phases[i] = {base + 2.0 * pi * turns(rng), base + 2.0 * pi * u(rng) + 2.0 * pi * turns(rng)};
    }
    // Wrap cases: differences landing on +-pi and whole turns.
    if (k % 4 == 0) phases[3] = {phases[2][0] + special[k % 6] + 2.0 * pi, phases[2][1] - pi};
    std::vector<Vec3> spine(n + 1);
    Vec3 p{0, 0, 0};
    for (std::size_t i = 0; i <= n; ++i) {
      spine[i] = p;
      p += Vec3{0.2 + u(rng), u(rng) - 0.5, u(rng) - 0.5};
    }

    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double ipd = 0.5 * (ref_diff(phases[i][0], phases[i + 1][0]) + ref_diff(phases[i][1], phases[i + 1][1]));
      const double got = ipsilateral_phase_difference(phases[i], phases[i + 1]);
      // The two per-side terms may each sit on the +-pi seam.
      worst = std::max(worst, std::min(std::abs(got - ipd), std::abs(std::abs(got - ipd) - pi)));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double cpd = contralateral_phase_difference(phases[i][0], phases[i][1]);
      worst = std::max(worst, circle_gap(cpd, ref_diff(phases[i][0], phases[i][1])));
      if (!(cpd > -pi - 1e-15 && cpd <= pi)) worst = 1.0;
      const Vec3 d = spine[i + 1] - spine[i];
      track(segment_length(spine[i + 1], spine[i]), ref_norm(d.x, d.y, d.z));
    }
    for (std::size_t i = 1; i < n; ++i) {
      const auto got = undulation(spine[i], spine[i - 1], spine[i + 1], spine[i]);
      track(*got, ref_angle_deg(spine[i] - spine[i - 1], spine[i + 1] - spine[i]));
    }
    const Vec3 a = spine.front();
    const Vec3 b = spine.back();
    track(distance_moved(a, b), ref_norm(b.x - a.x, b.y - a.y, b.z - a.z));
    const Vec3 axis = normalized(Vec3{u(rng), u(rng), u(rng)});
    track(distance_along(a, b, axis), (b.x - a.x) * axis.x + (b.y - a.y) * axis.y + (b.z - a.z) * axis.z);

    // Frame aggregates against direct sums.
    const FrameStats f = frame_stats(FrameInput{phases, spine, spine.back()});
    double s = 0.0;
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += std::sin(phases[i][0] - phases[i][1]);
      c += std::cos(phases[i][0] - phases[i][1]);
    }
    worst = std::max(worst, circle_gap(f.mean_cpd, std::atan2(s, c)));
    const double r = std::hypot(s, c) / static_cast<double>(n);
    track(f.std_cpd, r >= 1.0 ? 0.0 : std::sqrt(-2.0 * std::log(r)));
    double bl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 d = spine[i + 1] - spine[i];
      bl += ref_norm(d.x, d.y, d.z);
    }
    track(f.mean_bl, bl / static_cast<double>(n));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-9 && secs < 1.0, fmt("max |error| %.2e over 1000 states, %.3f s", worst, secs)};
}

// ---------------------------------------------------------------------------
// 3. Classifier fixtures

Outcome criterion_classifier() {
  const auto t0 = Clock::now();
  const ClassifierThresholds t;
  const double e = 1e-6;
  struct Fixture {
    GaitSummary s;
    PatternLabel expected;
  };
  auto summary = [](double mean_cpd, double std_cpd, double std_bl, double mean_ipd, double std_ipd, double und) {
    GaitSummary s;
    s.mean_cpd = mean_cpd;
    s.std_cpd = std_cpd;
    s.std_bl = std_bl;
    s.mean_ipd = mean_ipd;
    s.std_ipd = std_ipd;
    s.mean_undulation = und;
    return s;
  };
  using L = PatternLabel;
  const std::vector<Fixture> fixtures{
      {summary(0.1, 0.2, 0.01, 0.0, 0.0, 0.0), L::InPhase},
      {summary(0.1, 0.2, 0.05, 0.0, 0.0, 0.0), L::Peristaltic},
      {summary(2.5, 0.2, 0.0, 0.5, 0.3, 1.0), L::DirectLow},
      {summary(2.5, 0.2, 0.0, 0.5, 0.3, 3.0), L::DirectHigh},
      {summary(2.5, 0.2, 0.0, -0.5, 0.3, 1.0), L::RetroLow},
      {summary(2.5, 0.2, 0.0, -0.5, 0.3, 3.0), L::RetroHigh},
      {summary(0.0, 1.5, 0.0, 0.0, 1.2, 0.0), L::Unconverged},
      {summary(3.0, 0.1, 0.0, 0.2, 2.0, 5.0), L::Unconverged},
      // |mean CPD| around 0.6
      {summary(0.6 - e, 0.2, 0.0, 0.5, 0.3, 3.0), L::InPhase},
      {summary(-0.6 + e, 0.2, 0.0, 0.5, 0.3, 3.0), L::InPhase},
      {summary(0.6 + e, 0.2, 0.0, 0.5, 0.3, 3.0), L::DirectHigh},
      {summary(-0.6 - e, 0.2, 0.0, -0.5, 0.3, 1.0), L::RetroLow},
      // std CPD around 0.7
      {summary(0.1, 0.7 - e, 0.05, 0.5, 0.3, 3.0), L::Peristaltic},
      {summary(0.1, 0.7 + e, 0.05, 0.5, 0.3, 3.0), L::DirectHigh},
      {summary(0.1, 0.7 + e, 0.05, 0.5, 0.9, 3.0), L::Unconverged},
      // std BL around 0.02
      {summary(0.0, 0.0, 0.02 - e, 0.0, 0.0, 0.0), L::InPhase},
      {summary(0.0, 0.0, 0.02 + e, 0.0, 0.0, 0.0), L::Peristaltic},
      // std IPD around 0.7
      {summary(2.0, 0.1, 0.0, 0.5, 0.7 - e, 1.0), L::DirectLow},
      {summary(2.0, 0.1, 0.0, 0.5, 0.7 + e, 1.0), L::Unconverged},
      {summary(2.0, 0.1, 0.0, -0.5, 0.7 - e, 3.0), L::RetroHigh},
      {summary(2.0, 0.1, 0.0, -0.5, 0.7 + e, 3.0), L::Unconverged},
      // undulation around 2 degrees
      {summary(2.0, 0.1, 0.0, 0.5, 0.3, 2.0 - e), L::DirectLow},
      {summary(2.0, 0.1, 0.0, 0.5, 0.3, 2.0 + e), L::DirectHigh},
      {summary(2.0, 0.1, 0.0, -0.5, 0.3, 2.0 - e), L::RetroLow},
      {summary(2.0, 0.1, 0.0, -0.5, 0.3, 2.0 + e), L::RetroHigh},
      // wave direction around 0
      {summary(2.0, 0.1, 0.0, e, 0.3, 1.0), L::DirectLow},
      {summary(2.0, 0.1, 0.0, -e, 0.3, 1.0), L::RetroLow},
  };
  int correct = 0;
  for (const auto& f : fixtures) {
    const L got = classify(f.s, t);
    if (got == f.expected)
      ++correct;
    else
      note("fixture expected " + to_string(f.expected) + " got " + to_string(got));
  }

  // Synthetic trajectories realizing each pattern, classified end to end.
  struct Synthetic {
    double ipd;          // rear minus front phase offset
    double cpd;          // left minus right
    double bend_deg;     // alternating spine bend
    double stretch;      // segment length oscillation amplitude
    PatternLabel expected;
  };
  const std::vector<Synthetic> patterns{
      {0.0, 0.0, 0.0, 0.0, L::InPhase},    {0.3, 0.0, 0.0, 0.1, L::Peristaltic}, {0.8, pi, 0.5, 0.0, L::DirectLow},
      {0.8, pi, 6.0, 0.0, L::DirectHigh},  {-0.8, pi, 0.5, 0.0, L::RetroLow},   {-0.8, pi, 6.0, 0.0, L::RetroHigh},
  };
  const std::size_t n = 12;
  int synthetic_correct = 0;
  for (const auto& pat : patterns) {
    std::vector<FrameStats> frames;
    for (std::size_t step = 0; step < t.window; ++step) {
      const double w = 0.02 * pi * static_cast<double>(step);
      std::vector<std::array<double, 2>> phases(n);
      std::vector<Vec3> spine(n + 1);
      Vec3 p;
      double heading = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double left = w - pat.ipd * static_cast<double>(i);
        phases[i] = {left, left - pat.cpd};
        spine[i] = p;
        heading += ((i % 2 == 0) ? 1.0 : -1.0) * pat.bend_deg * pi / 180.0;
        const double len = 1.0 + pat.stretch * std::sin(w - 0.7 * static_cast<double>(i));
        p += Vec3{std::cos(heading), 0.0, std::sin(heading)} * len;
      }
      spine[n] = p;
      frames.push_back(frame_stats(FrameInput{phases, spine, p}));
    }
    const L got = classify(aggregate(frames, t), t);
    if (got == pat.expected)
      ++synthetic_correct;
    else
      note("synthetic expected " + to_string(pat.expected) + " got " + to_string(got));
  }
  const double secs = seconds_since(t0);
  const bool pass = correct == static_cast<int>(fixtures.size()) &&
                    synthetic_correct == static_cast<int>(patterns.size()) && secs < 1.0;
  return {pass, fmt("%d/%zu fixtures, %d/%zu synthetic trajectories, %.3f s", correct, fixtures.size(),
                    synthetic_correct, patterns.size(), secs)};
}

// ---------------------------------------------------------------------------
// 4. Physics laws

MorphologyParams law_morphology(int segments) {
  MorphologyParams m;
  m.segment_count = segments;
  m.default_leg_length = 1.5;
  return m;
}

Outcome criterion_physics() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  WorldGeometry world;
  SimConfig sim;

  // (i) momentum under internal forces only
  Body body = build_centipede(law_morphology(12));
  for (auto& p : body.points) {
    p.position += Vec3{u(rng), u(rng), u(rng)} * 0.05;
    p.velocity = Vec3{u(rng), u(rng), u(rng)} * 0.5;
  }
  for (auto& l : body.links) {
    if (l.kind == LinkKind::ActiveLinear) l.rest_length *= 0.8;
    if (!l.is_linear()) l.target_angle += 0.3 * u(rng);
  }
  const Vec3 p0 = total_momentum(body);
  double scale = 0.0;
  for (const auto& p : body.points) scale += p.mass * norm(p.velocity);
  for (int i = 0; i < 10000; ++i) step_physics(body, world, sim, static_cast<std::size_t>(i), {false, false});
  const double drift = norm(total_momentum(body) - p0) / scale;

  // (ii) damped passive energy
  Body passive = build_centipede(law_morphology(12));
  std::normal_distribution<double> nd(0.0, 0.3);
  for (auto& p : passive.points) p.velocity = {nd(rng), nd(rng), nd(rng)};
  double prev = mechanical_energy(passive, world, true);
  double rise = -1e300;
  for (int i = 0; i < 10000; ++i) {
    step_physics(passive, world, sim, static_cast<std::size_t>(i), {true, false});
    const double e = mechanical_energy(passive, world, true);
    rise = std::max(rise, e - prev);
    prev = e;
  }

  // (iii) ballistic drop of the centre of mass at dt = 0.001
  Body falling = build_centipede(law_morphology(3));
  SimConfig coarse;
  coarse.physics_dt = 0.001;
  auto com_y = [](const Body& b) {
    double y = 0.0;
    for (const auto& p : b.points) y += p.mass * p.position.y;
    return y / b.total_mass();
  };
  const double y0 = com_y(falling);
  for (int i = 0; i < 1000; ++i) step_physics(falling, world, coarse, static_cast<std::size_t>(i), {true, false});
  const double analytic = 0.5 * world.gravity;
  const double drop_error = std::abs((com_y(falling) - y0) - analytic) / std::abs(analytic);

  // (iv) rotational PD force sets carry no net force
  double net = 0.0;
  for (int k = 0; k < 200; ++k) {
    Body b = build_centipede(law_morphology(3));
    for (auto& p : b.points) {
      p.position += Vec3{u(rng), u(rng), u(rng)} * 0.1;
      p.velocity = Vec3{u(rng), u(rng), u(rng)};
    }
    for (auto& l : b.links) {
      if (l.is_linear()) continue;
      l.target_angle += 0.5 * u(rng);
      const auto set = rotational_pd_force(l, b);
      double mag = 1.0;
      for (std::size_t i = 0; i < set.count; ++i) mag = std::max(mag, norm(set.force[i]));
      net = std::max(net, norm(set.net_force()) / mag);
    }
  }

  const double secs = seconds_since(t0);
  const bool pass = drift < 1e-8 && rise <= 1e-9 && drop_error < 0.01 && net < 1e-13 && secs < 10.0;
  return {pass, fmt("momentum drift %.1e, max energy rise %.1e, drop error %.2f%%, PD net force %.1e, %.2f s", drift,
                    rise, 100.0 * drop_error, net, secs)};
}

// ---------------------------------------------------------------------------
// 5. Determinism

TrialConfig baseline_config(std::uint64_t seed) {
  return make_trial_config(1, {1.5, 1.5}, Variant::A, seed);
}

std::string run_to_trace_file(const TrialConfig& cfg, const fs::path& path) {
  {
    std::ofstream out(path, std::ios::binary);
    TraceWriter w(out, TraceHeader{cfg, kToolVersion});
    run_trial(cfg, [&](const TraceRecord& r) { w.write(r); });
    w.finish();
  }
  return read_file(path);
}

Outcome criterion_determinism() {
  const auto t0 = Clock::now();
  TrialConfig cfg = baseline_config(2024);
  cfg.sim.total_control_steps = 1500;
  const fs::path dir = fs::temp_directory_path() / "centipede_acceptance";
  fs::create_directories(dir);
  const std::string a = run_to_trace_file(cfg, dir / "a.jsonl");
  const std::string b = run_to_trace_file(cfg, dir / "b.jsonl");
  fs::remove_all(dir);
  const double secs = seconds_since(t0);
  return {a == b && !a.empty() && secs < 120.0,
          fmt("%zu-byte traces %s, fnv1a64 %s, %.1f s", a.size(), a == b ? "identical" : "DIFFER",
              hex64(fnv1a64(a)).c_str(), secs)};
}

// ---------------------------------------------------------------------------
// 6. Baseline walking

Outcome criterion_baseline(int seeds) {
  const std::uint64_t base = cell_seed(1, Variant::A, 1.5, 1.5);
  int converged = 0;
  int healthy = 0;
  double slowest = 0.0;
  double min_distance = 1e300;
  std::map<std::string, int> labels;
  for (int t = 0; t < seeds; ++t) {
    const TrialConfig cfg = baseline_config(trial_seed(base, t));
    const TrialResult r = run_trial(cfg);
    slowest = std::max(slowest, r.wall_seconds);
    min_distance = std::min(min_distance, r.distance);
    if (!r.failed && r.distance > 2.0 * cfg.morphology.trunk_width) ++healthy;
    if (r.label != PatternLabel::Unconverged) ++converged;
    ++labels[to_string(r.label)];
    note(fmt("seed %d: %s distance %.2f std_ipd %.2f std_cpd %.2f (%.1f s)", t, to_string(r.label).c_str(), r.distance,
             r.summary.std_ipd, r.summary.std_cpd, r.wall_seconds));
  }
  std::string hist;
  for (const auto& [k, v] : labels) hist += (hist.empty() ? "" : ", ") + k + " " + std::to_string(v);
  const bool pass = healthy == seeds && 10 * converged >= 6 * seeds && slowest < 60.0;
  return {pass, fmt("%d/%d converged (%s), %d/%d moved > 2 widths without blow-up (min %.1f), slowest trial %.1f s",
                    converged, seeds, hist.c_str(), healthy, seeds, min_distance, slowest)};
}

// ---------------------------------------------------------------------------
// 7. Mode diversity (best effort)

std::string family_name(PatternFamily f) {
  switch (f) {
    case PatternFamily::InPhase: return "InPhase";
    case PatternFamily::Direct: return "Direct";
    case PatternFamily::Retro: return "Retro";
    case PatternFamily::None: return "none";
  }
  return "?";
}

Outcome criterion_diversity(int trials) {
  const auto t0 = Clock::now();
  SweepGrid walk;
  walk.experiment = 1;
  walk.variant = Variant::A;
  walk.betas = {0.0, 1.5, 3.0};
  walk.axis_values = {1.0, 3.0, 6.0};
  walk.trials = trials;
  SweepOptions opts;
  std::set<PatternFamily> families;
  std::string walk_cells;
  opts.on_cell = [&](const CellSummary& c) {
    const auto fam = family_of(c.majority);
    if (fam != PatternFamily::None) families.insert(fam);
    walk_cells += fmt(" b%.1f/l%.0f:%s", c.beta, c.axis_value, to_string(c.majority).c_str());
  };
  run_sweep(walk, opts);
  note("exp-1 cells:" + walk_cells);

  SweepGrid climb;
  climb.experiment = 3;
  climb.variant = Variant::AC;
  climb.betas = {2.0, 3.0};
  climb.axis_values = {30.0, 60.0};
  climb.trials = trials;
  int inphase_cells = 0;
  std::string climb_cells;
  opts.on_cell = [&](const CellSummary& c) {
    if (family_of(c.majority) == PatternFamily::InPhase) ++inphase_cells;
    climb_cells += fmt(" b%.0f/%.0fdeg:%s(%d fell)", c.beta, c.axis_value, to_string(c.majority).c_str(), c.fell_off);
  };
  run_sweep(climb, opts);
  note("exp-3 cells:" + climb_cells);

  std::string fams;
  for (auto f : families) fams += (fams.empty() ? "" : "+") + family_name(f);
  const bool pass = families.size() >= 2 && inphase_cells >= 1;
  return {pass, fmt("exp-1 converged families {%s}, exp-3 in-phase majority cells %d/4, %d trials per cell, %.0f s",
                    fams.c_str(), inphase_cells, trials, seconds_since(t0))};
}

// ---------------------------------------------------------------------------
// 8. Mixed morphology report

Outcome criterion_mixed() {
  const auto t0 = Clock::now();
  const std::size_t n = 22;
  std::vector<TraceRecord> trace;
  for (std::size_t t = 0; t < 300; ++t) {
    TraceRecord r;
    r.step = t + 1;
    const double w = 0.02 * pi * static_cast<double>(t);
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= n / 2) {
        r.phases.push_back({w + 0.01 * static_cast<double>(i), w + 0.01 * static_cast<double>(i)});
      } else {
        const double wave = w + 1.5 * static_cast<double>(i);
        r.phases.push_back({wave, wave + pi});
      }
    }
    for (std::size_t k = 0; k <= n; ++k) r.spine.push_back({static_cast<double>(k), 0.0, 0.0});
    r.head = r.spine.back();
    trace.push_back(std::move(r));
  }
  const auto report = mixed_morphology_report(trace);
  const auto front = family_of(report.front.label);
  const auto back = family_of(report.back.label);
  const double secs = seconds_since(t0);
  return {front == PatternFamily::InPhase && back == PatternFamily::Retro && secs < 1.0,
          fmt("front %s (CPD %.3f), back %s (IPD %.3f), %.3f s", to_string(report.front.label).c_str(),
              report.front.summary.mean_cpd, to_string(report.back.label).c_str(), report.back.summary.mean_ipd, secs)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  int trials7 = 3;
  int seeds6 = 10;
  app.add_option("--only", only, "Run a single criterion")->check(CLI::Range(1, 8));
  app.add_option("--trials7", trials7, "Trials per cell for the mode-diversity grids")->check(CLI::PositiveNumber);
  app.add_option("--seeds6", seeds6, "Seeds for the baseline walking criterion")->check(CLI::PositiveNumber);
  app.add_flag("--verbose", g_verbose, "Print per-trial details");
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    const char* name;
    bool required;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "equation oracles", true, criterion_equations},
      {2, "metric oracles", true, criterion_metrics},
      {3, "classifier fixtures", true, criterion_classifier},
      {4, "physics laws", true, criterion_physics},
      {5, "determinism", true, criterion_determinism},
      {6, "baseline walking", true, [&] { return criterion_baseline(seeds6); }},
      {7, "mode diversity", false, [&] { return criterion_diversity(trials7); }},
      {8, "mixed morphology report", true, criterion_mixed},
  };

  int required_failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const char* verdict = o.pass ? "PASS" : (c.required ? "FAIL" : "FAIL (calibration gap)");
    std::printf("%s criterion %d (%s): %s\n", verdict, c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass && c.required) ++required_failures;
  }
  return required_failures == 0 ? 0 : 1;
}
