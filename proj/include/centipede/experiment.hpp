#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "centipede/body.hpp"
#include "centipede/controller.hpp"
#include "centipede/gait_analysis.hpp"
#include "centipede/morphology.hpp"
#include "centipede/physics.hpp"

namespace centipede {

// Everything that determines one simulation run.
struct TrialConfig {
  int experiment = 0;  // 0: custom, 1-4: built from a preset
  double axis_value = 0.0;
  MorphologyParams morphology;
  WorldGeometry world;
  ControllerParams controller;
  SimConfig sim;
  ClassifierThresholds thresholds;
  std::uint64_t seed = 1;
  bool climbing = false;
  // Climbing only: head farther than this many pole widths from the axis.
  double fall_off_widths = 3.0;

  void validate() const {
    morphology.validate();
    world.validate();
    controller.validate();
    sim.validate();
    thresholds.validate();
    if (sim.total_control_steps < static_cast<int>(thresholds.window))
      throw std::invalid_argument("total_control_steps (" + std::to_string(sim.total_control_steps) +
                                  ") is shorter than the classification window (" +
                                  std::to_string(thresholds.window) + ")");
  }
};

inline TrialConfig make_trial_config(int experiment, GridPoint point, Variant variant, std::uint64_t seed) {
  const ExperimentPreset preset = experiment_preset(experiment, point);
  TrialConfig cfg;
  cfg.experiment = experiment;
  cfg.axis_value = point.axis_value;
  cfg.morphology = preset.morphology;
  cfg.world = preset.world;
  cfg.sim = preset.sim;
  cfg.climbing = preset.climbing;
  cfg.controller.beta = point.beta;
  cfg.controller.variant = variant;
  cfg.controller.natural_length = preset.morphology.segment_length;
  cfg.controller.touch_gain = preset.touch_gain;
  cfg.seed = seed;
  return cfg;
}

// One control step of a recorded run.
struct TraceRecord {
  std::uint64_t step = 0;
  Vec3 head;
  std::vector<std::array<double, 2>> phases;         // [left, right] per segment
  std::vector<std::array<double, 2>> joint_lengths;  // [left, right] per trunk joint
  std::vector<Vec3> spine;
  FrameStats stats;

  bool operator==(const TraceRecord&) const = default;
};

using TraceSink = std::function<void(const TraceRecord&)>;

struct TrialResult {
  double distance = 0.0;
  PatternLabel label = PatternLabel::Unconverged;
  GaitSummary summary;
  bool fell_off_pole = false;
  bool failed = false;
  std::optional<std::uint64_t> failure_step;
  std::string failure_message;
  std::uint64_t steps_run = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  PhysicsDiagnostics diagnostics;

  // Counts as a white cell in the heatmaps.
  bool white() const { return label == PatternLabel::Unconverged || fell_off_pole || failed; }
};

inline Body make_initial_body(const TrialConfig& cfg) {
  Body body = build_centipede(cfg.morphology);
  place_body(body, cfg.world, cfg.morphology);
  return body;
}

inline bool fell_off(const Vec3& head, const TrialConfig& cfg) {
  return cfg.world.kind == WorldKind::Pole &&
         cfg.world.distance_from_pole_axis(head) > cfg.fall_off_widths * 2.0 * cfg.world.pole_half_width;
}

namespace detail {

inline TraceRecord make_record(std::uint64_t step, const Body& body, const ControllerState& state,
                               const FrameStats& stats) {
  TraceRecord r;
  r.step = step;
  r.head = head_position(body);
  r.phases = state.phase;
  r.joint_lengths = measure_trunk_joints(body);
  r.spine = spine_positions(body);
  r.stats = stats;
  return r;
}

}  // namespace detail

// Runs one seeded trial. Numerical blow-up marks the trial failed; falling
// off the pole ends it early. Both are reported as unconverged.
inline TrialResult run_trial(const TrialConfig& cfg, const TraceSink& sink = {}) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();

  TrialResult result;
  result.seed = cfg.seed;

  Body body = make_initial_body(cfg);
  ControllerState state = make_controller_state(body.segment_count(), cfg.controller, neutral_posture(cfg.morphology));
  seed_phases(state, cfg.seed);

  const Vec3 head_start = head_position(body);
  std::vector<FrameStats> history;
  history.reserve(static_cast<std::size_t>(cfg.sim.total_control_steps));
  std::vector<std::array<double, 2>> foot_forces(body.segment_count(), {0.0, 0.0});
  const double inv_substeps = 1.0 / cfg.sim.substeps_per_control_step;
  const std::size_t n = body.segment_count();

  std::uint64_t physics_step = 0;
  try {
    for (int step = 0; step < cfg.sim.total_control_steps; ++step) {
      controller_tick(body, state, cfg.controller, foot_forces);

      for (auto& f : foot_forces) f = {0.0, 0.0};
      for (int sub = 0; sub < cfg.sim.substeps_per_control_step; ++sub) {
        step_physics(body, cfg.world, cfg.sim, physics_step++);
        for (std::size_t i = 0; i < n; ++i)
          for (Side s : kSides)
            foot_forces[i][side_index(s)] += body.points[body.foot_point(i, s)].contact_normal_force;
      }
      for (auto& f : foot_forces) {
        f[0] *= inv_substeps;
        f[1] *= inv_substeps;
      }

      const auto spine = spine_positions(body);
      const Vec3 head = head_position(body);
      history.push_back(frame_stats(FrameInput{state.phase, spine, head}));
      result.steps_run = static_cast<std::uint64_t>(step) + 1;
      if (sink) sink(detail::make_record(result.steps_run, body, state, history.back()));

      if (cfg.climbing && fell_off(head, cfg)) {
        result.fell_off_pole = true;
        break;
      }
    }
  } catch (const NumericalBlowUp& e) {
    result.failed = true;
    result.failure_step = e.step();
    result.failure_message = e.what();
  } catch (const PhysicsError& e) {
    result.failed = true;
    result.failure_step = physics_step;
    result.failure_message = e.what();
  }

  const Vec3 head_end = head_position(body);
  if (!result.failed) {
    result.distance = cfg.climbing ? distance_along(head_start, head_end, cfg.world.pole_axis())
                                   : distance_moved(head_start, head_end);
  }
  if (!result.failed && !result.fell_off_pole && history.size() >= cfg.thresholds.window) {
    result.summary = aggregate(history, cfg.thresholds);
    result.label = classify(result.summary, cfg.thresholds);
  }
  result.diagnostics = body.diagnostics;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepGrid {
  int experiment = 1;
  Variant variant = Variant::A;
  std::vector<double> betas;
  std::vector<double> axis_values;
  int trials = 10;
  std::uint64_t seed_base = 0;  // mixed into every cell seed

  std::size_t cell_count() const { return betas.size() * axis_values.size(); }

  void validate() const {
    if (betas.empty() || axis_values.empty()) throw std::invalid_argument("sweep axes must be non-empty");
    if (trials < 1) throw std::invalid_argument("trials per cell must be >= 1");
    const AxisRange range = experiment_axis(experiment);
    for (double b : betas)
      if (!(b >= 0.0)) throw std::out_of_range("beta values must be >= 0");
    if (experiment != 4)
      for (double v : axis_values)
        if (v < range.min - 1e-9 || v > range.max + 1e-9)
          throw std::out_of_range(range.name + " value " + std::to_string(v) + " outside [" +
                                  std::to_string(range.min) + ", " + std::to_string(range.max) + "]");
  }
};

// Inclusive arithmetic range; the last value is snapped to `stop` when the
// step lands within rounding of it.
inline std::vector<double> linspace_step(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start) throw std::invalid_argument("invalid range");
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) out.push_back(start + step * static_cast<double>(i));
  return out;
}

inline SweepGrid default_grid(int experiment, Variant variant) {
  SweepGrid g;
  g.experiment = experiment;
  g.variant = variant;
  g.betas = linspace_step(0.0, 3.0, 0.5);
  switch (experiment) {
    case 1: g.axis_values = linspace_step(1.0, 8.75, 0.25); break;
    case 2: g.axis_values = linspace_step(0.06, 3.66, 0.3); break;
    case 3: g.axis_values = linspace_step(0.0, 93.0, 3.0); break;
    case 4:
      g.betas = {3.0};
      g.axis_values = {0.0};
      break;
    default: throw std::invalid_argument("unknown experiment " + std::to_string(experiment));
  }
  return g;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Reproducible from the cell coordinates alone: values are quantized to
// 1e-6 so that 0.1 + 0.2 and 0.3 land on the same cell seed.
inline std::uint64_t cell_seed(int experiment, Variant variant, double beta, double axis_value,
                               std::uint64_t seed_base = 0) {
  auto quantize = [](double v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::llround(v * 1e6))); };
  std::uint64_t h = splitmix64(seed_base);
  h = splitmix64(h ^ static_cast<std::uint64_t>(experiment));
  h = splitmix64(h ^ static_cast<std::uint64_t>(variant));
  h = splitmix64(h ^ quantize(beta));
  h = splitmix64(h ^ quantize(axis_value));
  return h;
}

inline std::uint64_t trial_seed(std::uint64_t cell, int trial) { return cell + static_cast<std::uint64_t>(trial); }

struct SweepRow {
  int experiment = 1;
  Variant variant = Variant::A;
  double beta = 0.0;
  double axis_value = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  TrialResult result;
};

struct CellSummary {
  int experiment = 1;
  Variant variant = Variant::A;
  double beta = 0.0;
  double axis_value = 0.0;
  int trials = 0;
  double mean_distance = 0.0;
  PatternLabel majority = PatternLabel::Unconverged;
  int majority_count = 0;
  int failed = 0;
  int fell_off = 0;
};

// Modal label. Ties go to a converged label over Unconverged, then to the
// earlier label in declaration order.
inline PatternLabel majority_pattern(std::span<const PatternLabel> labels) {
  std::array<int, kAllLabels.size()> counts{};
  for (PatternLabel l : labels) ++counts[static_cast<std::size_t>(l)];
  PatternLabel best = PatternLabel::Unconverged;
  int best_count = -1;
  for (PatternLabel l : kAllLabels) {
    const int c = counts[static_cast<std::size_t>(l)];
    if (c > best_count) {
      best = l;
      best_count = c;
    }
  }
  return best_count > 0 ? best : PatternLabel::Unconverged;
}

inline CellSummary summarize_cell(std::span<const SweepRow> rows) {
  if (rows.empty()) throw std::invalid_argument("cannot summarize an empty cell");
  CellSummary c;
  c.experiment = rows.front().experiment;
  c.variant = rows.front().variant;
  c.beta = rows.front().beta;
  c.axis_value = rows.front().axis_value;
  c.trials = static_cast<int>(rows.size());
  std::vector<PatternLabel> labels;
  double total = 0.0;
  for (const auto& r : rows) {
    const bool white = r.result.fell_off_pole || r.result.failed;
    labels.push_back(white ? PatternLabel::Unconverged : r.result.label);
    total += r.result.distance;
    c.failed += r.result.failed ? 1 : 0;
    c.fell_off += r.result.fell_off_pole ? 1 : 0;
  }
  c.mean_distance = total / static_cast<double>(rows.size());
  c.majority = majority_pattern(labels);
  c.majority_count = static_cast<int>(std::count(labels.begin(), labels.end(), c.majority));
  return c;
}

struct SweepOptions {
  unsigned threads = 0;  // 0: hardware concurrency
  std::optional<SimConfig> sim;        // replaces the preset's timing entirely
  std::optional<int> control_steps;    // keeps the preset's timing, changes only the run length
  ClassifierThresholds thresholds;
  std::function<void(const SweepRow&)> on_row;        // in (cell, trial) order
  std::function<void(const CellSummary&)> on_cell;    // after each cell's last row
  // Overrides applied to every trial config before it runs.
  std::function<void(TrialConfig&)> customize;
};

struct SweepJob {
  std::size_t cell = 0;
  double beta = 0.0;
  double axis_value = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
};

inline std::vector<SweepJob> sweep_jobs(const SweepGrid& grid) {
  std::vector<SweepJob> jobs;
  std::size_t cell = 0;
  for (double beta : grid.betas) {
    for (double axis : grid.axis_values) {
      const std::uint64_t base = cell_seed(grid.experiment, grid.variant, beta, axis, grid.seed_base);
      for (int t = 0; t < grid.trials; ++t) jobs.push_back({cell, beta, axis, t, trial_seed(base, t)});
      ++cell;
    }
  }
  return jobs;
}

inline TrialConfig job_config(const SweepGrid& grid, const SweepJob& job, const SweepOptions& opts) {
  TrialConfig cfg = make_trial_config(grid.experiment, {job.beta, job.axis_value}, grid.variant, job.seed);
  if (opts.sim) cfg.sim = *opts.sim;
  if (opts.control_steps) cfg.sim.total_control_steps = *opts.control_steps;
  cfg.thresholds = opts.thresholds;
  if (opts.customize) opts.customize(cfg);
  return cfg;
}

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<CellSummary> cells;
};

// Runs every (cell, trial) on a worker pool. Rows are handed to the callbacks
// strictly in (cell, trial) order regardless of completion order.
inline SweepResult run_sweep(const SweepGrid& grid, const SweepOptions& opts = {}) {
  grid.validate();
  const auto jobs = sweep_jobs(grid);
  std::vector<std::optional<SweepRow>> slots(jobs.size());
  SweepResult out;
  out.rows.reserve(jobs.size());

  std::mutex mu;
  std::condition_variable ready;
  std::size_t next_job = 0;
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      std::size_t idx;
      {
        std::lock_guard lock(mu);
        if (next_job >= jobs.size() || error) return;
        idx = next_job++;
      }
      const SweepJob& job = jobs[idx];
      SweepRow row;
      row.experiment = grid.experiment;
      row.variant = grid.variant;
      row.beta = job.beta;
      row.axis_value = job.axis_value;
      row.trial = job.trial;
      row.seed = job.seed;
      try {
        row.result = run_trial(job_config(grid, job, opts));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        ready.notify_all();
        return;
      }
      std::lock_guard lock(mu);
      slots[idx] = std::move(row);
      ready.notify_all();
    }
  };

  unsigned count = opts.threads != 0 ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  count = static_cast<unsigned>(std::min<std::size_t>(count, jobs.size()));
  std::vector<std::jthread> pool;
  for (unsigned i = 0; i < count; ++i) pool.emplace_back(worker);

  // Collector: emit the contiguous completed prefix.
  std::size_t emitted = 0;
  std::size_t cell_start = 0;
  while (emitted < jobs.size()) {
    SweepRow row;
    {
      std::unique_lock lock(mu);
      ready.wait(lock, [&] { return error || slots[emitted].has_value(); });
      if (error && !slots[emitted]) break;
      row = std::move(*slots[emitted]);
      slots[emitted].reset();
    }
    if (opts.on_row) opts.on_row(row);
    out.rows.push_back(std::move(row));
    ++emitted;
    const bool cell_done = emitted == jobs.size() || jobs[emitted].cell != jobs[emitted - 1].cell;
    if (cell_done) {
      out.cells.push_back(summarize_cell(std::span(out.rows).subspan(cell_start, emitted - cell_start)));
      if (opts.on_cell) opts.on_cell(out.cells.back());
      cell_start = emitted;
    }
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
  return out;
}

// ---------------------------------------------------------------------------
// Mixed morphology

struct HalfReport {
  std::size_t first = 0;
  std::size_t last = 0;  // exclusive
  GaitSummary summary;
  PatternLabel label = PatternLabel::Unconverged;
  std::vector<double> ipd_series;  // per-frame circular mean over the half
  std::vector<double> cpd_series;
};

struct MixedMorphologyReport {
  HalfReport back;   // tail half
  HalfReport front;  // head half
};

// Classifies the tail and head halves of a trace independently.
inline MixedMorphologyReport mixed_morphology_report(std::span<const TraceRecord> trace,
                                                     const ClassifierThresholds& t = {}) {
  if (trace.empty()) throw std::invalid_argument("empty trace");
  const std::size_t n = trace.front().phases.size();
  if (n < 4) throw std::invalid_argument("mixed morphology report needs at least 4 segments");
  const std::size_t mid = n / 2;

  auto half = [&](std::size_t first, std::size_t last) {
    HalfReport h;
    h.first = first;
    h.last = last;
    std::vector<FrameStats> frames;
    frames.reserve(trace.size());
    for (const auto& r : trace) {
      if (r.phases.size() != n || r.spine.size() != n + 1)
        throw std::invalid_argument("trace record " + std::to_string(r.step) + " has inconsistent segment count");
      frames.push_back(frame_stats(FrameInput{r.phases, r.spine, r.head}, first, last));
      h.ipd_series.push_back(frames.back().mean_ipd);
      h.cpd_series.push_back(frames.back().mean_cpd);
    }
    h.summary = aggregate(frames, t);
    h.label = classify(h.summary, t);
    return h;
  };

  MixedMorphologyReport report;
  report.back = half(0, mid);
  report.front = half(mid, n);
  return report;
}

}  // namespace centipede
