#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "centipede/centipede.hpp"

namespace fs = std::filesystem;
using namespace centipede;

namespace {

fs::path default_out_dir() {
  if (const char* env = std::getenv("CENTIPEDE_OUT_DIR"); env && *env) return env;
  return ".";
}

Json load_json(const std::string& path) {
  if (path.empty()) return Json::object();
  const std::string text = read_file(path);
  try {
    Json j = Json::parse(text);
    if (!j.is_object()) throw FormatError(path + ": config must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::string variant_tag(Variant v) {
  switch (v) {
    case Variant::A: return "A";
    case Variant::C: return "C";
    case Variant::AC: return "AC";
  }
  return "X";
}

void print_config_warnings(const TrialConfig& cfg) {
  if (cfg.experiment == 0 && cfg.climbing && cfg.world.kind != WorldKind::Pole)
    std::cerr << "warning: climbing is set but the world is a plane\n";
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::optional<int> experiment;
  std::optional<double> leg_length, mass, incline, axis_value, beta;
  std::optional<std::string> variant;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<double> touch_gain;
  std::optional<std::string> boundary;
  std::string out;
  std::string name = "trial";
  bool no_trace = false;
};

int run_simulate(const SimulateArgs& a) {
  Json doc = load_json(a.config);
  if (a.experiment) doc["experiment"] = *a.experiment;
  const int experiment = doc.value("experiment", 0);
  std::optional<double> axis = a.axis_value;
  auto axis_flag = [&](const std::optional<double>& v, int exp, const char* flag) {
    if (!v) return;
    if (experiment != exp)
      throw std::invalid_argument(std::string(flag) + " applies to experiment " + std::to_string(exp));
    axis = v;
  };
  axis_flag(a.leg_length, 1, "--leg-length");
  axis_flag(a.mass, 2, "--mass");
  axis_flag(a.incline, 3, "--incline");
  if (axis) doc["axis_value"] = *axis;
  if (a.beta) doc["beta"] = *a.beta;
  if (a.variant) doc["variant"] = *a.variant;
  if (a.seed) doc["seed"] = *a.seed;
  if (experiment != 0 && !doc.contains("axis_value") && experiment != 4)
    throw std::invalid_argument("experiment " + std::to_string(experiment) + " needs a value for " +
                                experiment_axis(experiment).name);

  TrialConfig cfg = trial_config_from_json(doc);
  if (experiment == 0) {
    if (a.beta) cfg.controller.beta = *a.beta;
    if (a.variant) cfg.controller.variant = parse_variant(*a.variant);
  }
  if (a.steps) cfg.sim.total_control_steps = *a.steps;
  if (a.touch_gain) cfg.controller.touch_gain = *a.touch_gain;
  if (a.boundary) cfg.controller.boundary = parse_boundary_rule(*a.boundary);
  cfg.validate();
  print_config_warnings(cfg);

  const fs::path dir = a.out.empty() ? default_out_dir() : fs::path(a.out);
  OutputGuard guard;
  std::optional<std::ofstream> trace_file;
  std::optional<TraceWriter> writer;
  TraceSink sink;
  if (!a.no_trace) {
    trace_file.emplace(guard.open(dir / (a.name + ".trace.jsonl")));
    writer.emplace(*trace_file, TraceHeader{cfg, kToolVersion});
    sink = [&](const TraceRecord& r) { writer->write(r); };
  }
  const TrialResult result = run_trial(cfg, sink);
  if (writer) {
    writer->finish();
    trace_file->close();
  }

  auto summary_file = guard.open(dir / (a.name + ".summary.json"));
  const Json summary = {{"tool_version", kToolVersion}, {"config", to_json(cfg)}, {"result", to_json(result)}};
  summary_file << summary.dump(2) << '\n';
  summary_file.close();
  if (!summary_file) throw std::runtime_error("failed writing summary");
  guard.commit();

  std::cout << "label " << to_string(result.label) << "  distance " << format_double(result.distance) << "  steps "
            << result.steps_run << (result.failed ? "  FAILED: " + result.failure_message : "")
            << (result.fell_off_pole ? "  fell off pole" : "") << '\n';
  for (const auto& f : guard.files()) std::cout << "wrote " << f.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string config;
  std::optional<int> experiment;
  std::optional<std::string> variant;
  std::vector<double> betas, axis_values;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed_base;
  std::optional<unsigned> threads;
  std::optional<int> steps;
  std::string out;
  std::string name;
};

int run_sweep_cmd(const SweepArgs& a, const std::vector<std::string>& argv) {
  Json doc = load_json(a.config);
  if (a.experiment) doc["experiment"] = *a.experiment;
  if (a.variant) doc["variant"] = *a.variant;
  if (!a.betas.empty()) doc["betas"] = a.betas;
  if (!a.axis_values.empty()) doc["axis_values"] = a.axis_values;
  if (a.trials) doc["trials"] = *a.trials;
  if (a.seed_base) doc["seed_base"] = *a.seed_base;
  if (a.threads) doc["threads"] = *a.threads;
  if (a.steps) doc["control_steps"] = *a.steps;

  SweepDocument sweep = sweep_from_json(doc);
  sweep.grid.validate();
  if (!sweep.overrides.empty())
    sweep.options.customize = [ov = sweep.overrides](TrialConfig& cfg) {
      apply_trial_overrides(ov, cfg, "sweep.overrides");
    };
  {
    // Fail on invalid configs before any trial runs.
    const auto jobs = sweep_jobs(sweep.grid);
    job_config(sweep.grid, jobs.front(), sweep.options).validate();
  }

  const fs::path dir = a.out.empty() ? default_out_dir() : fs::path(a.out);
  const std::string stem = a.name.empty()
                               ? "exp" + std::to_string(sweep.grid.experiment) + "_" + variant_tag(sweep.grid.variant)
                               : a.name;
  ManifestInfo info;
  info.started_utc = utc_timestamp();
  info.command = argv;

  OutputGuard guard;
  auto results = guard.open(dir / (stem + ".csv"));
  auto cells = guard.open(dir / (stem + ".cells.csv"));
  write_results_header(results);
  write_cells_header(cells);

  const std::size_t total = sweep.grid.cell_count();
  std::size_t done = 0;
  sweep.options.on_row = [&](const SweepRow& row) { write_results_row(results, row); };
  sweep.options.on_cell = [&](const CellSummary& c) {
    write_cell_row(cells, c);
    results.flush();
    cells.flush();
    ++done;
    std::cerr << "[" << done << "/" << total << "] beta " << format_double(c.beta) << "  "
              << experiment_axis(sweep.grid.experiment).name << ' ' << format_double(c.axis_value) << "  "
              << to_string(c.majority) << " (" << c.majority_count << '/' << c.trials << ")  distance "
              << format_double(c.mean_distance) << '\n';
  };
  run_sweep(sweep.grid, sweep.options);
  results.close();
  cells.close();
  if (!results || !cells) throw std::runtime_error("failed writing sweep tables");

  info.finished_utc = utc_timestamp();
  std::vector<fs::path> data_files = guard.files();
  const Json manifest = sweep_manifest(sweep.grid, sweep.options, sweep.overrides, info, data_files);
  auto manifest_file = guard.open(dir / (stem + ".manifest.json"));
  manifest_file << manifest.dump(2) << '\n';
  manifest_file.close();
  if (!manifest_file) throw std::runtime_error("failed writing manifest");
  guard.commit();
  for (const auto& f : guard.files()) std::cout << "wrote " << f.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct ClassifyArgs {
  std::string trace;
  std::optional<double> cpd_mean_max, cpd_std_max, bl_std_min, ipd_std_max, undulation_high;
  std::optional<std::size_t> window;
  bool halves = false;
};

int run_classify(const ClassifyArgs& a) {
  const Trace trace = read_trace(a.trace);
  ClassifierThresholds t = trace.header.config.thresholds;
  if (a.cpd_mean_max) t.cpd_mean_max = *a.cpd_mean_max;
  if (a.cpd_std_max) t.cpd_std_max = *a.cpd_std_max;
  if (a.bl_std_min) t.bl_std_min = *a.bl_std_min;
  if (a.ipd_std_max) t.ipd_std_max = *a.ipd_std_max;
  if (a.undulation_high) t.undulation_high = *a.undulation_high;
  if (a.window) t.window = *a.window;
  t.validate();

  const GaitSummary s = trace_summary(trace, t);
  Json out = {{"trace", a.trace},
              {"records", trace.records.size()},
              {"thresholds", to_json(t)},
              {"label", to_string(classify(s, t))},
              {"summary", to_json(s)}};
  if (a.halves) {
    const auto report = mixed_morphology_report(trace.records, t);
    out["back_half"] = {{"segments", {report.back.first, report.back.last}},
                        {"label", to_string(report.back.label)},
                        {"summary", to_json(report.back.summary)}};
    out["front_half"] = {{"segments", {report.front.first, report.front.last}},
                         {"label", to_string(report.front.label)},
                         {"summary", to_json(report.front.summary)}};
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct PlotArgs {
  std::string in;
  std::string value = "both";
  std::string out;
};

int run_plot(const PlotArgs& a) {
  const auto rows = read_results(a.in);
  if (rows.empty()) throw std::runtime_error(a.in + " has no result rows");
  std::map<std::pair<int, std::string>, std::vector<SweepRow>> groups;
  for (const auto& r : rows) groups[{r.experiment, variant_tag(r.variant)}].push_back(r);

  std::vector<HeatmapKind> kinds;
  if (a.value == "pattern" || a.value == "both") kinds.push_back(HeatmapKind::Pattern);
  if (a.value == "distance" || a.value == "both") kinds.push_back(HeatmapKind::Distance);

  const fs::path dir = a.out.empty() ? default_out_dir() : fs::path(a.out);
  const std::string stem = fs::path(a.in).stem().string();
  OutputGuard guard;
  for (const auto& [key, group] : groups) {
    const auto cells = summarize_rows(group);
    SweepGrid grid;
    grid.experiment = key.first;
    grid.variant = group.front().variant;
    for (const auto& c : cells) {
      grid.betas.push_back(c.beta);
      grid.axis_values.push_back(c.axis_value);
    }
    for (HeatmapKind kind : kinds) {
      HeatmapOptions opt;
      opt.kind = kind;
      opt.axis_name = experiment_axis(key.first).name;
      const std::string value = kind == HeatmapKind::Pattern ? "pattern" : "distance";
      opt.title = "experiment " + std::to_string(key.first) + ", variant " + to_string(grid.variant) + ": " +
                  (kind == HeatmapKind::Pattern ? "majority pattern" : "mean distance");
      const auto hm = render_heatmap(cells, grid, opt);
      for (const auto& w : hm.warnings) std::cerr << "warning: " << w << '\n';
      auto file = guard.open(dir / (stem + "_" + key.second + "_" + value + ".svg"));
      file << hm.svg;
      file.close();
      if (!file) throw std::runtime_error("failed writing SVG");
    }
  }
  guard.commit();
  for (const auto& f : guard.files()) std::cout << "wrote " << f.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

int run_presets(std::optional<int> only) {
  Json all = Json::array();
  for (int id = 1; id <= 4; ++id) {
    if (only && *only != id) continue;
    const SweepGrid grid = default_grid(id, Variant::A);
    const AxisRange axis = experiment_axis(id);
    const double sample = id == 1 ? 1.5 : id == 3 ? 45.0 : axis.min;
    const TrialConfig cfg = make_trial_config(id, {grid.betas.front(), sample}, Variant::A, 1);
    Json c = to_json(cfg);
    c.erase("seed");
    all.push_back({{"experiment", id},
                   {"axis", {{"name", axis.name}, {"min", axis.min}, {"max", axis.max}}},
                   {"default_grid", to_json(grid)},
                   {"example_config", c}});
  }
  std::cout << all.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized centipede locomotion simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run one trial and write its trace and summary");
  simulate->add_option("--config", sim.config, "JSON trial config")->check(CLI::ExistingFile);
  simulate->add_option("--experiment", sim.experiment, "Preset 1-4")->check(CLI::Range(1, 4));
  simulate->add_option("--leg-length", sim.leg_length, "Experiment 1 axis");
  simulate->add_option("--mass", sim.mass, "Experiment 2 axis (trunk segment mass)");
  simulate->add_option("--incline", sim.incline, "Experiment 3 axis (degrees)");
  simulate->add_option("--axis-value", sim.axis_value, "Axis value of the chosen experiment");
  simulate->add_option("--beta", sim.beta, "Contraction amplitude");
  simulate->add_option("--variant", sim.variant, "A, C or A+C");
  simulate->add_option("--seed", sim.seed, "Phase seed");
  simulate->add_option("--steps", sim.steps, "Control steps")->check(CLI::PositiveNumber);
  simulate->add_option("--touch-gain", sim.touch_gain, "Contact force to touch signal scale");
  simulate->add_option("--boundary", sim.boundary, "silent, natural-length or mirror");
  simulate->add_option("--out", sim.out, "Output directory (default $CENTIPEDE_OUT_DIR or .)");
  simulate->add_option("--name", sim.name, "Output file stem");
  simulate->add_flag("--no-trace", sim.no_trace, "Write only the summary");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Run an experiment grid and write results, cells and manifest");
  sweep->add_option("--config", sw.config, "JSON sweep config")->check(CLI::ExistingFile);
  sweep->add_option("--experiment", sw.experiment, "Preset 1-4")->check(CLI::Range(1, 4));
  sweep->add_option("--variant", sw.variant, "A, C or A+C");
  sweep->add_option("--betas", sw.betas, "Beta values")->delimiter(',');
  sweep->add_option("--axis-values", sw.axis_values, "Axis values")->delimiter(',');
  sweep->add_option("--trials", sw.trials, "Trials per cell")->check(CLI::PositiveNumber);
  sweep->add_option("--seed-base", sw.seed_base, "Mixed into every cell seed");
  sweep->add_option("--threads", sw.threads, "Worker threads (0: all cores)");
  sweep->add_option("--steps", sw.steps, "Control steps per trial")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sw.out, "Output directory (default $CENTIPEDE_OUT_DIR or .)");
  sweep->add_option("--name", sw.name, "Output file stem (default exp<N>_<variant>)");

  ClassifyArgs cl;
  auto* classify_cmd = app.add_subcommand("classify", "Classify a stored trace");
  classify_cmd->add_option("trace", cl.trace, "Trace file (.jsonl)")->required()->check(CLI::ExistingFile);
  classify_cmd->add_option("--cpd-mean-max", cl.cpd_mean_max);
  classify_cmd->add_option("--cpd-std-max", cl.cpd_std_max);
  classify_cmd->add_option("--bl-std-min", cl.bl_std_min);
  classify_cmd->add_option("--ipd-std-max", cl.ipd_std_max);
  classify_cmd->add_option("--undulation-high", cl.undulation_high);
  classify_cmd->add_option("--window", cl.window);
  classify_cmd->add_flag("--halves", cl.halves, "Also classify the tail and head halves separately");

  PlotArgs pl;
  auto* plot = app.add_subcommand("plot", "Render SVG heatmaps from a results table");
  plot->add_option("--in", pl.in, "Results CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("--value", pl.value, "pattern, distance or both")
      ->check(CLI::IsMember({"pattern", "distance", "both"}));
  plot->add_option("--out", pl.out, "Output directory (default $CENTIPEDE_OUT_DIR or .)");

  std::optional<int> preset_id;
  auto* presets = app.add_subcommand("presets", "Print the experiment presets as JSON");
  presets->add_option("--experiment", preset_id)->check(CLI::Range(1, 4));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return run_simulate(sim);
    if (*sweep) return run_sweep_cmd(sw, std::vector<std::string>(argv, argv + argc));
    if (*classify_cmd) return run_classify(cl);
    if (*plot) return run_plot(pl);
    if (*presets) return run_presets(preset_id);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
