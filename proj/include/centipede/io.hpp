#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "centipede/experiment.hpp"

namespace centipede {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.3.0";
inline constexpr int kTraceVersion = 1;
inline constexpr int kResultsVersion = 1;
inline constexpr int kManifestVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Small helpers

// Shortest decimal form that reads back to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw FormatError("bad number '" + s + "' for " + what);
  return v;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  const char* end = s.data() + s.size();
  auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw FormatError("bad integer '" + s + "' for " + what);
  return v;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string file_checksum(const std::filesystem::path& path) {
  return "fnv1a64:" + hex64(fnv1a64(read_file(path)));
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now()) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Json vec_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

inline Vec3 json_vec(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// ---------------------------------------------------------------------------
// Config documents. Readers only touch keys that are present, so a partial
// document overrides a preset; unknown keys are rejected.

namespace detail {

class KeyReader {
 public:
  KeyReader(const Json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j_.is_object()) throw FormatError("'" + section_ + "' must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.emplace_back(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw FormatError("'" + section_ + "." + key + "' has the wrong type");
    }
  }

  template <class F>
  void with(const char* key, F&& f) {
    seen_.emplace_back(key);
    auto it = j_.find(key);
    if (it != j_.end()) f(*it);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        throw FormatError("unknown key '" + section_ + "." + it.key() + "'");
  }

 private:
  const Json& j_;
  std::string section_;
  std::vector<std::string> seen_;
};

}  // namespace detail

inline Json to_json(const MorphologyParams& m) {
  return {{"segment_count", m.segment_count},
          {"trunk_width", m.trunk_width},
          {"trunk_height", m.trunk_height},
          {"segment_length", m.segment_length},
          {"leg_lengths", m.leg_lengths},
          {"default_leg_length", m.default_leg_length},
          {"leg_mass", m.leg_mass},
          {"trunk_segment_mass", m.trunk_segment_mass},
          {"knee_fraction", m.knee_fraction},
          {"foot_neutral_deg", m.foot_neutral_deg},
          {"climbing_neutral_offset_deg", m.climbing_neutral_offset_deg},
          {"climbing_offset_on_knee", m.climbing_offset_on_knee},
          {"spawn_clearance", m.spawn_clearance},
          {"spawn_foot_open_deg", m.spawn_foot_open_deg}};
}

inline void apply_json(const Json& j, MorphologyParams& m) {
  detail::KeyReader r(j, "morphology");
  r.read("segment_count", m.segment_count);
  r.read("trunk_width", m.trunk_width);
  r.read("trunk_height", m.trunk_height);
  r.read("segment_length", m.segment_length);
  r.read("leg_lengths", m.leg_lengths);
  r.read("default_leg_length", m.default_leg_length);
  r.read("leg_mass", m.leg_mass);
  r.read("trunk_segment_mass", m.trunk_segment_mass);
  r.read("knee_fraction", m.knee_fraction);
  r.read("foot_neutral_deg", m.foot_neutral_deg);
  r.read("climbing_neutral_offset_deg", m.climbing_neutral_offset_deg);
  r.read("climbing_offset_on_knee", m.climbing_offset_on_knee);
  r.read("spawn_clearance", m.spawn_clearance);
  r.read("spawn_foot_open_deg", m.spawn_foot_open_deg);
  r.finish();
}

inline Json to_json(const WorldGeometry& w) {
  return {{"kind", w.kind == WorldKind::Plane ? "plane" : "pole"},
          {"pole_half_width", w.pole_half_width},
          {"pole_incline_deg", w.pole_incline_deg},
          {"pole_start", w.pole_start},
          {"pole_length", w.pole_length},
          {"k_contact", w.k_contact},
          {"d_contact", w.d_contact},
          {"k_tangent", w.k_tangent},
          {"d_tangent", w.d_tangent},
          {"friction_mu", w.friction_mu},
          {"gravity", w.gravity}};
}

inline void apply_json(const Json& j, WorldGeometry& w) {
  detail::KeyReader r(j, "world");
  r.with("kind", [&](const Json& v) {
    const auto s = v.get<std::string>();
    if (s == "plane")
      w.kind = WorldKind::Plane;
    else if (s == "pole")
      w.kind = WorldKind::Pole;
    else
      throw FormatError("world.kind must be 'plane' or 'pole', got '" + s + "'");
  });
  r.read("pole_half_width", w.pole_half_width);
  r.read("pole_incline_deg", w.pole_incline_deg);
  r.read("pole_start", w.pole_start);
  r.read("pole_length", w.pole_length);
  r.read("k_contact", w.k_contact);
  r.read("d_contact", w.d_contact);
  r.read("k_tangent", w.k_tangent);
  r.read("d_tangent", w.d_tangent);
  r.read("friction_mu", w.friction_mu);
  r.read("gravity", w.gravity);
  r.finish();
}

inline Json to_json(const ControllerParams& p) {
  return {{"natural_length", p.natural_length},
          {"gamma", p.gamma},
          {"beta", p.beta},
          {"omega", p.omega},
          {"sigma_angle", p.sigma_angle},
          {"sigma_contraction", p.sigma_contraction},
          {"c", p.c},
          {"alpha_leg_deg", rad_to_deg(p.alpha_leg)},
          {"alpha_foot_deg", rad_to_deg(p.alpha_foot)},
          {"variant", to_string(p.variant)},
          {"touch_window", p.touch_window},
          {"min_length_fraction", p.min_length_fraction},
          {"touch_gain", p.touch_gain},
          {"boundary", to_string(p.boundary)}};
}

inline void apply_json(const Json& j, ControllerParams& p) {
  detail::KeyReader r(j, "controller");
  r.read("natural_length", p.natural_length);
  r.read("gamma", p.gamma);
  r.read("beta", p.beta);
  r.read("omega", p.omega);
  r.read("sigma_angle", p.sigma_angle);
  r.read("sigma_contraction", p.sigma_contraction);
  r.read("c", p.c);
  r.with("alpha_leg_deg", [&](const Json& v) { p.alpha_leg = deg_to_rad(v.get<double>()); });
  r.with("alpha_foot_deg", [&](const Json& v) { p.alpha_foot = deg_to_rad(v.get<double>()); });
  r.with("variant", [&](const Json& v) { p.variant = parse_variant(v.get<std::string>()); });
  r.read("touch_window", p.touch_window);
  r.read("min_length_fraction", p.min_length_fraction);
  r.read("touch_gain", p.touch_gain);
  r.with("boundary", [&](const Json& v) { p.boundary = parse_boundary_rule(v.get<std::string>()); });
  r.finish();
}

inline Json to_json(const SimConfig& s) {
  return {{"physics_dt", s.physics_dt},
          {"substeps_per_control_step", s.substeps_per_control_step},
          {"total_control_steps", s.total_control_steps}};
}

inline void apply_json(const Json& j, SimConfig& s) {
  detail::KeyReader r(j, "sim");
  r.read("physics_dt", s.physics_dt);
  r.read("substeps_per_control_step", s.substeps_per_control_step);
  r.read("total_control_steps", s.total_control_steps);
  r.finish();
}

inline Json to_json(const ClassifierThresholds& t) {
  return {{"cpd_mean_max", t.cpd_mean_max},
          {"cpd_std_max", t.cpd_std_max},
          {"bl_std_min", t.bl_std_min},
          {"ipd_std_max", t.ipd_std_max},
          {"undulation_high", t.undulation_high},
          {"window", t.window}};
}

inline void apply_json(const Json& j, ClassifierThresholds& t) {
  detail::KeyReader r(j, "thresholds");
  r.read("cpd_mean_max", t.cpd_mean_max);
  r.read("cpd_std_max", t.cpd_std_max);
  r.read("bl_std_min", t.bl_std_min);
  r.read("ipd_std_max", t.ipd_std_max);
  r.read("undulation_high", t.undulation_high);
  r.read("window", t.window);
  r.finish();
}

inline Json to_json(const TrialConfig& c) {
  return {{"experiment", c.experiment},
          {"axis_value", c.axis_value},
          {"seed", c.seed},
          {"climbing", c.climbing},
          {"fall_off_widths", c.fall_off_widths},
          {"morphology", to_json(c.morphology)},
          {"world", to_json(c.world)},
          {"controller", to_json(c.controller)},
          {"sim", to_json(c.sim)},
          {"thresholds", to_json(c.thresholds)}};
}

// Applies the section overrides of a trial document (everything except the
// preset-selecting keys) to an existing config.
inline void apply_trial_overrides(const Json& j, TrialConfig& c, const char* section = "config") {
  detail::KeyReader r(j, section);
  r.with("experiment", [](const Json&) {});
  r.with("axis_value", [](const Json&) {});
  r.with("beta", [](const Json&) {});
  r.with("variant", [](const Json&) {});
  r.read("seed", c.seed);
  r.read("climbing", c.climbing);
  r.read("fall_off_widths", c.fall_off_widths);
  r.with("morphology", [&](const Json& v) { apply_json(v, c.morphology); });
  r.with("world", [&](const Json& v) { apply_json(v, c.world); });
  r.with("controller", [&](const Json& v) { apply_json(v, c.controller); });
  r.with("sim", [&](const Json& v) { apply_json(v, c.sim); });
  r.with("thresholds", [&](const Json& v) { apply_json(v, c.thresholds); });
  r.finish();
}

// Resolves a trial document. With "experiment" in 1-4 the preset for
// (beta, axis_value, variant) is the starting point; otherwise the defaults
// are. Sections present in the document then override field by field.
inline TrialConfig trial_config_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("trial config must be a JSON object");
  TrialConfig c;
  const int experiment = j.value("experiment", 0);
  if (experiment != 0) {
    const double beta = j.value("beta", j.contains("controller") ? j["controller"].value("beta", 0.0) : 0.0);
    const double axis = j.value("axis_value", 0.0);
    Variant variant = Variant::A;
    if (j.contains("variant"))
      variant = parse_variant(j["variant"].get<std::string>());
    else if (j.contains("controller") && j["controller"].contains("variant"))
      variant = parse_variant(j["controller"]["variant"].get<std::string>());
    c = make_trial_config(experiment, {beta, axis}, variant, j.value("seed", std::uint64_t{1}));
  } else {
    if (j.contains("beta")) c.controller.beta = j["beta"].get<double>();
    if (j.contains("variant")) c.controller.variant = parse_variant(j["variant"].get<std::string>());
  }
  apply_trial_overrides(j, c);
  c.experiment = experiment;
  if (j.contains("axis_value")) c.axis_value = j["axis_value"].get<double>();
  return c;
}

struct SweepDocument {
  SweepGrid grid;
  SweepOptions options;
  Json overrides = Json::object();  // trial-level sections applied to every cell
};

inline Json to_json(const SweepGrid& g) {
  return {{"experiment", g.experiment},
          {"variant", to_string(g.variant)},
          {"betas", g.betas},
          {"axis_values", g.axis_values},
          {"trials", g.trials},
          {"seed_base", g.seed_base}};
}

inline SweepDocument sweep_from_json(const Json& j) {
  SweepDocument d;
  detail::KeyReader r(j, "sweep");
  int experiment = 1;
  Variant variant = Variant::A;
  r.read("experiment", experiment);
  r.with("variant", [&](const Json& v) { variant = parse_variant(v.get<std::string>()); });
  d.grid = default_grid(experiment, variant);
  r.read("betas", d.grid.betas);
  r.read("axis_values", d.grid.axis_values);
  r.read("trials", d.grid.trials);
  r.read("seed_base", d.grid.seed_base);
  r.read("threads", d.options.threads);
  r.with("control_steps", [&](const Json& v) { d.options.control_steps = v.get<int>(); });
  r.with("thresholds", [&](const Json& v) { apply_json(v, d.options.thresholds); });
  r.with("overrides", [&](const Json& v) {
    if (!v.is_object()) throw FormatError("'sweep.overrides' must be an object");
    d.overrides = v;
  });
  r.finish();
  if (!d.overrides.empty()) {
    TrialConfig probe;
    apply_trial_overrides(d.overrides, probe, "sweep.overrides");
  }
  return d;
}

// ---------------------------------------------------------------------------
// Traces (JSON Lines): a header record with the resolved config, one record
// per control step, and an end record with the record count.

struct TraceHeader {
  TrialConfig config;
  std::string tool_version = kToolVersion;
};

struct Trace {
  TraceHeader header;
  std::vector<TraceRecord> records;
};

inline Json to_json(const FrameStats& s) {
  return {{"mean_ipd", s.mean_ipd},
          {"std_ipd", s.std_ipd},
          {"mean_cpd", s.mean_cpd},
          {"std_cpd", s.std_cpd},
          {"mean_undulation", s.mean_undulation},
          {"std_undulation", s.std_undulation},
          {"mean_bl", s.mean_bl},
          {"std_bl", s.std_bl},
          {"head", vec_json(s.head)},
          {"excluded_segments", s.excluded_segments}};
}

inline FrameStats frame_stats_from_json(const Json& j) {
  FrameStats s;
  s.mean_ipd = j.at("mean_ipd").get<double>();
  s.std_ipd = j.at("std_ipd").get<double>();
  s.mean_cpd = j.at("mean_cpd").get<double>();
  s.std_cpd = j.at("std_cpd").get<double>();
  s.mean_undulation = j.at("mean_undulation").get<double>();
  s.std_undulation = j.at("std_undulation").get<double>();
  s.mean_bl = j.at("mean_bl").get<double>();
  s.std_bl = j.at("std_bl").get<double>();
  s.head = json_vec(j.at("head"));
  s.excluded_segments = j.at("excluded_segments").get<std::size_t>();
  return s;
}

inline Json to_json(const TraceRecord& r) {
  Json spine = Json::array();
  for (const auto& p : r.spine) spine.push_back(vec_json(p));
  return {{"type", "step"},
          {"step", r.step},
          {"head", vec_json(r.head)},
          {"phases", r.phases},
          {"joint_lengths", r.joint_lengths},
          {"spine", spine},
          {"stats", to_json(r.stats)}};
}

inline TraceRecord trace_record_from_json(const Json& j) {
  TraceRecord r;
  r.step = j.at("step").get<std::uint64_t>();
  r.head = json_vec(j.at("head"));
  r.phases = j.at("phases").get<std::vector<std::array<double, 2>>>();
  r.joint_lengths = j.at("joint_lengths").get<std::vector<std::array<double, 2>>>();
  for (const auto& p : j.at("spine")) r.spine.push_back(json_vec(p));
  r.stats = frame_stats_from_json(j.at("stats"));
  return r;
}

class TraceWriter {
 public:
  TraceWriter(std::ostream& out, const TraceHeader& header) : out_(out) {
    const Json h = {{"type", "header"},
                    {"format", "centipede-trace"},
                    {"version", kTraceVersion},
                    {"tool_version", header.tool_version},
                    {"seed", header.config.seed},
                    {"config", to_json(header.config)}};
    out_ << h.dump() << '\n';
  }

  void write(const TraceRecord& r) {
    out_ << to_json(r).dump() << '\n';
    ++count_;
  }

  void finish() {
    const Json end = {{"type", "end"}, {"records", count_}};
    out_ << end.dump() << '\n';
    out_.flush();
    if (!out_) throw std::runtime_error("failed writing trace");
  }

 private:
  std::ostream& out_;
  std::uint64_t count_ = 0;
};

inline void write_trace(std::ostream& out, const Trace& trace) {
  TraceWriter w(out, trace.header);
  for (const auto& r : trace.records) w.write(r);
  w.finish();
}

inline Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  bool have_end = false;
  auto last_valid = [&] {
    if (!trace.records.empty()) return "step " + std::to_string(trace.records.back().step);
    return std::string(have_header ? "the header" : "none");
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (have_end) throw FormatError("trace has data after its end record (line " + std::to_string(line_no) + ")");
    const bool complete = !in.eof();
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw FormatError("truncated or corrupt trace at line " + std::to_string(line_no) +
                        "; last valid record: " + last_valid());
    }
    if (!complete && j.value("type", "") != "end")
      throw FormatError("truncated trace at line " + std::to_string(line_no) + "; last valid record: " + last_valid());
    const std::string type = j.value("type", "");
    if (!have_header) {
      if (type != "header" || j.value("format", "") != "centipede-trace")
        throw FormatError("not a centipede trace (missing header record)");
      const int version = j.value("version", -1);
      if (version != kTraceVersion)
        throw FormatError("trace schema version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kTraceVersion) + ")");
      trace.header.tool_version = j.value("tool_version", "");
      trace.header.config = trial_config_from_json(j.at("config"));
      have_header = true;
    } else if (type == "step") {
      try {
        trace.records.push_back(trace_record_from_json(j));
      } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed trace record at line " + std::to_string(line_no) + ": " + e.what() +
                          "; last valid record: " + last_valid());
      }
    } else if (type == "end") {
      if (j.value("records", std::uint64_t{0}) != trace.records.size())
        throw FormatError("trace end record counts " + std::to_string(j.value("records", std::uint64_t{0})) +
                          " records but " + std::to_string(trace.records.size()) + " were read");
      have_end = true;
    } else {
      throw FormatError("unknown trace record type '" + type + "' at line " + std::to_string(line_no));
    }
  }
  if (!have_header) throw FormatError("empty trace");
  if (!have_end) throw FormatError("truncated trace (no end record); last valid record: " + last_valid());
  return trace;
}

inline Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace " + path.string());
  try {
    return read_trace(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// Classifies a stored trace the same way the originating run did.
inline GaitSummary trace_summary(const Trace& trace, const ClassifierThresholds& t) {
  std::vector<FrameStats> frames;
  frames.reserve(trace.records.size());
  for (const auto& r : trace.records) frames.push_back(r.stats);
  return aggregate(frames, t);
}

inline Json to_json(const GaitSummary& s) {
  return {{"mean_ipd", s.mean_ipd},         {"std_ipd", s.std_ipd},
          {"mean_cpd", s.mean_cpd},         {"std_cpd", s.std_cpd},
          {"mean_undulation", s.mean_undulation}, {"std_bl", s.std_bl}};
}

inline Json to_json(const TrialResult& r) {
  Json j = {{"distance", r.distance},
            {"label", to_string(r.label)},
            {"summary", to_json(r.summary)},
            {"fell_off_pole", r.fell_off_pole},
            {"failed", r.failed},
            {"steps_run", r.steps_run},
            {"seed", r.seed},
            {"wall_seconds", r.wall_seconds},
            {"degenerate_links", r.diagnostics.degenerate_links},
            {"singular_joints", r.diagnostics.singular_joints}};
  if (r.failure_step) j["failure_step"] = *r.failure_step;
  if (!r.failure_message.empty()) j["failure_message"] = r.failure_message;
  return j;
}

// ---------------------------------------------------------------------------
// Results tables

inline constexpr const char* kResultsColumns =
    "experiment,variant,beta,axis_param,trial,seed,distance,label,mean_ipd,std_ipd,mean_cpd,std_cpd,"
    "mean_undulation,std_bl,fell_off,failed";

inline void write_results_header(std::ostream& out) {
  out << "# centipede-results v" << kResultsVersion << '\n' << kResultsColumns << '\n';
}

inline void write_results_row(std::ostream& out, const SweepRow& row) {
  const auto& r = row.result;
  const auto& s = r.summary;
  out << row.experiment << ',' << to_string(row.variant) << ',' << format_double(row.beta) << ','
      << format_double(row.axis_value) << ',' << row.trial << ',' << row.seed << ',' << format_double(r.distance)
      << ',' << to_string(r.label) << ',' << format_double(s.mean_ipd) << ',' << format_double(s.std_ipd) << ','
      << format_double(s.mean_cpd) << ',' << format_double(s.std_cpd) << ',' << format_double(s.mean_undulation)
      << ',' << format_double(s.std_bl) << ',' << (r.fell_off_pole ? 1 : 0) << ',' << (r.failed ? 1 : 0) << '\n';
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<SweepRow> read_results(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# centipede-results v", 0) != 0)
    throw FormatError("not a centipede results table (missing '# centipede-results' line)");
  const std::string version = line.substr(std::string("# centipede-results v").size());
  if (version != std::to_string(kResultsVersion))
    throw FormatError("results schema version " + version + " is not supported (expected " +
                      std::to_string(kResultsVersion) + ")");
  if (!std::getline(in, line) || line != kResultsColumns) throw FormatError("unexpected results columns: " + line);
  std::vector<SweepRow> rows;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 16)
      throw FormatError("results line " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                        " fields, expected 16");
    const std::string where = "results line " + std::to_string(line_no);
    SweepRow row;
    row.experiment = static_cast<int>(parse_u64(f[0], where));
    row.variant = parse_variant(f[1]);
    row.beta = parse_double(f[2], where);
    row.axis_value = parse_double(f[3], where);
    row.trial = static_cast<int>(parse_u64(f[4], where));
    row.seed = parse_u64(f[5], where);
    auto& r = row.result;
    r.seed = row.seed;
    r.distance = parse_double(f[6], where);
    r.label = parse_label(f[7]);
    r.summary.mean_ipd = parse_double(f[8], where);
    r.summary.std_ipd = parse_double(f[9], where);
    r.summary.mean_cpd = parse_double(f[10], where);
    r.summary.std_cpd = parse_double(f[11], where);
    r.summary.mean_undulation = parse_double(f[12], where);
    r.summary.std_bl = parse_double(f[13], where);
    r.fell_off_pole = f[14] == "1";
    r.failed = f[15] == "1";
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<SweepRow> read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open results " + path.string());
  return read_results(in);
}

inline void write_cells_header(std::ostream& out) {
  out << "# centipede-cells v" << kResultsVersion << '\n'
      << "experiment,variant,beta,axis_param,trials,mean_distance,majority,majority_count,failed,fell_off\n";
}

inline void write_cell_row(std::ostream& out, const CellSummary& c) {
  out << c.experiment << ',' << to_string(c.variant) << ',' << format_double(c.beta) << ','
      << format_double(c.axis_value) << ',' << c.trials << ',' << format_double(c.mean_distance) << ','
      << to_string(c.majority) << ',' << c.majority_count << ',' << c.failed << ',' << c.fell_off << '\n';
}

// Groups rows by (experiment, variant, beta, axis) in first-seen order and
// summarizes each group.
inline std::vector<CellSummary> summarize_rows(const std::vector<SweepRow>& rows) {
  std::vector<std::vector<SweepRow>> groups;
  for (const auto& row : rows) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
      const auto& f = g.front();
      return f.experiment == row.experiment && f.variant == row.variant && f.beta == row.beta &&
             f.axis_value == row.axis_value;
    });
    if (it == groups.end())
      groups.push_back({row});
    else
      it->push_back(row);
  }
  std::vector<CellSummary> cells;
  for (const auto& g : groups) cells.push_back(summarize_cell(g));
  return cells;
}

// ---------------------------------------------------------------------------
// Output files

// Tracks files created by a command and deletes them unless commit() is
// called, so that a failing command leaves no partial outputs behind.
class OutputGuard {
 public:
  OutputGuard() = default;
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;
  ~OutputGuard() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : files_) std::filesystem::remove(p, ec);
  }

  std::ofstream open(const std::filesystem::path& path) {
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    files_.push_back(path);
    return out;
  }

  void commit() { committed_ = true; }
  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::vector<std::filesystem::path> files_;
  bool committed_ = false;
};

struct ManifestInfo {
  std::string started_utc;
  std::string finished_utc;
  Json command = Json::object();
};

inline Json sweep_manifest(const SweepGrid& grid, const SweepOptions& opts, const Json& overrides,
                           const ManifestInfo& info, const std::vector<std::filesystem::path>& files) {
  Json cells = Json::array();
  Json seeds = Json::array();
  for (const auto& job : sweep_jobs(grid)) {
    seeds.push_back({{"beta", job.beta}, {"axis_value", job.axis_value}, {"trial", job.trial}, {"seed", job.seed}});
    if (job.trial == 0) {
      TrialConfig cfg = job_config(grid, job, opts);
      Json c = to_json(cfg);
      c.erase("seed");
      cells.push_back({{"beta", job.beta}, {"axis_value", job.axis_value}, {"config", c}});
    }
  }
  Json checksums = Json::object();
  for (const auto& f : files) checksums[f.filename().string()] = file_checksum(f);
  Json options = {{"thresholds", to_json(opts.thresholds)}, {"overrides", overrides}};
  if (opts.control_steps) options["control_steps"] = *opts.control_steps;
  return {{"format", "centipede-manifest"},
          {"version", kManifestVersion},
          {"tool_version", kToolVersion},
          {"started_utc", info.started_utc},
          {"finished_utc", info.finished_utc},
          {"command", info.command},
          {"grid", to_json(grid)},
          {"options", options},
          {"resolved_configs", cells},
          {"seeds", seeds},
          {"checksums", checksums}};
}

}  // namespace centipede
