#include "parnav/scenario_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "parnav/errors.hpp"

namespace parnav {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ValidationError(path, path + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError(join(path, key), "unknown field '" + key + "'");
    }
  }
}

std::optional<double> opt_number(const json& j, const std::string& path, std::string_view key) {
  const auto it = j.find(std::string(key));
  if (it == j.end()) return std::nullopt;
  if (!it->is_number()) throw ValidationError(join(path, key), join(path, key) + " must be a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw ValidationError(join(path, key), join(path, key) + " must be finite");
  return v;
}

double req_number(const json& j, const std::string& path, std::string_view key) {
  auto v = opt_number(j, path, key);
  if (!v) throw ValidationError(join(path, key), "missing field '" + join(path, key) + "'");
  return *v;
}

Vec to_vec(const json& j, const std::string& field) {
  if (!j.is_array() || (j.size() != 2 && j.size() != 3)) {
    throw ValidationError(field, field + " must be an array of 2 or 3 numbers");
  }
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(field, field + " must contain numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    if (!std::isfinite(v(static_cast<Eigen::Index>(i)))) {
      throw ValidationError(field, field + " must be finite");
    }
  }
  return v;
}

Vec req_vec(const json& j, const std::string& path, std::string_view key) {
  const auto it = j.find(std::string(key));
  if (it == j.end()) throw ValidationError(join(path, key), "missing field '" + join(path, key) + "'");
  return to_vec(*it, join(path, key));
}

Mat to_mat(const json& j, const std::string& field, Eigen::Index n) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw ValidationError(field, field + " must be a " + std::to_string(n) + "x" +
                                     std::to_string(n) + " array");
  }
  Mat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec row = to_vec(j[static_cast<std::size_t>(i)], field);
    if (row.size() != n) throw ValidationError(field, field + " rows must have " + std::to_string(n) + " entries");
    m.row(i) = row.transpose();
  }
  return m;
}

std::pair<int, int> line_column(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  int line = 1;
  int column = 1;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  static constexpr char digits[] = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[h & 0xF];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

TargetProgram parse_target(const json& j, const Vec& r0) {
  const std::string path = "scenario.target";
  check_keys(j, path, {"program", "velocity", "speed", "theta0_deg", "segments", "waypoints"});
  std::string program = "constant";
  if (auto it = j.find("program"); it != j.end()) {
    if (!it->is_string()) throw ValidationError(path + ".program", "program must be a string");
    program = it->get<std::string>();
  }
  const auto only = [&](std::initializer_list<std::string_view> keys) {
    for (const auto& [key, value] : j.items()) {
      if (key == "program") continue;
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw ValidationError(join(path, key), "field '" + key + "' not allowed for program '" + program + "'");
      }
    }
  };

  if (program == "constant") {
    only({"velocity", "speed", "theta0_deg"});
    if (j.contains("velocity")) {
      if (j.contains("speed") || j.contains("theta0_deg")) {
        throw ValidationError(path + ".velocity", "give either velocity or speed/theta0_deg, not both");
      }
      const Vec v = req_vec(j, path, "velocity");
      if (v.size() != r0.size()) throw ValidationError(path + ".velocity", "velocity dimension must match r0");
      return TargetProgram::constant(v);
    }
    const double speed = req_number(j, path, "speed");
    const double theta_deg = req_number(j, path, "theta0_deg");
    if (speed < 0.0) throw ValidationError(path + ".speed", "speed must be >= 0");
    if (r0.size() != 2) throw ValidationError(path + ".theta0_deg", "theta0_deg requires a planar r0; give velocity");
    const double theta = theta_deg * std::numbers::pi / 180.0;
    const double los = std::atan2(r0(1), r0(0));
    return TargetProgram::constant(vec2(speed * std::cos(los + theta), speed * std::sin(los + theta)));
  }
  if (program == "piecewise") {
    only({"segments"});
    const auto it = j.find("segments");
    if (it == j.end() || !it->is_array() || it->empty()) {
      throw ValidationError(path + ".segments", "segments must be a non-empty array");
    }
    std::vector<VelocitySegment> segs;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string p = path + ".segments[" + std::to_string(i) + "]";
      const json& s = (*it)[i];
      check_keys(s, p, {"t_start", "velocity"});
      VelocitySegment seg;
      seg.t_start = req_number(s, p, "t_start");
      seg.velocity = req_vec(s, p, "velocity");
      if (seg.velocity.size() != r0.size()) throw ValidationError(p + ".velocity", "velocity dimension must match r0");
      if (i == 0 && seg.t_start != 0.0) throw ValidationError(p + ".t_start", "first segment must start at 0");
      if (i > 0 && !(seg.t_start > segs.back().t_start)) {
        throw ValidationError(p + ".t_start", "segment start times must increase");
      }
      segs.push_back(seg);
    }
    return TargetProgram::piecewise(std::move(segs));
  }
  if (program == "waypoints") {
    only({"waypoints"});
    const auto it = j.find("waypoints");
    if (it == j.end() || !it->is_array() || it->size() < 2) {
      throw ValidationError(path + ".waypoints", "waypoints must be an array of at least 2 entries");
    }
    std::vector<Waypoint> wps;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string p = path + ".waypoints[" + std::to_string(i) + "]";
      const json& w = (*it)[i];
      check_keys(w, p, {"t", "position"});
      Waypoint wp;
      wp.t = req_number(w, p, "t");
      wp.position = req_vec(w, p, "position");
      if (wp.position.size() != r0.size()) throw ValidationError(p + ".position", "position dimension must match r0");
      if (i == 0 && wp.t != 0.0) throw ValidationError(p + ".t", "first waypoint must be at t = 0");
      if (i == 0 && wp.position != r0) {
        throw ValidationError(p + ".position", "first waypoint must equal r0");
      }
      if (i > 0 && !(wp.t > wps.back().t)) throw ValidationError(p + ".t", "waypoint times must increase");
      wps.push_back(wp);
    }
    return TargetProgram::from_waypoints(wps);
  }
  throw ValidationError(path + ".program", "program must be constant, piecewise or waypoints");
}

RunSettings parse_run(const json& j) {
  const std::string path = "run";
  check_keys(j, path, {"mode", "output_path", "formats"});
  RunSettings rs;
  if (auto it = j.find("mode"); it != j.end()) {
    if (!it->is_string()) throw ValidationError("run.mode", "mode must be a string");
    rs.mode = parse_mode(it->get<std::string>());
    if (!rs.mode) throw ValidationError("run.mode", "mode must be simulate, optimal, pmp-check or sweep");
  }
  if (auto it = j.find("output_path"); it != j.end()) {
    if (!it->is_string()) throw ValidationError("run.output_path", "output_path must be a string");
    rs.output_path = it->get<std::string>();
  }
  if (auto it = j.find("formats"); it != j.end()) {
    if (!it->is_array() || it->empty()) throw ValidationError("run.formats", "formats must be a non-empty array");
    rs.formats.clear();
    for (const auto& f : *it) {
      const auto fmt = f.is_string() ? parse_format(f.get<std::string>()) : std::nullopt;
      if (!fmt) throw ValidationError("run.formats", "formats entries must be \"csv\" or \"json\"");
      if (std::find(rs.formats.begin(), rs.formats.end(), *fmt) == rs.formats.end()) rs.formats.push_back(*fmt);
    }
  }
  return rs;
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

// Signed planar angle from a to b (3D: unsigned).
double angle_between(const Vec& a, const Vec& b) {
  if (a.size() == 2) return std::atan2(cross_z(a, b), a.dot(b));
  return std::atan2(cross_norm(a, b), a.dot(b));
}

void append_vec(std::vector<double>& row, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v(i));
}

std::vector<std::string> trajectory_columns(int n) {
  static constexpr const char* axes[] = {"x", "y", "z"};
  std::vector<std::string> cols{"t"};
  for (const char* prefix : {"r_", "rM_", "rT_"}) {
    for (int i = 0; i < n; ++i) cols.push_back(std::string(prefix) + axes[i]);
  }
  for (const char* c : {"delta", "theta", "lambda", "F"}) cols.emplace_back(c);
  return cols;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "K,theta0_deg,termination,delta0,t_f_sim,t_f_closed,rel_err\n";
  for (const auto& r : rows) {
    out += format_double(r.K) + "," + format_double(r.theta_deg) + "," + csv_escape(r.termination) + "," +
           format_double(r.delta0) + "," + format_double(r.t_f_sim) + "," + format_double(r.t_f_closed) +
           "," + format_double(r.rel_err) + "\n";
  }
  return out;
}

std::string sweep_json(const std::vector<SweepRow>& rows) {
  ordered_json j;
  j["columns"] = {"K", "theta0_deg", "termination", "delta0", "t_f_sim", "t_f_closed", "rel_err"};
  j["rows"] = ordered_json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({number_or_null(r.K), number_or_null(r.theta_deg), r.termination,
                         number_or_null(r.delta0), number_or_null(r.t_f_sim),
                         number_or_null(r.t_f_closed), number_or_null(r.rel_err)});
  }
  return j.dump(2) + "\n";
}

std::vector<OutputFormat> formats_for(const ScenarioFile& file, const RunOptions& options) {
  if (options.format) return {*options.format};
  return file.run.formats;
}

std::string_view extension(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "json"; }

std::vector<double> parse_list(std::string_view text, const std::string& field) {
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || !std::isfinite(v)) {
      throw ValidationError(field, "bad number '" + std::string(item) + "' in " + field);
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ValidationError(field, field + " list is empty");
  return out;
}

}  // namespace

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::simulate: return "simulate";
    case RunMode::optimal: return "optimal";
    case RunMode::pmp_check: return "pmp-check";
    case RunMode::sweep: return "sweep";
  }
  return "unknown";
}

std::optional<RunMode> parse_mode(std::string_view text) {
  for (RunMode m : {RunMode::simulate, RunMode::optimal, RunMode::pmp_check, RunMode::sweep}) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

std::optional<OutputFormat> parse_format(std::string_view text) {
  if (text == "csv") return OutputFormat::csv;
  if (text == "json") return OutputFormat::json;
  return std::nullopt;
}

ScenarioFile parse_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string msg = e.what();
    if (const auto pos = msg.find(": syntax error"); pos != std::string::npos) msg = msg.substr(pos + 2);
    throw ParseError(msg, line, col);
  }

  check_keys(root, "", {"schema_version", "scenario", "metric", "run"});
  ScenarioFile file;
  {
    const auto it = root.find("schema_version");
    if (it == root.end()) throw ValidationError("schema_version", "missing field 'schema_version'");
    if (!it->is_number_integer() || it->get<long long>() != 1) {
      throw ValidationError("schema_version", "schema_version must be 1");
    }
  }

  const auto sit = root.find("scenario");
  if (sit == root.end()) throw ValidationError("scenario", "missing field 'scenario'");
  const json& sj = *sit;
  check_keys(sj, "scenario", {"r0", "K", "target", "dt", "hit_radius", "t_max"});
  Scenario& sc = file.scenario;
  sc.initial_range = req_vec(sj, "scenario", "r0");
  if (!(sc.initial_range.norm() > 0.0)) throw ValidationError("scenario.r0", "|r0| must be > 0");
  const auto tit = sj.find("target");
  if (tit == sj.end()) throw ValidationError("scenario.target", "missing field 'scenario.target'");
  sc.target = parse_target(*tit, sc.initial_range);
  sc.dt = opt_number(sj, "scenario", "dt").value_or(1e-3);
  if (!(sc.dt > 0.0)) throw ValidationError("scenario.dt", "dt must be > 0");
  sc.hit_radius = opt_number(sj, "scenario", "hit_radius").value_or(1e-6 * sc.initial_range.norm());
  if (!(sc.hit_radius >= 0.0)) throw ValidationError("scenario.hit_radius", "hit_radius must be >= 0");
  if (!(sc.initial_range.norm() > sc.hit_radius)) {
    throw ValidationError("scenario.hit_radius", "|r0| must exceed hit_radius");
  }
  sc.t_max = opt_number(sj, "scenario", "t_max").value_or(1000.0);
  if (!(sc.t_max > 0.0)) throw ValidationError("scenario.t_max", "t_max must be > 0");
  const auto K = opt_number(sj, "scenario", "K");
  if (K && !(*K > 0.0)) throw ValidationError("scenario.K", "K must be > 0");

  std::optional<double> vM;
  double delta = 0.0;
  std::optional<TargetVelocityField> field;
  if (auto mit = root.find("metric"); mit != root.end()) {
    const json& mj = *mit;
    check_keys(mj, "metric", {"v_M", "delta", "v_T_field"});
    vM = opt_number(mj, "metric", "v_M");
    if (vM && !(*vM > 0.0)) throw ValidationError("metric.v_M", "v_M must be > 0");
    delta = opt_number(mj, "metric", "delta").value_or(0.0);
    if (!(std::abs(delta) < std::numbers::pi / 2)) {
      throw ValidationError("metric.delta", "delta must lie in (-pi/2, pi/2)");
    }
    if (auto fit = mj.find("v_T_field"); fit != mj.end()) {
      check_keys(*fit, "metric.v_T_field", {"base", "gradient"});
      const Vec base = req_vec(*fit, "metric.v_T_field", "base");
      if (base.size() != sc.initial_range.size()) {
        throw ValidationError("metric.v_T_field.base", "base dimension must match r0");
      }
      Mat grad = Mat::Zero(base.size(), base.size());
      if (auto git = fit->find("gradient"); git != fit->end()) {
        grad = to_mat(*git, "metric.v_T_field.gradient", base.size());
      }
      field = TargetVelocityField::affine(base, grad);
    }
  }

  const double vt0 = sc.target.initial_speed();
  if (K) {
    if (!(vt0 > 0.0)) throw ValidationError("scenario.K", "K needs a moving target; give metric.v_M instead");
    const double from_K = *K * vt0;
    if (vM && std::abs(*vM - from_K) > 1e-9 * std::max(*vM, from_K)) {
      throw ValidationError("metric.v_M", "metric.v_M disagrees with K times the target speed");
    }
    sc.pursuer_speed = from_K;
  } else if (vM) {
    sc.pursuer_speed = *vM;
  } else {
    throw ValidationError("scenario.K", "missing field 'scenario.K' (or metric.v_M)");
  }

  file.metric.pursuer_speed = sc.pursuer_speed;
  file.metric.delta = delta;
  file.metric.target_velocity = field.value_or(TargetVelocityField::constant(sc.target.velocity_at(0.0)));

  try {
    sc.validate();
  } catch (const InvalidInputError& e) {
    throw ValidationError("scenario", e.what());
  }
  try {
    file.metric.validate();
  } catch (const Error& e) {
    throw ValidationError("metric", e.what());
  }

  if (auto rit = root.find("run"); rit != root.end()) file.run = parse_run(*rit);
  file.digest = fnv1a_hex(root.dump());
  return file;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return std::signbit(v) ? "-0" : "0";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

TrajectoryTable trajectory_table(const SimResult& result) {
  TrajectoryTable table;
  if (result.trajectory.empty()) return table;
  const int n = static_cast<int>(result.trajectory.front().r.size());
  table.columns = trajectory_columns(n);
  for (const auto& s : result.trajectory) {
    std::vector<double> row{s.t};
    append_vec(row, s.r);
    append_vec(row, s.r_M);
    append_vec(row, s.r_T);
    row.insert(row.end(), {s.delta, s.theta, s.lambda, s.F});
    table.rows.push_back(std::move(row));
  }
  return table;
}

TrajectoryTable trajectory_table(const CurveRecord& relative, const EngagementCurves& engagement,
                                 const std::vector<double>& delta) {
  relative.validate();
  if (delta.size() != relative.size()) throw InvalidInputError("delta must have one entry per node");
  TrajectoryTable table;
  const int n = static_cast<int>(relative.positions.front().size());
  table.columns = trajectory_columns(n);
  const Vec& r_first = engagement.range.positions.front();
  double last_lambda = std::atan2(r_first(1), r_first(0));
  for (std::size_t k = 0; k < relative.size(); ++k) {
    const Vec& r = engagement.range.positions[k];
    const Vec& vt = engagement.target.velocities[k];
    std::vector<double> row{relative.times[k]};
    append_vec(row, r);
    append_vec(row, engagement.pursuer.positions[k]);
    append_vec(row, engagement.target.positions[k]);
    // r vanishes at the terminal node; keep the last LOS there.
    const bool has_los = r.norm() > 1e-9 * r_first.norm();
    if (has_los) last_lambda = std::atan2(r(1), r(0));
    const Vec los = has_los ? Vec(r.normalized()) : Vec(r_first.normalized());
    const double theta = vt.norm() > 0.0 ? wrap_angle(angle_between(los, vt)) : 0.0;
    row.insert(row.end(), {delta[k], theta, last_lambda, relative.F_values[k]});
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string serialize_table(const TrajectoryTable& table, OutputFormat format) {
  if (format == OutputFormat::csv) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(table.columns[i]);
    }
    out += '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += format_double(row[i]);
      }
      out += '\n';
    }
    return out;
  }
  ordered_json j;
  j["columns"] = table.columns;
  j["rows"] = ordered_json::array();
  for (const auto& row : table.rows) {
    ordered_json r = ordered_json::array();
    for (double v : row) {
      if (std::isfinite(v)) {
        r.push_back(v);
      } else {
        r.push_back(nullptr);
      }
    }
    j["rows"].push_back(std::move(r));
  }
  return j.dump() + "\n";
}

TrajectoryTable parse_table_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(e.what(), line, col);
  }
  if (!j.is_object() || !j.contains("columns") || !j.contains("rows")) {
    throw ValidationError("table", "table must have columns and rows");
  }
  TrajectoryTable t;
  t.columns = j["columns"].get<std::vector<std::string>>();
  for (const auto& row : j["rows"]) {
    std::vector<double> r;
    for (const auto& v : row) r.push_back(v.is_null() ? kNaN : v.get<double>());
    if (r.size() != t.columns.size()) throw ValidationError("rows", "row width differs from columns");
    t.rows.push_back(std::move(r));
  }
  return t;
}

SweepGrid parse_grid(std::string_view spec) {
  SweepGrid grid;
  while (!spec.empty()) {
    const auto semi = spec.find(';');
    const std::string_view part = spec.substr(0, semi);
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) throw ValidationError("grid", "grid parts must look like name=v1,v2");
    const std::string_view name = part.substr(0, eq);
    if (name == "K") {
      grid.K = parse_list(part.substr(eq + 1), "grid.K");
      for (double k : grid.K) {
        if (!(k > 0.0)) throw ValidationError("grid.K", "K must be > 0");
      }
    } else if (name == "theta") {
      grid.theta_deg = parse_list(part.substr(eq + 1), "grid.theta");
    } else {
      throw ValidationError("grid", "unknown grid axis '" + std::string(name) + "'");
    }
    if (semi == std::string_view::npos) break;
    spec.remove_prefix(semi + 1);
  }
  return grid;
}

std::vector<SweepRow> run_sweep(const ScenarioFile& file, const SweepGrid& grid) {
  const Scenario& base = file.scenario;
  const double vt = base.target.initial_speed();
  if (!(vt > 0.0)) throw ValidationError("scenario.target", "sweep needs a moving target");
  if (base.initial_range.size() != 2) throw ValidationError("scenario.r0", "sweep needs a planar r0");
  const double r0 = base.initial_range.norm();

  std::vector<std::future<SweepRow>> jobs;
  for (double K : grid.K) {
    for (double theta_deg : grid.theta_deg) {
      jobs.push_back(std::async(std::launch::async, [=, &base] {
        SweepRow row{K, theta_deg, "", kNaN, kNaN, kNaN, kNaN};
        const double theta = theta_deg * std::numbers::pi / 180.0;
        try {
          row.delta0 = pn_control_delta(theta, K);
        } catch (const InfeasibleControlError&) {
          row.termination = std::string(to_string(Termination::infeasible_control));
          return row;
        }
        const Scenario sc = Scenario::constant_target(base.initial_range, vt, theta, K, base.dt,
                                                      base.hit_radius, base.t_max);
        const SimResult res = simulate(sc);
        row.termination = std::string(to_string(res.termination));
        if (res.t_f) row.t_f_sim = *res.t_f;
        try {
          row.t_f_closed = nonmaneuvering_closed_form(r0, vt, K, theta).t_f;
        } catch (const Error&) {
        }
        if (std::isfinite(row.t_f_sim) && std::isfinite(row.t_f_closed)) {
          row.rel_err = std::abs(row.t_f_sim - row.t_f_closed) / row.t_f_closed;
        }
        return row;
      }));
    }
  }
  std::vector<SweepRow> rows;
  rows.reserve(jobs.size());
  for (auto& j : jobs) rows.push_back(j.get());
  return rows;
}

std::string serialize_record(const RunRecord& record) {
  ordered_json j;
  j["digest"] = record.digest;
  j["version"] = record.version;
  j["mode"] = record.mode;
  j["termination"] = record.termination;
  j["t_f"] = record.t_f ? number_or_null(*record.t_f) : json(nullptr);
  ordered_json res = ordered_json::object();
  for (const auto& [name, value] : record.residuals) res[name] = number_or_null(value);
  j["residuals"] = res;
  j["tables"] = record.tables;
  return j.dump(2) + "\n";
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const InvalidInputError*>(&e)) {
    return kExitParse;
  }
  if (dynamic_cast<const InfeasibleControlError*>(&e)) return kExitInfeasible;
  if (dynamic_cast<const UnreachableError*>(&e)) return kExitUnreachable;
  if (dynamic_cast<const Error*>(&e)) return kExitNumerical;
  return kExitIo;
}

RunOutcome run(const ScenarioFile& file, RunMode mode, const RunOptions& options) {
  RunOutcome out;
  RunRecord& rec = out.record;
  rec.digest = file.digest;
  rec.mode = std::string(to_string(mode));
  ScenarioFile f = file;
  if (options.dt) {
    if (!(*options.dt > 0.0)) {
      out.exit_code = kExitParse;
      out.diagnostic = "--dt must be > 0";
      return out;
    }
    f.scenario.dt = *options.dt;
  }
  const auto formats = formats_for(f, options);
  const auto emit_table = [&](const std::string& stem, const TrajectoryTable& table) {
    for (OutputFormat fmt : formats) {
      const std::string name = stem + "." + std::string(extension(fmt));
      out.artifacts.emplace_back(name, serialize_table(table, fmt));
      rec.tables.push_back(name);
    }
  };

  try {
    switch (mode) {
      case RunMode::simulate: {
        const SimResult res = simulate(f.scenario);
        rec.termination = std::string(to_string(res.termination));
        rec.t_f = res.t_f;
        switch (res.termination) {
          case Termination::hit: break;
          case Termination::infeasible_control: out.exit_code = kExitInfeasible; break;
          case Termination::timeout: out.exit_code = kExitUnreachable; break;
          case Termination::domain_exit: out.exit_code = kExitNumerical; break;
        }
        if (out.exit_code != kExitOk) {
          out.diagnostic = res.message.empty() ? rec.termination : res.message;
          return out;
        }
        const SimResult unit = reparametrize_unit_F(res, f.scenario.pursuer_speed);
        double max_dev = 0.0;
        for (const auto& s : unit.trajectory) max_dev = std::max(max_dev, std::abs(s.F - 1.0));
        rec.residuals.emplace_back("max_unit_F_deviation", max_dev);
        rec.residuals.emplace_back("los_drift", los_drift(res));
        rec.residuals.emplace_back("collinearity_defect", collinearity_defect(res));
        if (f.scenario.target.kind() == TargetProgram::Kind::constant_velocity &&
            f.scenario.initial_range.size() == 2) {
          const Vec vt = f.scenario.target.velocity_at(0.0);
          const double theta0 = res.trajectory.front().theta;
          try {
            const ClosedForm cf = nonmaneuvering_closed_form_speeds(
                f.scenario.initial_range.norm(), vt.norm(), f.scenario.pursuer_speed, theta0);
            rec.residuals.emplace_back("t_f_closed_form", cf.t_f);
            rec.residuals.emplace_back("t_f_rel_err", std::abs(*res.t_f - cf.t_f) / cf.t_f);
          } catch (const Error&) {
          }
        }
        emit_table("trajectory", trajectory_table(res));
        break;
      }
      case RunMode::optimal:
      case RunMode::pmp_check: {
        const CurveRecord curve = optimal_trajectory(f.scenario, f.metric.target_velocity);
        rec.termination = "hit";
        rec.t_f = curve.times.back();
        const std::vector<double> zeros(curve.size(), 0.0);
        if (mode == RunMode::optimal) {
          const EngagementCurves eng =
              engagement_from_relative(curve, f.metric.target_velocity, f.scenario.initial_range);
          const Metric m0(f.metric.with_delta(0.0));
          rec.residuals.emplace_back("travel_time", curve.times.back());
          rec.residuals.emplace_back("action_F", action_integral(m0, curve, Lagrangian::F));
          // Residual of L = F² is twice that of F²/2.
          const auto el = euler_lagrange_residual(m0, curve);
          rec.residuals.emplace_back("max_el_residual",
                                     el.empty() ? 0.0 : 2.0 * *std::max_element(el.begin(), el.end()));
          emit_table("optimal", trajectory_table(curve, eng, zeros));
        } else {
          const OptimalityReport rep = pmp_check(f.metric, curve, zeros);
          const MonotonicityReport mono =
              metric_monotonicity_check(f.metric, 10000, curve, options.seed);
          rec.residuals.emplace_back("adjoint_residual", rep.adjoint_residual);
          rec.residuals.emplace_back("hamiltonian_max_gap", rep.hamiltonian_max_gap);
          rec.residuals.emplace_back("hamiltonian_value", rep.hamiltonian_value);
          rec.residuals.emplace_back("el_residual", rep.el_residual);
          ordered_json j;
          j["digest"] = rec.digest;
          j["seed"] = options.seed;
          j["travel_time"] = curve.times.back();
          j["nodes"] = curve.size();
          j["adjoint_residual"] = rep.adjoint_residual;
          j["hamiltonian_max_gap"] = rep.hamiltonian_max_gap;
          j["hamiltonian_value"] = rep.hamiltonian_value;
          j["el_residual"] = rep.el_residual;
          j["adjoint_ok"] = rep.adjoint_ok;
          j["maximum_ok"] = rep.maximum_ok;
          j["hamiltonian_zero_ok"] = rep.hamiltonian_zero_ok;
          j["el_ok"] = rep.el_ok;
          j["all_ok"] = rep.all_ok();
          j["monotonicity"] = {{"samples", mono.samples},
                               {"pointwise_violations", mono.pointwise_violations},
                               {"max_pointwise_violation", mono.max_pointwise_violation},
                               {"length_violations", mono.length_violations},
                               {"max_length_violation", mono.max_length_violation},
                               {"min_length", mono.min_length},
                               {"argmin_delta", mono.argmin_delta}};
          out.artifacts.emplace_back("pmp_report.json", j.dump(2) + "\n");
          rec.tables.emplace_back("pmp_report.json");
        }
        break;
      }
      case RunMode::sweep: {
        const auto rows = run_sweep(f, options.grid.value_or(SweepGrid{}));
        rec.termination = "complete";
        double worst = 0.0;
        int hits = 0;
        for (const auto& r : rows) {
          if (r.termination == to_string(Termination::hit)) ++hits;
          if (std::isfinite(r.rel_err)) worst = std::max(worst, r.rel_err);
        }
        rec.residuals.emplace_back("cells", static_cast<double>(rows.size()));
        rec.residuals.emplace_back("hits", hits);
        rec.residuals.emplace_back("max_rel_err", worst);
        for (OutputFormat fmt : formats) {
          const std::string name = "sweep." + std::string(extension(fmt));
          out.artifacts.emplace_back(name, fmt == OutputFormat::csv ? sweep_csv(rows) : sweep_json(rows));
          rec.tables.push_back(name);
        }
        break;
      }
    }
  } catch (const std::exception& e) {
    out.exit_code = exit_code_for(e);
    out.diagnostic = e.what();
    out.artifacts.clear();
    rec.tables.clear();
    return out;
  }
  out.artifacts.emplace_back("run.json", serialize_record(rec));
  return out;
}

}  // namespace parnav
