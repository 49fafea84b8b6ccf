#pragma once

// Scenario files, run orchestration and deterministic table output.
//
// Exit codes: 0 success, 1 I/O failure, 2 parse/validation error,
// 3 infeasible control, 4 unreachable target or no intercept,
// 5 numerical failure (domain exit, singular metric, no convergence).

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "parnav/kinematics.hpp"
#include "parnav/nav_metric.hpp"
#include "parnav/optimal_control.hpp"

namespace parnav {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitUnreachable = 4;
inline constexpr int kExitNumerical = 5;

enum class RunMode { simulate, optimal, pmp_check, sweep };
enum class OutputFormat { csv, json };

std::string_view to_string(RunMode mode);
std::optional<RunMode> parse_mode(std::string_view text);
std::optional<OutputFormat> parse_format(std::string_view text);

struct RunSettings {
  std::optional<RunMode> mode;
  std::string output_path = ".";
  std::vector<OutputFormat> formats{OutputFormat::csv};
};

struct ScenarioFile {
  int schema_version = 1;
  Scenario scenario;
  NavMetricParams metric;
  RunSettings run;
  std::string digest;  // FNV-1a of the canonical JSON form
};

/// Strict parse: unknown keys, wrong types and broken invariants are
/// rejected with ParseError (syntax, with line/column) or ValidationError
/// (naming the field).
ScenarioFile parse_scenario(std::string_view text);

struct TrajectoryTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  bool operator==(const TrajectoryTable&) const = default;
};

TrajectoryTable trajectory_table(const SimResult& result);

/// Table for a relative-frame curve rebuilt into pursuer/target/range paths.
TrajectoryTable trajectory_table(const CurveRecord& relative, const EngagementCurves& engagement,
                                 const std::vector<double>& delta);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

std::string serialize_table(const TrajectoryTable& table, OutputFormat format);
TrajectoryTable parse_table_json(std::string_view text);

struct SweepGrid {
  std::vector<double> K{1.2, 1.5, 2.0, 3.0};
  std::vector<double> theta_deg{0.0, 30.0, 60.0, 120.0};
};

/// "K=1.2,1.5;theta=0,30" (either part optional).
SweepGrid parse_grid(std::string_view spec);

struct SweepRow {
  double K = 0.0;
  double theta_deg = 0.0;
  std::string termination;  // simulation termination, or "infeasible-control"
  double delta0 = 0.0;
  double t_f_sim = 0.0;
  double t_f_closed = 0.0;
  double rel_err = 0.0;
};

/// One constant-velocity run per grid cell, evaluated in parallel and
/// returned in grid order.
std::vector<SweepRow> run_sweep(const ScenarioFile& file, const SweepGrid& grid);

struct RunOptions {
  std::optional<double> dt;
  std::optional<OutputFormat> format;
  std::optional<SweepGrid> grid;
  std::uint64_t seed = 0;
};

struct RunRecord {
  std::string digest;
  std::string version{kToolkitVersion};
  std::string mode;
  std::string termination;
  std::optional<double> t_f;
  std::vector<std::pair<std::string, double>> residuals;
  std::vector<std::string> tables;
};

struct RunOutcome {
  int exit_code = kExitOk;
  RunRecord record;
  std::vector<std::pair<std::string, std::string>> artifacts;  // file name → bytes
  std::string diagnostic;
};

/// Runs one mode without touching the filesystem.
RunOutcome run(const ScenarioFile& file, RunMode mode, const RunOptions& options = {});

std::string serialize_record(const RunRecord& record);

int exit_code_for(const std::exception& e);

}  // namespace parnav
