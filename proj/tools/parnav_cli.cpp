// parnav: run pursuit scenarios from JSON files.
//
//   parnav simulate|optimal|pmp-check|sweep <scenario.json>
//          [--out DIR] [--format csv|json] [--seed N] [--dt X] [--grid SPEC]

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "parnav/errors.hpp"
#include "parnav/scenario_io.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Parallel-navigation pursuit toolkit", "parnav"};
  app.set_version_flag("--version", std::string(parnav::kToolkitVersion));
  std::string mode_text;
  std::string scenario_path;
  std::optional<std::string> out_dir;
  std::optional<std::string> format_text;
  std::uint64_t seed = 0;
  std::optional<double> dt;
  std::optional<std::string> grid_text;
  app.add_option("mode", mode_text, "simulate | optimal | pmp-check | sweep")->required();
  app.add_option("scenario", scenario_path, "scenario JSON file")->required();
  app.add_option("--out", out_dir, "output directory (default: run.output_path)");
  app.add_option("--format", format_text, "csv | json (overrides run.formats)");
  app.add_option("--seed", seed, "seed for randomized checks");
  app.add_option("--dt", dt, "integration step override");
  app.add_option("--grid", grid_text, "sweep grid, e.g. K=1.2,1.5;theta=0,30");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return parnav::kExitParse;
  }

  const auto mode = parnav::parse_mode(mode_text);
  if (!mode) {
    std::cerr << "parnav: unknown mode '" << mode_text << "'\n";
    return parnav::kExitParse;
  }

  std::ifstream in(scenario_path, std::ios::binary);
  if (!in) {
    std::cerr << "parnav: cannot read " << scenario_path << "\n";
    return parnav::kExitIo;
  }
  std::ostringstream buf;
  buf << in.rdbuf();

  parnav::ScenarioFile file;
  parnav::RunOptions options;
  options.seed = seed;
  options.dt = dt;
  try {
    file = parnav::parse_scenario(buf.str());
    if (format_text) {
      options.format = parnav::parse_format(*format_text);
      if (!options.format) throw parnav::ValidationError("--format", "--format must be csv or json");
    }
    if (grid_text) options.grid = parnav::parse_grid(*grid_text);
  } catch (const parnav::ParseError& e) {
    std::cerr << scenario_path << ":" << e.line() << ":" << e.column() << ": parse error: " << e.what() << "\n";
    return parnav::kExitParse;
  } catch (const parnav::ValidationError& e) {
    std::cerr << scenario_path << ": invalid " << e.field() << ": " << e.what() << "\n";
    return parnav::kExitParse;
  }

  const parnav::RunOutcome outcome = parnav::run(file, *mode, options);
  if (outcome.exit_code != parnav::kExitOk) {
    std::cerr << "parnav " << parnav::to_string(*mode) << ": " << outcome.diagnostic << "\n";
    return outcome.exit_code;
  }

  const fs::path dir = out_dir.value_or(file.run.output_path);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::cerr << "parnav: cannot create " << dir << ": " << ec.message() << "\n";
    return parnav::kExitIo;
  }
  for (const auto& [name, bytes] : outcome.artifacts) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << bytes;
    if (!out) {
      std::cerr << "parnav: cannot write " << (dir / name) << "\n";
      return parnav::kExitIo;
    }
  }
  const auto& rec = outcome.record;
  std::cout << parnav::to_string(*mode) << ": " << rec.termination;
  if (rec.t_f) std::cout << " t_f=" << parnav::format_double(*rec.t_f);
  std::cout << " -> " << dir.string() << "\n";
  return parnav::kExitOk;
}
