// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lorentz_eikonal/causal.hpp"
#include "lorentz_eikonal/distance.hpp"
#include "lorentz_eikonal/errors.hpp"
#include "lorentz_eikonal/lax_oleinik.hpp"
#include "lorentz_eikonal/spacetime.hpp"
#include "lorentz_eikonal/verify.hpp"

namespace lorentz_eikonal {

// Raised for anything wrong with a configuration; the CLI exits with status 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::InvalidConfig, what) {}
};

enum class Task { Solve, Verify, Ray, Stability, Counterexample, Distance };

std::string_view to_string(Task t);

struct TaskParams {
  // ray
  std::optional<Event> point;
  // stability
  StabilityRule rule = StabilityRule::Sinusoidal;
  std::vector<int> terms{1, 2, 4, 8, 16};
  // counterexample
  double c = -1.0;
  // distance
  std::optional<Event> from;
  std::optional<Event> to;
  bool oracle = false;  // also run the lattice oracle
  // verify
  int probes = 400;
  int segments = 200;
  double collar = 0.05;  // fraction of (level - t_min) excluded below the surface
  double segment_length = 0.05;
  std::vector<double> levels;  // empty: three levels picked from the field range
  int achronal_points = 40;
  int achronal_pairs = 200;
  double waypoint_fraction = 0.5;
};

struct RunConfig {
  Task task = Task::Solve;
  std::uint64_t seed = 42;
  int threads = 1;
  std::optional<Spacetime> spacetime;
  std::optional<CauchySurface> surface;
  // Slope and offset when the datum is constant or linear; enables closed-form
  // comparisons on flat Minkowski space.
  std::optional<std::pair<Vec, double>> affine_datum;
  std::optional<GridSpec> grid;
  Tolerances tol;
  SolveOptions solve;
  VerifyOptions verify;
  OracleGrid oracle;
  TaskParams params;
  std::filesystem::path output_dir = "out";
  std::string digest;  // FNV-1a of the canonical configuration document
};

// Parses and validates a JSON configuration. Unknown keys and tolerance
// overrides outside (0, 1) are rejected. `task` replaces the task named in the
// document, which may then omit it. Throws ConfigError.
RunConfig parse_config(std::string_view json_text, std::optional<Task> task = std::nullopt);
RunConfig load_config(const std::filesystem::path& file, std::optional<Task> task = std::nullopt);

std::optional<Task> task_from_string(std::string_view name);

// Built-in setting of the two-dimensional counterexample: temporal x in
// [-2, 0], surface {x = 0} with zero data.
RunConfig counterexample_config(double c);

// LORENTZ_EIKONAL_OUT replaces the output directory, LORENTZ_EIKONAL_THREADS
// the thread count.
void apply_environment(RunConfig& cfg);

// "t,x[,y,z]" as an event of the given dimension.
Event parse_point(std::string_view text, int dim);

struct RunResult {
  int exit_code = 0;  // 0 success, 1 computation error
  std::string summary;
  std::string report_json;
  std::vector<std::filesystem::path> files;
};

// Runs the configured task and writes its CSV and JSON artifacts. Computation
// errors produce exit code 1 and a partial report.
RunResult run(const RunConfig& cfg);

}  // namespace lorentz_eikonal
