// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "lorentz_eikonal/causal.hpp"
#include "lorentz_eikonal/geodesic.hpp"
#include "lorentz_eikonal/spacetime.hpp"

namespace lorentz_eikonal {

enum class SolveStatus { InteriorMin, BoundaryMin, Degenerate };

std::string_view to_string(SolveStatus s);

struct SolveResult {
  Event point;
  double value = 0.0;
  std::vector<Event> minimizers;  // events on the surface, best first
  std::optional<Geodesic> calibrated;
  SolveStatus status = SolveStatus::InteriorMin;
  double footprint_radius = 0.0;
  long evaluations = 0;
};

struct SolveOptions {
  int scan_points = 64;              // coarse scan points per spatial dimension
  double degenerate_radius = 1e-12;  // footprints smaller than this collapse to their centre
  int max_refine_seeds = 6;          // simplex restarts in two or more spatial dimensions
  double minimizer_separation = 1e-5;
  Tolerances tol;
};

// u(x) = min over y in J+(x) on the surface of phi(y) - d(x, y).
SolveResult solve_at(const Spacetime& st, const CauchySurface& surface, const Event& x, const SolveOptions& opts = {});

// Future-side representation for x after the surface:
// u(x) = -max over y in J-(x) on the surface of phi(y) + d(y, x).
SolveResult solve_future_side(const Spacetime& st, const CauchySurface& surface, const Event& x,
                              const SolveOptions& opts = {});

// Rectangular lattice: temporal axis from t_begin to t_end (end excluded when
// t_end_open), spatial axes closed.
struct GridSpec {
  double t_begin = -1.0;
  double t_end = 1.0;
  int t_nodes = 51;
  bool t_end_open = true;
  std::vector<std::array<double, 2>> space;
  std::vector<int> space_nodes;

  std::size_t size() const;
  double t_at(int k) const;
  double space_at(int axis, int k) const;
  // Node in row-major order with the temporal index slowest.
  Event node(std::size_t flat) const;
  std::vector<Event> nodes() const;
};

struct NodeDiagnostics {
  Event minimizer;
  SolveStatus status = SolveStatus::InteriorMin;
  int minimizer_count = 0;
  std::string error;  // empty when the node solved
};

struct SolutionField {
  GridSpec grid;
  std::vector<double> values;
  std::vector<NodeDiagnostics> diagnostics;

  std::size_t error_count() const;
  // Multilinear interpolation; throws DomainEdge outside the lattice.
  double interpolate(const Event& p) const;
};

// solve_at at every node; per-node failures are recorded, not thrown. The
// result does not depend on `threads`.
SolutionField solve_grid(const Spacetime& st, const CauchySurface& surface, const GridSpec& grid,
                         const SolveOptions& opts = {}, int threads = 1);

// Proper-time maximal geodesic from x to its (first) minimiser.
Geodesic calibrated_ray(const Spacetime& st, const CauchySurface& surface, const SolveResult& result, const Event& x,
                        const SolveOptions& opts = {});

// Event on a proper-time parametrised curve at parameter s.
Event point_at_parameter(const Spacetime& st, const Curve& c, double s);

// max over sampled t of |u(gamma(t)) - u(x) - t| along a calibrated ray.
double calibration_defect(const Spacetime& st, const CauchySurface& surface, const Geodesic& ray, double base_value,
                          int samples = 21, const SolveOptions& opts = {});

// z -> phi(y_x) - d(z, p) - d(p, y_x) with p the waypoint on the calibrated ray
// at fraction `fraction` of d(x, y_x). Infinite where z is not in I-(p).
class UpperSupport {
 public:
  UpperSupport(Spacetime st, Event waypoint, double datum_value, double tail_distance, double fraction, Tolerances tol);

  double operator()(const Event& z) const;
  const Event& waypoint() const { return waypoint_; }
  double fraction() const { return fraction_; }
  double tail_distance() const { return tail_; }

 private:
  Spacetime st_;
  Event waypoint_;
  double datum_value_;
  double tail_;
  double fraction_;
  Tolerances tol_;
};

UpperSupport upper_support(const Spacetime& st, const CauchySurface& surface, const Event& x, double fraction = 0.5,
                           const SolveOptions& opts = {});

void write_solution_csv(std::ostream& os, const Spacetime& st, const SolutionField& field);

}  // namespace lorentz_eikonal
