// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "lorentz_eikonal/geodesic.hpp"
#include "lorentz_eikonal/spacetime.hpp"

namespace lorentz_eikonal {

enum class DistanceBackend { Analytic, Shooting, DagOracle };

std::string_view to_string(DistanceBackend b);

struct DistanceResult {
  double value = 0.0;
  std::optional<Geodesic> realizer;
  DistanceBackend backend = DistanceBackend::Analytic;
};

// Lorentzian distance d(x, y), zero unless x << y. Flat kinds are evaluated in
// closed form; other kinds maximise over shooting-connected geodesics.
DistanceResult lorentz_distance(const Spacetime& st, const Event& x, const Event& y,
                                const Tolerances& tol = default_tolerances());

// Always uses the shooting backend, also on flat kinds.
DistanceResult lorentz_distance_shooting(const Spacetime& st, const Event& x, const Event& y,
                                         const Tolerances& tol = default_tolerances());

// Closed-form flat distance sqrt(dt^2 - |dx|^2) for chronological pairs, else 0.
double flat_distance(const Event& x, const Event& y, double tol_cone = default_tolerances().cone);

// Lattice for the longest-path oracle. The lattice is sheared so that x and y
// are nodes: node (i, j) sits at x + i/(time_nodes-1) (y - x) + j * dx in the
// spatial coordinates, j in [-(space_nodes-1)/2, (space_nodes-1)/2]^(dim-1).
struct OracleGrid {
  int time_nodes = 201;
  int space_nodes = 201;
  int stencil = 5;
  double margin = 0.05;  // extra spatial half-width beyond the causal diamond, relative
};

struct DagResult {
  double value = 0.0;
  bool reachable = false;
};

// Longest path from x to y over causal lattice arcs, arc weight the Lorentzian
// length of the straight chart segment. A lower bound for d(x, y).
DagResult dag_longest_path(const Spacetime& st, const Event& x, const Event& y, const OracleGrid& grid);

// As above; throws GridTooCoarse when y is unreachable although x << y.
double distance_oracle_dag(const Spacetime& st, const Event& x, const Event& y, const OracleGrid& grid = {},
                           const Tolerances& tol = default_tolerances());

struct DistanceRow {
  Event from;
  Event to;
  DistanceResult result;
};

void write_distance_csv(std::ostream& os, const Spacetime& st, const std::vector<DistanceRow>& rows);

}  // namespace lorentz_eikonal
