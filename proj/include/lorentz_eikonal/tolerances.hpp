// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace lorentz_eikonal {

// Numerical thresholds shared by all modules. Every field can be overridden
// from a run configuration; the defaults are the ones the test suites pin.
struct Tolerances {
  double classify = 1e-9;   // lightlike band, relative to |V|^2 (Euclidean in chart)
  double cone = 1e-7;       // light-cone membership, chart units
  double hit = 1e-12;       // surface-hit localisation in tau
  double ode = 1e-9;        // geodesic step error per unit arclength
  double bvp = 1e-9;        // shooting endpoint mismatch
  double dist = 1e-6;       // distance comparisons
  double solve = 1e-8;      // minimisation accuracy in value
  double cluster = 1e-6;    // minimiser clustering in value
  double cal = 1e-5;        // calibration identity
  double visc = 1e-3;       // viscosity inequalities / eikonal residual
  double kink = 1e-2;       // one-sided difference-quotient disagreement
  double fd_step = 1e-4;    // central-difference step
  double fd_metric = 1e-5;  // metric-derivative step for finite-difference Christoffels
};

inline const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

}  // namespace lorentz_eikonal
