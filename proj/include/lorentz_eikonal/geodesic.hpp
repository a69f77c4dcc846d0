// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "lorentz_eikonal/spacetime.hpp"

namespace lorentz_eikonal {

enum class Parametrization { Affine, HArclength, ProperTime };

struct CurveSample {
  double s = 0.0;
  Event point;
  Vec tangent;
};

// Sampled parametrised curve; parameters strictly increase.
struct Curve {
  std::vector<CurveSample> samples;
  Parametrization parametrization = Parametrization::Affine;

  const Event& front() const { return samples.front().point; }
  const Event& back() const { return samples.back().point; }
  double parameter_span() const { return samples.back().s - samples.front().s; }
};

struct Geodesic {
  Curve curve;
  Event start;
  Vec initial_velocity;
  double last_step = 0.0;       // final accepted step in the curve parameter
  double error_estimate = 0.0;  // accumulated Richardson estimate

  const Event& end() const { return curve.back(); }
};

struct StopRule {
  enum class Kind { ReachTime, ProperTimeBudget, LeaveSlab };
  Kind kind = Kind::LeaveSlab;
  double value = 0.0;

  static StopRule reach_time(double level) { return {Kind::ReachTime, level}; }
  static StopRule proper_time(double budget) { return {Kind::ProperTimeBudget, budget}; }
  static StopRule leave_slab() { return {Kind::LeaveSlab, 0.0}; }
};

struct IntegratorOptions {
  double max_arc_step = 0.02;  // largest step, measured in Euclidean chart length
  double min_arc_step = 1e-9;
  std::size_t max_steps = 200000;
};

// Integrates x'' = -Gamma(x)(x', x') with an RK4 step, step-doubling error
// estimate and halving until the local error is below tol.ode per unit arclength.
// The terminal event of the stop rule is located by bisection to tol.hit.
Geodesic integrate_geodesic(const Spacetime& st, const Event& p, const Vec& velocity, StopRule stop,
                            const Tolerances& tol = default_tolerances(), const IntegratorOptions& opts = {});

// One classical RK4 step of the geodesic flow from (x, v) with parameter step h.
void geodesic_rk4_step(const Spacetime& st, Vec& x, Vec& v, double h);

// Composite trapezoid quadrature of sqrt(-g(c', c')). Throws NotCausal unless
// every sampled tangent is future-directed causal or zero.
double lorentz_length(const Spacetime& st, const Curve& c, const Tolerances& tol = default_tolerances());

// Straight chart segment a -> b with n+1 samples, parameter in [0, 1].
Curve straight_segment(const Spacetime& st, const Event& a, const Event& b, int n = 16);

// Reparametrises a timelike curve by proper time (unit Lorentzian speed).
Curve reparametrize_by_proper_time(const Spacetime& st, const Curve& c);

// Largest deviation of g(c', c') from its initial value along the curve.
double first_integral_drift(const Spacetime& st, const Curve& c);

struct ConnectOptions {
  int restarts = 8;
  int max_newton_iterations = 40;
  // Causally but not chronologically related endpoints yield nullopt unless
  // this is false, in which case the null geodesic is returned for flat cones.
  bool null_related_as_none = true;
};

// Future-directed maximal geodesic from x to y, parametrised by proper time.
// Returns nullopt when x and y are not chronologically related; throws
// NoConvergence when shooting fails from every start.
std::optional<Geodesic> connect_maximal_geodesic(const Spacetime& st, const Event& x, const Event& y,
                                                 const Tolerances& tol = default_tolerances(),
                                                 const ConnectOptions& opts = {});

// Orthonormal frame at p (columns), first column future-directed unit timelike.
Mat orthonormal_frame(const Spacetime& st, const Event& p);

// Unit future timelike vector for rapidity coordinates `rapidity` (size dim-1)
// with respect to `frame`.
Vec hyperboloid_direction(const Mat& frame, const Vec& rapidity);

void write_curve_csv(std::ostream& os, const Spacetime& st, const Curve& c);

}  // namespace lorentz_eikonal
