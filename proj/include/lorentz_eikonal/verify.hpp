// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "lorentz_eikonal/causal.hpp"
#include "lorentz_eikonal/lax_oleinik.hpp"
#include "lorentz_eikonal/spacetime.hpp"

namespace lorentz_eikonal {

// A scalar function on (part of) a space-time chart.
struct ScalarField {
  std::function<double(const Event&)> value;
  std::function<bool(const Event&)> contains;
  std::string description;

  double operator()(const Event& p) const { return value(p); }
};

// u_phi evaluated pointwise by solve_at. The domain is the part of the slab at
// or before the surface whose footprint stays on the surface domain.
ScalarField variational_field(const Spacetime& st, const CauchySurface& surface, const SolveOptions& opts = {});

// Multilinear interpolant of a solved grid.
ScalarField interpolated_field(const SolutionField& field);

// p -> f(p) for an arbitrary callable on the slab.
ScalarField callable_field(const Spacetime& st, std::function<double(const Event&)> f, std::string description);

struct VerifyOptions {
  Tolerances tol;
  double cluster_radius = 0.05;  // gradient clusters closer than this merge
  int hull_samples = 20;         // random convex combinations per hull
  std::uint64_t seed = 42;
};

// Central-difference covector raised with g^-1, so du(V) = g(grad u, V).
// nullopt where forward and backward quotients differ by more than tol.kink.
std::optional<Tangent> numeric_gradient(const Spacetime& st, const ScalarField& field, const Event& x, double step,
                                        const Tolerances& tol = default_tolerances());

// g(grad u, grad u) + 1. Throws NonDifferentiable where no gradient exists.
double eikonal_residual(const Spacetime& st, const ScalarField& field, const Event& x,
                        const Tolerances& tol = default_tolerances());

struct GradientProbe {
  Event point;
  std::vector<Tangent> reachable;  // cluster centres
  std::vector<Vec> super;          // vertices of the super-differential hull; empty when empty
  std::vector<Vec> sub;            // vertices of the sub-differential hull
  bool differentiable = false;
  int probes_used = 0;
};

// Gradients at random differentiable points within radius, radius/2, radius/4
// and radius/8 of x, clustered. With several clusters, a second difference
// across the kink decides whether the hull belongs to the super- (concave
// kink) or sub-differential (convex kink).
GradientProbe reachable_gradients(const Spacetime& st, const ScalarField& field, const Event& x, double radius,
                                  int n_probes, const VerifyOptions& opts = {});

struct ViscosityViolation {
  Event point;
  Vec witness;
  double norm = 0.0;  // g(V, V)
  bool subsolution = true;
};

struct ViscosityFragment {
  Event point;
  bool subsolution_pass = true;
  bool supersolution_pass = true;
  bool subsolution_vacuous = false;
  bool supersolution_vacuous = false;
  int vectors_tested = 0;
  std::vector<ViscosityViolation> violations;

  bool pass() const { return subsolution_pass && supersolution_pass; }
};

ViscosityFragment viscosity_check(const Spacetime& st, const ScalarField& field, const Event& x, double radius = 1e-2,
                                  int n_probes = 24, const VerifyOptions& opts = {});

enum class Orientation { PastConsistent, FutureConsistent, Mixed, Indeterminate };

std::string_view to_string(Orientation o);

struct OrientationVerdict {
  Orientation kind = Orientation::Indeterminate;
  std::vector<Event> locations;  // probes carrying opposite or non-timelike clusters
  int past_clusters = 0;
  int future_clusters = 0;
  int other_clusters = 0;
};

OrientationVerdict time_orientation(const Spacetime& st, const ScalarField& field, const std::vector<Event>& region,
                                    double radius = 1e-2, int n_probes = 24, const VerifyOptions& opts = {});

struct SemiconcavityResult {
  bool pass = true;
  double worst_margin = 0.0;  // most negative slack of the inequality
  double worst_t = 0.0;
};

// Checks f(g(t)) >= (1-t) f(a) + t f(b) - C t(1-t)/2 |a-b|^2 on the straight
// chart segment g from a to b at n_t interior parameters. `slack` absorbs
// evaluation noise.
SemiconcavityResult semiconcavity_check(const ScalarField& field, const Event& a, const Event& b, double C,
                                        int n_t = 9, double slack = 0.0);

// Smallest C for which the check above passes on the given segment.
double semiconcavity_constant(const ScalarField& field, const Event& a, const Event& b, int n_t = 9);

// Lower Hessian bound for the distance from a point at arclength s, sectional
// curvature bounded by c.
double comparison_bound_f_c(double c, double s);

// Euclidean-norm bound on the Hessian of z -> -d(z, y) at z = x in flat space:
// (T^2 + |X|^2) / s^3 for y - x = (T, X), s = d(x, y).
double predicted_semiconcavity_constant(const Event& x, const Event& y);

struct AchronalityResult {
  bool pass = true;
  std::vector<Event> points;
  std::vector<std::pair<Event, Event>> violations;
};

// Extracts {u = level} by root finding in tau over random spatial columns of
// `box`, tau in [t_lo, t_hi], then tests random pairs for causal relations.
AchronalityResult level_set_achronality(const Spacetime& st, const ScalarField& field, double level,
                                        const SpatialBox& box, double t_lo, double t_hi, int n_points, int n_pairs,
                                        const VerifyOptions& opts = {});

enum class StabilityRule { Sinusoidal, ConstantShift, Decreasing };

std::string_view to_string(StabilityRule r);

struct StabilityRow {
  int n = 0;
  double data_gap = 0.0;  // sup |phi_n - phi|
  double error = 0.0;     // max over grid |u_n - u|
  bool bounded = false;   // error <= data_gap + 2 tol.solve
};

struct StabilityReport {
  StabilityRule rule = StabilityRule::Sinusoidal;
  std::vector<StabilityRow> rows;
  bool bounded = true;
  bool strictly_decreasing = true;
  bool monotone_fields = true;  // u_n decreasing pointwise in n (Decreasing rule only)
  std::size_t failed_nodes = 0;
};

InitialDatum perturbed_datum(const InitialDatum& phi, StabilityRule rule, int n);

StabilityReport stability_experiment(const Spacetime& st, const CauchySurface& surface, StabilityRule rule,
                                     const GridSpec& grid, const std::vector<int>& terms,
                                     const SolveOptions& opts = {}, int threads = 1);

// u_c(x, y) = |x - c| + c on the two-dimensional model with temporal x.
ScalarField counterexample_family(const Spacetime& st, double c);

struct UniquenessReport {
  bool viscosity_pass = true;
  double boundary_error = 0.0;  // max |u - phi| on the surface samples
  OrientationVerdict orientation;
  double max_difference = 0.0;  // max |u - u_phi| over the probes
  bool premises_hold = false;
  bool agrees = false;
  std::vector<ViscosityViolation> violations;
};

// Tests the uniqueness premises for `candidate` at `probes` and compares with u_phi.
UniquenessReport uniqueness_check(const Spacetime& st, const CauchySurface& surface, const ScalarField& candidate,
                                  const std::vector<Event>& probes, const VerifyOptions& vopts = {},
                                  const SolveOptions& sopts = {});

struct ResidualStats {
  double max = 0.0;
  double mean = 0.0;
  std::size_t differentiable = 0;
  std::size_t within = 0;  // |residual| < tol.visc
  std::size_t total = 0;
};

ResidualStats residual_stats(const Spacetime& st, const ScalarField& field, const std::vector<Event>& probes,
                             const Tolerances& tol = default_tolerances());

struct VerificationReport {
  ResidualStats residual;
  std::vector<ViscosityViolation> viscosity_violations;
  std::size_t viscosity_vacuous = 0;
  OrientationVerdict orientation;
  double semiconcavity_constant = 0.0;
  std::optional<AchronalityResult> achronality;
  std::uint64_t seed = 42;
};

void write_violations_csv(std::ostream& os, const Spacetime& st, const std::vector<ViscosityViolation>& v);

}  // namespace lorentz_eikonal
