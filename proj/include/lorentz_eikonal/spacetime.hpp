// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <initializer_list>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lorentz_eikonal/expression.hpp"
#include "lorentz_eikonal/linalg.hpp"
#include "lorentz_eikonal/tolerances.hpp"

namespace lorentz_eikonal {

enum class SpacetimeKind { Minkowski, PaperMinkowski2D, ConformallyFlat, Custom };

std::string_view to_string(SpacetimeKind kind);

// Computation domain: [t_min, t_max] x (spatial box). Coordinate 0 is always
// the temporal coordinate tau.
struct Slab {
  double t_min = -1.0;
  double t_max = 1.0;
  std::vector<std::array<double, 2>> space;
};

struct Event {
  Vec coords;

  Event() = default;
  explicit Event(Vec c) : coords(std::move(c)) {}
  Event(std::initializer_list<double> c);

  int dim() const { return static_cast<int>(coords.size()); }
  double time() const { return coords[0]; }
  Vec spatial() const { return coords.tail(coords.size() - 1); }

  static Event from_parts(double t, const Vec& spatial);
};

struct Tangent {
  Event base;
  Vec components;
};

enum class CausalClass { TimelikeFuture, TimelikePast, LightlikeFuture, LightlikePast, Spacelike, Zero };

std::string_view to_string(CausalClass c);
bool is_timelike(CausalClass c);
bool is_causal(CausalClass c);  // timelike or lightlike
bool is_future_directed(CausalClass c);
bool is_past_directed(CausalClass c);

// Globally hyperbolic product spacetime on a coordinate slab. Immutable; copies
// share state.
//
// The time orientation is carried by X = d/dt: a causal V is future-directed
// when g(X, V) < 0 and past-directed when g(X, V) > 0. The auxiliary Riemannian
// metric h is the Euclidean metric of the chart.
class Spacetime {
 public:
  static Spacetime minkowski(int dim, Slab slab);
  // Metric dy^2 - dx^2 with the temporal coordinate labelled "x".
  static Spacetime paper_minkowski_2d(Slab slab);
  // g = a(t)^2 * eta; `factor` is an expression in the temporal label "t".
  static Spacetime conformally_flat(int dim, Slab slab, Expression factor);
  // Components g_ij as expressions of the coordinate labels (t, x, y, z).
  // The signature is checked on a grid covering the slab.
  static Spacetime custom(int dim, Slab slab, std::vector<std::vector<Expression>> components);

  int dim() const;
  int spatial_dim() const { return dim() - 1; }
  SpacetimeKind kind() const;
  const std::vector<std::string>& labels() const;
  std::vector<std::string> spatial_labels() const;
  const Slab& slab() const;

  // Exact flat metric diag(-1, 1, ..., 1) in chart coordinates.
  bool is_flat() const;
  // Null cones coincide with the flat cone |dx| = dt (flat and conformally flat kinds).
  bool has_flat_cones() const;
  bool metric_depends_on_space() const;

  bool contains(const Event& p, double slack = 1e-12) const;
  void require_inside(const Event& p) const;

  // Metric without the slab check; used by integrators probing near edges.
  Mat metric(const Vec& p) const;
  Christoffel christoffel(const Vec& p) const;

  double conformal_factor(double t) const;
  double conformal_factor_derivative(double t) const;

  // Bounds on the coordinate speed of light over the slab (1 for flat cones).
  double max_light_speed() const;
  double min_light_speed() const;

  const Expression* factor_expression() const;
  const std::vector<std::vector<Expression>>* component_expressions() const;

  struct Impl;

 private:
  explicit Spacetime(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

Mat metric_at(const Spacetime& st, const Event& p);
Mat inverse_metric_at(const Spacetime& st, const Event& p);
double metric_product(const Mat& g, const Vec& a, const Vec& b);

// Number of negative eigenvalues of a symmetric matrix; 1 for a Lorentzian metric.
int negative_eigenvalues(const Mat& g);

Vec orientation_field(const Spacetime& st, const Event& p);

CausalClass classify_vector(const Spacetime& st, const Tangent& v, const Tolerances& tol = default_tolerances());
CausalClass classify_with_metric(const Mat& g, const Vec& v, double tol_class);

double lorentz_norm(const Spacetime& st, const Tangent& v, const Tolerances& tol = default_tolerances());

Christoffel christoffel_at(const Spacetime& st, const Event& p);
// Christoffel symbols from central differences of the metric components.
Christoffel christoffel_finite_difference(const Spacetime& st, const Event& p, double h);

}  // namespace lorentz_eikonal
