// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lorentz_eikonal/expression.hpp"
#include "lorentz_eikonal/geodesic.hpp"
#include "lorentz_eikonal/spacetime.hpp"

namespace lorentz_eikonal {

enum class Relation { Chronological, CausalOnly, Unrelated };

std::string_view to_string(Relation r);

// x << y, x <= y (but not <<), or neither. Flat and conformally flat kinds use
// the flat cone; custom metrics bound the cone by the slab's light-speed range
// and settle the ambiguous band with the lattice longest-path oracle.
Relation relation(const Spacetime& st, const Event& x, const Event& y, const Tolerances& tol = default_tolerances());

using SpatialBox = std::vector<std::array<double, 2>>;

// Initial datum phi on a Cauchy surface, as a function of the spatial coordinates.
class InitialDatum {
 public:
  enum class Form { Constant, Linear, PiecewiseLinear, Sinusoidal, Expression, Tabulated, Callable };

  static InitialDatum constant(double c);
  // slope . y + offset
  static InitialDatum linear(Vec slope, double offset);
  // One spatial dimension; knots sorted by abscissa, constant extension outside.
  static InitialDatum piecewise_linear(std::vector<std::pair<double, double>> knots);
  // amplitude * sin(wavenumber . y + phase)
  static InitialDatum sinusoidal(double amplitude, Vec wavenumber, double phase);
  static InitialDatum expression(const Expression& e, const std::vector<std::string>& spatial_labels);
  // Tensor-grid samples with multilinear interpolation; values in row-major
  // order with the last axis fastest.
  static InitialDatum tabulated(std::vector<std::vector<double>> axes, std::vector<double> values);
  static InitialDatum callable(std::function<double(const Vec&)> f, std::string description);

  static InitialDatum sum(const InitialDatum& a, const InitialDatum& b);
  static InitialDatum negated(const InitialDatum& a);

  double operator()(const Vec& y) const { return eval_(y); }
  Form form() const { return form_; }
  const std::string& description() const { return description_; }

  // Largest difference quotient over a sampled grid of the box.
  double lipschitz_estimate(const SpatialBox& box, int samples_per_axis = 65) const;

 private:
  Form form_ = Form::Constant;
  std::string description_;
  std::function<double(const Vec&)> eval_;
};

std::string_view to_string(InitialDatum::Form f);

// The level set {tau = level} restricted to a spatial box, carrying phi.
struct CauchySurface {
  double level = 0.0;
  SpatialBox domain;
  InitialDatum datum = InitialDatum::constant(0.0);
  double lipschitz = 0.0;

  Event point(const Vec& spatial) const { return Event::from_parts(level, spatial); }
};

// Validates the level against the slab and, unless disabled, samples the
// Lipschitz constant. An empty domain means the full spatial box of the slab.
CauchySurface make_cauchy_surface(const Spacetime& st, double level, InitialDatum datum, SpatialBox domain = {},
                                  bool estimate_lipschitz = true);

// Compact spatial region of a Cauchy surface: a closed ball in chart coordinates.
struct SurfaceRegion {
  Vec center;
  double radius = 0.0;

  bool contains(const Vec& y, double slack = 0.0) const { return (y - center).norm() <= radius + slack; }
};

// Ball on Gamma covering {y : x <= y}. Throws NotInPast unless tau(x) <= level.
SurfaceRegion future_footprint(const Spacetime& st, const CauchySurface& surface, const Event& x,
                               const Tolerances& tol = default_tolerances());
// Ball on Gamma covering {y : y <= x}. Throws NotInFuture unless tau(x) >= level.
SurfaceRegion past_footprint(const Spacetime& st, const CauchySurface& surface, const Event& x,
                             const Tolerances& tol = default_tolerances());

// First intersection of a future-directed causal geodesic with Gamma.
Event surface_hit(const Spacetime& st, const CauchySurface& surface, const Geodesic& g,
                  const Tolerances& tol = default_tolerances());

}  // namespace lorentz_eikonal
