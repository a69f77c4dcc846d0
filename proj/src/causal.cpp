// SPDX-License-Identifier: Apache-2.0
#include "lorentz_eikonal/causal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lorentz_eikonal/distance.hpp"
#include "lorentz_eikonal/errors.hpp"
#include "lorentz_eikonal/io.hpp"

namespace lorentz_eikonal {

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::Chronological: return "Chronological";
    case Relation::CausalOnly: return "CausalOnly";
    case Relation::Unrelated: return "Unrelated";
  }
  return "?";
}

Relation relation(const Spacetime& st, const Event& x, const Event& y, const Tolerances& tol) {
  st.require_inside(x);
  st.require_inside(y);
  if ((y.coords - x.coords).norm() <= tol.cone) return Relation::CausalOnly;
  const double dt = y.time() - x.time();
  const double r = (y.spatial() - x.spatial()).norm();
  if (!(dt > 0.0)) return Relation::Unrelated;

  if (st.has_flat_cones()) {
    if (r < dt - tol.cone) return Relation::Chronological;
    if (std::abs(r - dt) <= tol.cone) return Relation::CausalOnly;
    return Relation::Unrelated;
  }

  if (r > st.max_light_speed() * dt + tol.cone) return Relation::Unrelated;
  if (r < st.min_light_speed() * dt - tol.cone) return Relation::Chronological;
  const DagResult dag = dag_longest_path(st, x, y, OracleGrid{41, 41, 4, 0.05});
  if (dag.value > tol.dist) return Relation::Chronological;
  return dag.reachable ? Relation::CausalOnly : Relation::Unrelated;
}

// ---------------------------------------------------------------------------
// InitialDatum

std::string_view to_string(InitialDatum::Form f) {
  switch (f) {
    case InitialDatum::Form::Constant: return "constant";
    case InitialDatum::Form::Linear: return "linear";
    case InitialDatum::Form::PiecewiseLinear: return "piecewise_linear";
    case InitialDatum::Form::Sinusoidal: return "sinusoidal";
    case InitialDatum::Form::Expression: return "expression";
    case InitialDatum::Form::Tabulated: return "tabulated";
    case InitialDatum::Form::Callable: return "callable";
  }
  return "?";
}

namespace {

std::string vec_text(const Vec& v) {
  std::string s = "[";
  for (int i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s + "]";
}

}  // namespace

InitialDatum InitialDatum::constant(double c) {
  InitialDatum d;
  d.form_ = Form::Constant;
  d.description_ = "constant(" + format_double(c) + ")";
  d.eval_ = [c](const Vec&) { return c; };
  return d;
}

InitialDatum InitialDatum::linear(Vec slope, double offset) {
  InitialDatum d;
  d.form_ = Form::Linear;
  d.description_ = "linear(" + vec_text(slope) + "," + format_double(offset) + ")";
  d.eval_ = [slope, offset](const Vec& y) {
    if (y.size() != slope.size()) throw Error(ErrorCode::InvalidDatum, "linear datum dimension mismatch");
    return slope.dot(y) + offset;
  };
  return d;
}

InitialDatum InitialDatum::piecewise_linear(std::vector<std::pair<double, double>> knots) {
  if (knots.empty()) throw Error(ErrorCode::InvalidDatum, "piecewise-linear datum needs at least one knot");
  std::sort(knots.begin(), knots.end());
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (knots[i].first == knots[i - 1].first) throw Error(ErrorCode::InvalidDatum, "duplicate knot abscissa");
  InitialDatum d;
  d.form_ = Form::PiecewiseLinear;
  d.description_ = "piecewise_linear(" + std::to_string(knots.size()) + " knots)";
  d.eval_ = [knots](const Vec& y) {
    if (y.size() != 1) throw Error(ErrorCode::InvalidDatum, "piecewise-linear datum is one-dimensional");
    const double v = y[0];
    if (v <= knots.front().first) return knots.front().second;
    if (v >= knots.back().first) return knots.back().second;
    auto it = std::upper_bound(knots.begin(), knots.end(), std::make_pair(v, -std::numeric_limits<double>::infinity()));
    const auto& [x1, y1] = *it;
    const auto& [x0, y0] = *(it - 1);
    const double w = (v - x0) / (x1 - x0);
    return (1 - w) * y0 + w * y1;
  };
  return d;
}

InitialDatum InitialDatum::sinusoidal(double amplitude, Vec wavenumber, double phase) {
  InitialDatum d;
  d.form_ = Form::Sinusoidal;
  d.description_ = "sinusoidal(" + format_double(amplitude) + "," + vec_text(wavenumber) + "," + format_double(phase) + ")";
  d.eval_ = [amplitude, wavenumber, phase](const Vec& y) {
    if (y.size() != wavenumber.size()) throw Error(ErrorCode::InvalidDatum, "sinusoidal datum dimension mismatch");
    return amplitude * std::sin(wavenumber.dot(y) + phase);
  };
  return d;
}

InitialDatum InitialDatum::expression(const Expression& e, const std::vector<std::string>& spatial_labels) {
  InitialDatum d;
  d.form_ = Form::Expression;
  d.description_ = e.to_string();
  BoundExpression fn = e.bind(spatial_labels);
  d.eval_ = [fn](const Vec& y) {
    if (static_cast<std::size_t>(y.size()) != fn.arity())
      throw Error(ErrorCode::InvalidDatum, "expression datum dimension mismatch");
    return fn(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
  };
  return d;
}

InitialDatum InitialDatum::tabulated(std::vector<std::vector<double>> axes, std::vector<double> values) {
  if (axes.empty()) throw Error(ErrorCode::InvalidDatum, "tabulated datum needs at least one axis");
  std::size_t expected = 1;
  for (const auto& ax : axes) {
    if (ax.size() < 2) throw Error(ErrorCode::InvalidDatum, "each tabulation axis needs two or more samples");
    for (std::size_t i = 1; i < ax.size(); ++i)
      if (!(ax[i] > ax[i - 1])) throw Error(ErrorCode::InvalidDatum, "tabulation axes must be increasing");
    expected *= ax.size();
  }
  if (values.size() != expected) throw Error(ErrorCode::InvalidDatum, "tabulated values do not match the axes");
  InitialDatum d;
  d.form_ = Form::Tabulated;
  d.description_ = "tabulated(" + std::to_string(values.size()) + " samples)";
  d.eval_ = [axes = std::move(axes), values = std::move(values)](const Vec& y) {
    const std::size_t m = axes.size();
    if (static_cast<std::size_t>(y.size()) != m) throw Error(ErrorCode::InvalidDatum, "tabulated datum dimension mismatch");
    std::vector<std::size_t> lo(m);
    std::vector<double> w(m);
    for (std::size_t a = 0; a < m; ++a) {
      const auto& ax = axes[a];
      const double v = std::clamp(y[static_cast<Eigen::Index>(a)], ax.front(), ax.back());
      std::size_t i = static_cast<std::size_t>(std::upper_bound(ax.begin(), ax.end(), v) - ax.begin());
      i = std::clamp<std::size_t>(i, 1, ax.size() - 1) - 1;
      lo[a] = i;
      w[a] = (v - ax[i]) / (ax[i + 1] - ax[i]);
    }
    double total = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << m); ++corner) {
      double weight = 1.0;
      std::size_t flat = 0;
      for (std::size_t a = 0; a < m; ++a) {
        const bool up = (corner >> a) & 1u;
        weight *= up ? w[a] : 1.0 - w[a];
        flat = flat * axes[a].size() + lo[a] + (up ? 1 : 0);
      }
      if (weight != 0.0) total += weight * values[flat];
    }
    return total;
  };
  return d;
}

InitialDatum InitialDatum::callable(std::function<double(const Vec&)> f, std::string description) {
  InitialDatum d;
  d.form_ = Form::Callable;
  d.description_ = std::move(description);
  d.eval_ = std::move(f);
  return d;
}

InitialDatum InitialDatum::sum(const InitialDatum& a, const InitialDatum& b) {
  return callable([fa = a.eval_, fb = b.eval_](const Vec& y) { return fa(y) + fb(y); },
                  a.description_ + " + " + b.description_);
}

InitialDatum InitialDatum::negated(const InitialDatum& a) {
  return callable([fa = a.eval_](const Vec& y) { return -fa(y); }, "-(" + a.description_ + ")");
}

double InitialDatum::lipschitz_estimate(const SpatialBox& box, int samples_per_axis) const {
  const int m = static_cast<int>(box.size());
  const int n = std::max(samples_per_axis, 2);
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  double best = 0.0;
  Vec y(m), yn(m);
  while (true) {
    for (int a = 0; a < m; ++a) y[a] = box[a][0] + (box[a][1] - box[a][0]) * idx[a] / (n - 1);
    const double f0 = (*this)(y);
    if (!std::isfinite(f0)) return std::numeric_limits<double>::infinity();
    double grad2 = 0.0;
    for (int a = 0; a < m; ++a) {
      if (idx[a] + 1 >= n) continue;
      yn = y;
      yn[a] = box[a][0] + (box[a][1] - box[a][0]) * (idx[a] + 1) / (n - 1);
      const double q = ((*this)(yn)-f0) / (yn[a] - y[a]);
      grad2 += q * q;
    }
    best = std::max(best, std::sqrt(grad2));
    int a = 0;
    while (a < m && ++idx[a] == n) idx[a++] = 0;
    if (a == m) break;
  }
  return best;
}

CauchySurface make_cauchy_surface(const Spacetime& st, double level, InitialDatum datum, SpatialBox domain,
                                  bool estimate_lipschitz) {
  const Slab& slab = st.slab();
  if (!(level >= slab.t_min && level <= slab.t_max))
    throw Error(ErrorCode::InvalidConfig, "surface level lies outside the temporal range of the slab");
  if (domain.empty()) domain = slab.space;
  if (static_cast<int>(domain.size()) != st.spatial_dim())
    throw Error(ErrorCode::InvalidConfig, "surface domain must have one interval per spatial coordinate");
  for (std::size_t a = 0; a < domain.size(); ++a) {
    if (!(domain[a][0] < domain[a][1])) throw Error(ErrorCode::InvalidConfig, "empty surface domain interval");
    if (domain[a][0] < slab.space[a][0] - 1e-12 || domain[a][1] > slab.space[a][1] + 1e-12)
      throw Error(ErrorCode::InvalidConfig, "surface domain exceeds the slab");
  }
  CauchySurface s;
  s.level = level;
  s.domain = std::move(domain);
  s.datum = std::move(datum);
  if (!estimate_lipschitz) return s;
  const int per_axis = s.domain.size() == 1 ? 1025 : s.domain.size() == 2 ? 129 : 33;
  s.lipschitz = s.datum.lipschitz_estimate(s.domain, per_axis);
  if (!std::isfinite(s.lipschitz)) throw Error(ErrorCode::InvalidDatum, "datum is not finite on the surface domain");
  return s;
}

SurfaceRegion future_footprint(const Spacetime& st, const CauchySurface& surface, const Event& x,
                               const Tolerances& tol) {
  st.require_inside(x);
  const double gap = surface.level - x.time();
  if (gap < -tol.hit) throw Error(ErrorCode::NotInPast, "event is not in the past of the surface");
  SurfaceRegion r;
  r.center = x.spatial();
  r.radius = std::max(0.0, gap) * (st.has_flat_cones() ? 1.0 : st.max_light_speed());
  return r;
}

SurfaceRegion past_footprint(const Spacetime& st, const CauchySurface& surface, const Event& x,
                             const Tolerances& tol) {
  st.require_inside(x);
  const double gap = x.time() - surface.level;
  if (gap < -tol.hit) throw Error(ErrorCode::NotInFuture, "event is not in the future of the surface");
  SurfaceRegion r;
  r.center = x.spatial();
  r.radius = std::max(0.0, gap) * (st.has_flat_cones() ? 1.0 : st.max_light_speed());
  return r;
}

Event surface_hit(const Spacetime& st, const CauchySurface& surface, const Geodesic& g, const Tolerances& tol) {
  const auto& samples = g.curve.samples;
  if (samples.empty()) throw Error(ErrorCode::NoHitInSlab, "empty geodesic");
  const double level = surface.level;
  if (samples.front().point.time() > level + tol.hit)
    throw Error(ErrorCode::NotInPast, "geodesic starts after the surface");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double t = samples[i].point.time();
    if (std::abs(t - level) <= tol.hit) return samples[i].point;
    if (t < level) continue;
    // Crossing between samples i-1 and i: bisect on the sub-step from i-1.
    const auto& from = samples[i - 1];
    double lo = 0.0, hi = samples[i].s - from.s;
    Vec x = from.point.coords, v = from.tangent;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      x = from.point.coords;
      v = from.tangent;
      geodesic_rk4_step(st, x, v, mid);
      if (std::abs(x[0] - level) <= tol.hit) break;
      (x[0] < level ? lo : hi) = mid;
    }
    return Event(x);
  }
  throw Error(ErrorCode::NoHitInSlab, "geodesic ends before reaching the surface");
}

}  // namespace lorentz_eikonal
