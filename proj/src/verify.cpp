// SPDX-License-Identifier: Apache-2.0
#include "lorentz_eikonal/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "lorentz_eikonal/distance.hpp"
#include "lorentz_eikonal/errors.hpp"
#include "lorentz_eikonal/io.hpp"

namespace lorentz_eikonal {

ScalarField variational_field(const Spacetime& st, const CauchySurface& surface, const SolveOptions& opts) {
  ScalarField f;
  f.description = "u_phi";
  f.value = [st, surface, opts](const Event& p) { return solve_at(st, surface, p, opts).value; };
  f.contains = [st, surface, opts](const Event& p) {
    if (!st.contains(p) || p.time() > surface.level + opts.tol.hit) return false;
    const double r = std::max(0.0, surface.level - p.time()) * (st.has_flat_cones() ? 1.0 : st.max_light_speed());
    for (std::size_t a = 0; a < surface.domain.size(); ++a) {
      const double c = p.coords[static_cast<Eigen::Index>(a + 1)];
      if (c - r < surface.domain[a][0] - 1e-12 || c + r > surface.domain[a][1] + 1e-12) return false;
    }
    return true;
  };
  return f;
}

ScalarField interpolated_field(const SolutionField& field) {
  ScalarField f;
  f.description = "interpolated grid";
  f.value = [field](const Event& p) { return field.interpolate(p); };
  f.contains = [field](const Event& p) {
    try {
      field.interpolate(p);
      return true;
    } catch (const Error&) {
      return false;
    }
  };
  return f;
}

ScalarField callable_field(const Spacetime& st, std::function<double(const Event&)> fn, std::string description) {
  ScalarField f;
  f.description = std::move(description);
  f.value = std::move(fn);
  f.contains = [st](const Event& p) { return st.contains(p); };
  return f;
}

std::optional<Tangent> numeric_gradient(const Spacetime& st, const ScalarField& field, const Event& x, double step,
                                        const Tolerances& tol) {
  if (!field.contains(x)) throw Error(ErrorCode::DomainEdge, "gradient probe outside the field domain");
  const int n = x.dim();
  std::vector<Event> stencil;
  for (int a = 0; a < n; ++a)
    for (double sign : {1.0, -1.0}) {
      Event q = x;
      q.coords[a] += sign * step;
      if (!field.contains(q)) throw Error(ErrorCode::DomainEdge, "difference stencil leaves the field domain");
      stencil.push_back(q);
    }
  const double f0 = field(x);
  Vec du(n);
  for (int a = 0; a < n; ++a) {
    const double fp = field(stencil[static_cast<std::size_t>(2 * a)]);
    const double fm = field(stencil[static_cast<std::size_t>(2 * a + 1)]);
    const double forward = (fp - f0) / step;
    const double backward = (f0 - fm) / step;
    if (std::abs(forward - backward) > tol.kink) return std::nullopt;
    du[a] = (fp - fm) / (2.0 * step);
  }
  return Tangent{x, inverse_metric_at(st, x) * du};
}

double eikonal_residual(const Spacetime& st, const ScalarField& field, const Event& x, const Tolerances& tol) {
  const auto g = numeric_gradient(st, field, x, tol.fd_step, tol);
  if (!g) throw Error(ErrorCode::NonDifferentiable, "field has no gradient at the probe");
  return metric_product(metric_at(st, x), g->components, g->components) + 1.0;
}

namespace {

struct Cluster {
  Vec sum;
  int count = 0;
  Vec center() const { return sum / count; }
};

std::vector<Vec> convex_samples(const std::vector<Vec>& vertices, int n, std::mt19937_64& rng) {
  std::vector<Vec> out = vertices;
  if (vertices.size() < 2) return out;
  std::exponential_distribution<double> expo(1.0);
  for (int k = 0; k < n; ++k) {
    std::vector<double> w(vertices.size());
    double total = 0.0;
    for (auto& wi : w) total += (wi = expo(rng));
    Vec v = Vec::Zero(vertices.front().size());
    for (std::size_t i = 0; i < vertices.size(); ++i) v += (w[i] / total) * vertices[i];
    out.push_back(v);
  }
  return out;
}

Vec random_in_ball(int n, double r, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec d(n);
  for (int a = 0; a < n; ++a) d[a] = normal(rng);
  d.normalize();
  return r * std::pow(unif(rng), 1.0 / n) * d;
}

}  // namespace

GradientProbe reachable_gradients(const Spacetime& st, const ScalarField& field, const Event& x, double radius,
                                  int n_probes, const VerifyOptions& opts) {
  GradientProbe probe;
  probe.point = x;
  const double step = opts.tol.fd_step;
  // A gradient at x itself settles differentiability.
  if (auto g = numeric_gradient(st, field, x, step, opts.tol)) {
    probe.differentiable = true;
    probe.probes_used = 1;
    probe.reachable.push_back(*g);
    probe.super = {g->components};
    probe.sub = {g->components};
    return probe;
  }

  std::mt19937_64 rng(opts.seed);
  std::vector<Cluster> clusters;
  for (int k = 0; k < n_probes; ++k) {
    const double r = radius / std::pow(2.0, k % 4);
    const Event p(Vec(x.coords + random_in_ball(x.dim(), r, rng)));
    std::optional<Tangent> g;
    try {
      if (!field.contains(p)) continue;
      g = numeric_gradient(st, field, p, step, opts.tol);
    } catch (const Error&) {
      continue;
    }
    if (!g) continue;
    ++probe.probes_used;
    bool merged = false;
    for (auto& c : clusters)
      if ((c.center() - g->components).norm() < opts.cluster_radius) {
        c.sum += g->components;
        ++c.count;
        merged = true;
        break;
      }
    if (!merged) clusters.push_back({g->components, 1});
  }
  if (clusters.empty())
    throw Error(ErrorCode::AllProbesNonDifferentiable, "no differentiable probe near the point");
  for (const auto& c : clusters) probe.reachable.push_back({x, c.center()});

  std::vector<Vec> centers;
  for (const auto& c : clusters) centers.push_back(c.center());
  if (centers.size() == 1) {
    probe.super = centers;
    probe.sub = centers;
    return probe;
  }
  // Second difference across the kink, normal to it in the chart.
  const Mat g = metric_at(st, x);
  Vec w = g * (centers[0] - centers[1]);
  w.normalize();
  double h = 0.25 * radius;
  double second = 0.0;
  for (int tries = 0; tries < 20; ++tries, h *= 0.5) {
    const Event a(Vec(x.coords + h * w)), b(Vec(x.coords - h * w));
    if (field.contains(a) && field.contains(b)) {
      second = field(a) + field(b) - 2.0 * field(x);
      break;
    }
  }
  if (second > 0.0) probe.sub = centers;
  else if (second < 0.0) probe.super = centers;
  return probe;
}

ViscosityFragment viscosity_check(const Spacetime& st, const ScalarField& field, const Event& x, double radius,
                                  int n_probes, const VerifyOptions& opts) {
  ViscosityFragment out;
  out.point = x;
  const GradientProbe probe = reachable_gradients(st, field, x, radius, n_probes, opts);
  const Mat g = metric_at(st, x);
  std::mt19937_64 rng(opts.seed + 1);

  out.subsolution_vacuous = probe.super.empty();
  for (const Vec& v : convex_samples(probe.super, opts.hull_samples, rng)) {
    ++out.vectors_tested;
    const double q = metric_product(g, v, v);
    if (q > -1.0 + opts.tol.visc) {
      out.subsolution_pass = false;
      out.violations.push_back({x, v, q, true});
    }
  }
  out.supersolution_vacuous = probe.sub.empty();
  for (const Vec& v : convex_samples(probe.sub, opts.hull_samples, rng)) {
    ++out.vectors_tested;
    const double q = metric_product(g, v, v);
    if (q < -1.0 - opts.tol.visc) {
      out.supersolution_pass = false;
      out.violations.push_back({x, v, q, false});
    }
  }
  return out;
}

std::string_view to_string(Orientation o) {
  switch (o) {
    case Orientation::PastConsistent: return "PastConsistent";
    case Orientation::FutureConsistent: return "FutureConsistent";
    case Orientation::Mixed: return "Mixed";
    case Orientation::Indeterminate: return "Indeterminate";
  }
  return "?";
}

OrientationVerdict time_orientation(const Spacetime& st, const ScalarField& field, const std::vector<Event>& region,
                                    double radius, int n_probes, const VerifyOptions& opts) {
  OrientationVerdict v;
  std::optional<Event> first_past, first_future;
  for (const Event& p : region) {
    GradientProbe probe;
    try {
      probe = reachable_gradients(st, field, p, radius, n_probes, opts);
    } catch (const Error&) {
      continue;
    }
    bool past = false, future = false, other = false;
    for (const Tangent& t : probe.reachable) {
      const CausalClass c = classify_vector(st, t, opts.tol);
      if (c == CausalClass::TimelikePast) past = true;
      else if (c == CausalClass::TimelikeFuture) future = true;
      else other = true;
    }
    v.past_clusters += past;
    v.future_clusters += future;
    v.other_clusters += other;
    if (past && !first_past) first_past = p;
    if (future && !first_future) first_future = p;
    if ((past && future) || other) v.locations.push_back(p);
  }
  if (v.past_clusters > 0 && v.future_clusters > 0) {
    v.kind = Orientation::Mixed;
    if (v.locations.empty()) v.locations = {*first_past, *first_future};
  } else if (v.other_clusters > 0 || (v.past_clusters == 0 && v.future_clusters == 0)) {
    v.kind = Orientation::Indeterminate;
  } else {
    v.kind = v.past_clusters > 0 ? Orientation::PastConsistent : Orientation::FutureConsistent;
  }
  return v;
}

SemiconcavityResult semiconcavity_check(const ScalarField& field, const Event& a, const Event& b, double C, int n_t,
                                        double slack) {
  SemiconcavityResult r;
  const double fa = field(a), fb = field(b);
  const double len2 = (b.coords - a.coords).squaredNorm();
  r.worst_margin = std::numeric_limits<double>::infinity();
  double scale = std::max(std::abs(fa), std::abs(fb));
  for (int i = 1; i <= n_t; ++i) {
    const double t = static_cast<double>(i) / (n_t + 1);
    const Event p(Vec(a.coords + t * (b.coords - a.coords)));
    const double fp = field(p);
    scale = std::max(scale, std::abs(fp));
    const double margin = fp - ((1.0 - t) * fa + t * fb - C * t * (1.0 - t) / 2.0 * len2);
    if (margin < r.worst_margin) {
      r.worst_margin = margin;
      r.worst_t = t;
    }
  }
  // Rounding in the interpolation alone can push an affine field below zero.
  const double rounding = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, scale);
  r.pass = r.worst_margin >= -std::max(slack, rounding);
  return r;
}

double semiconcavity_constant(const ScalarField& field, const Event& a, const Event& b, int n_t) {
  const double fa = field(a), fb = field(b);
  const double len2 = (b.coords - a.coords).squaredNorm();
  if (len2 == 0.0) return 0.0;
  double c = 0.0;
  for (int i = 1; i <= n_t; ++i) {
    const double t = static_cast<double>(i) / (n_t + 1);
    const Event p(Vec(a.coords + t * (b.coords - a.coords)));
    const double chord = (1.0 - t) * fa + t * fb;
    c = std::max(c, 2.0 * (chord - field(p)) / (t * (1.0 - t) * len2));
  }
  return c;
}

double comparison_bound_f_c(double c, double s) {
  if (!(s > 0.0)) throw Error(ErrorCode::NonpositiveArclength, "arclength must be positive");
  if (c > 0.0) {
    const double r = std::sqrt(c);
    return r / std::tanh(r * s);
  }
  if (c == 0.0) return 1.0 / s;
  const double r = std::sqrt(-c);
  if (s < std::numbers::pi / r) return r / std::tan(r * s);
  return r / std::numbers::pi;
}

double predicted_semiconcavity_constant(const Event& x, const Event& y) {
  const double T = y.time() - x.time();
  const double X2 = (y.spatial() - x.spatial()).squaredNorm();
  const double s2 = T * T - X2;
  if (!(T > 0.0) || !(s2 > 0.0)) throw Error(ErrorCode::NonpositiveArclength, "points are not chronologically related");
  const double s = std::sqrt(s2);
  return (T * T + X2) / (s2 * s);
}

AchronalityResult level_set_achronality(const Spacetime& st, const ScalarField& field, double level,
                                        const SpatialBox& box, double t_lo, double t_hi, int n_points, int n_pairs,
                                        const VerifyOptions& opts) {
  AchronalityResult out;
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  constexpr int kScan = 65;
  const int m = static_cast<int>(box.size());
  for (int k = 0; k < n_points; ++k) {
    Vec y(m);
    for (int a = 0; a < m; ++a) y[a] = box[static_cast<std::size_t>(a)][0] + unif(rng) * (box[static_cast<std::size_t>(a)][1] - box[static_cast<std::size_t>(a)][0]);
    auto h = [&](double t) {
      const Event p = Event::from_parts(t, y);
      return field.contains(p) ? field(p) - level : std::numeric_limits<double>::quiet_NaN();
    };
    std::vector<double> ts, hs;
    for (int i = 0; i < kScan; ++i) {
      const double t = t_lo + (t_hi - t_lo) * i / (kScan - 1);
      const double v = h(t);
      if (std::isnan(v)) continue;
      ts.push_back(t);
      hs.push_back(v);
    }
    int roots = 0;
    std::size_t bracket = 0;
    for (std::size_t i = 0; i + 1 < hs.size(); ++i)
      if ((hs[i] <= 0.0) != (hs[i + 1] <= 0.0)) {
        ++roots;
        bracket = i;
      }
    if (roots > 1) throw Error(ErrorCode::MultipleRoots, "level set is not a graph over the spatial column");
    if (roots == 0) continue;
    double a = ts[bracket], b = ts[bracket + 1];
    const bool a_below = hs[bracket] <= 0.0;
    for (int it = 0; it < 80 && b - a > 1e-14; ++it) {
      const double mid = 0.5 * (a + b);
      if ((h(mid) <= 0.0) == a_below) a = mid;
      else b = mid;
    }
    out.points.push_back(Event::from_parts(0.5 * (a + b), y));
  }
  if (out.points.empty()) throw Error(ErrorCode::EmptyLevelSet, "level set does not meet the sampled columns");
  if (out.points.size() < 2) return out;
  std::uniform_int_distribution<std::size_t> pick(0, out.points.size() - 1);
  for (int k = 0; k < n_pairs; ++k) {
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (j == i) j = (i + 1) % out.points.size();
    const Event& p = out.points[i];
    const Event& q = out.points[j];
    if (relation(st, p, q, opts.tol) != Relation::Unrelated || relation(st, q, p, opts.tol) != Relation::Unrelated) {
      out.pass = false;
      out.violations.emplace_back(p, q);
    }
  }
  return out;
}

std::string_view to_string(StabilityRule r) {
  switch (r) {
    case StabilityRule::Sinusoidal: return "sinusoidal";
    case StabilityRule::ConstantShift: return "constant_shift";
    case StabilityRule::Decreasing: return "decreasing";
  }
  return "?";
}

namespace {

double rule_gap(StabilityRule rule, int n) {
  return rule == StabilityRule::Decreasing ? 1.5 / n : 1.0 / n;
}

}  // namespace

InitialDatum perturbed_datum(const InitialDatum& phi, StabilityRule rule, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidConfig, "sequence index must be positive");
  const double inv = 1.0 / n;
  switch (rule) {
    case StabilityRule::Sinusoidal: {
      // The perturbation varies along the first spatial coordinate only.
      return InitialDatum::sum(
          phi, InitialDatum::callable([inv, n](const Vec& y) { return inv * std::sin(n * y[0]); }, "sin perturbation"));
    }
    case StabilityRule::ConstantShift:
      return InitialDatum::sum(phi, InitialDatum::constant(inv));
    case StabilityRule::Decreasing:
      return InitialDatum::sum(
          phi, InitialDatum::callable([inv](const Vec& y) { return inv * (1.0 + 0.5 * std::cos(y[0])); },
                                      "decreasing perturbation"));
  }
  return phi;
}

StabilityReport stability_experiment(const Spacetime& st, const CauchySurface& surface, StabilityRule rule,
                                     const GridSpec& grid, const std::vector<int>& terms, const SolveOptions& opts,
                                     int threads) {
  StabilityReport rep;
  rep.rule = rule;
  const SolutionField base = solve_grid(st, surface, grid, opts, threads);
  rep.failed_nodes += base.error_count();
  std::vector<double> previous;
  for (int n : terms) {
    CauchySurface sn = surface;
    sn.datum = perturbed_datum(surface.datum, rule, n);
    const SolutionField f = solve_grid(st, sn, grid, opts, threads);
    rep.failed_nodes += f.error_count();
    StabilityRow row;
    row.n = n;
    row.data_gap = rule_gap(rule, n);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      if (!base.diagnostics[i].error.empty() || !f.diagnostics[i].error.empty()) continue;
      row.error = std::max(row.error, std::abs(f.values[i] - base.values[i]));
    }
    row.bounded = row.error <= row.data_gap + 2.0 * opts.tol.solve;
    rep.bounded = rep.bounded && row.bounded;
    if (!rep.rows.empty() && !(row.error < rep.rows.back().error)) rep.strictly_decreasing = false;
    if (rule == StabilityRule::Decreasing && !previous.empty())
      for (std::size_t i = 0; i < f.values.size(); ++i)
        if (f.values[i] > previous[i] + opts.tol.solve) rep.monotone_fields = false;
    previous = f.values;
    rep.rows.push_back(row);
  }
  return rep;
}

ScalarField counterexample_family(const Spacetime& st, double c) {
  if (!(c < 0.0)) throw Error(ErrorCode::NonNegativeC, "the family is defined for negative c");
  if (st.dim() != 2) throw Error(ErrorCode::InvalidSpacetime, "the family lives on a two-dimensional space-time");
  ScalarField f;
  f.description = "u_c";
  f.value = [c](const Event& p) { return std::abs(p.time() - c) + c; };
  f.contains = [st](const Event& p) { return st.contains(p) && p.time() <= 1e-12; };
  return f;
}

UniquenessReport uniqueness_check(const Spacetime& st, const CauchySurface& surface, const ScalarField& candidate,
                                  const std::vector<Event>& probes, const VerifyOptions& vopts,
                                  const SolveOptions& sopts) {
  UniquenessReport rep;
  for (const Event& p : probes) {
    try {
      const ViscosityFragment frag = viscosity_check(st, candidate, p, 1e-2, 24, vopts);
      if (!frag.pass()) {
        rep.viscosity_pass = false;
        rep.violations.insert(rep.violations.end(), frag.violations.begin(), frag.violations.end());
      }
    } catch (const Error&) {
      // Probes without differentiable neighbours carry no test vectors.
    }
    rep.max_difference = std::max(rep.max_difference, std::abs(candidate(p) - solve_at(st, surface, p, sopts).value));
  }
  constexpr int kBoundary = 41;
  const int m = static_cast<int>(surface.domain.size());
  for (int k = 0; k < kBoundary; ++k) {
    Vec y(m);
    for (int a = 0; a < m; ++a) {
      const auto& d = surface.domain[static_cast<std::size_t>(a)];
      y[a] = d[0] + (d[1] - d[0]) * k / (kBoundary - 1);
    }
    const Event p = surface.point(y);
    if (!candidate.contains(p)) continue;
    rep.boundary_error = std::max(rep.boundary_error, std::abs(candidate(p) - surface.datum(y)));
  }
  rep.orientation = time_orientation(st, candidate, probes, 1e-2, 24, vopts);
  rep.premises_hold = rep.viscosity_pass && rep.boundary_error <= sopts.tol.solve &&
                      rep.orientation.kind == Orientation::PastConsistent;
  rep.agrees = rep.max_difference <= 5.0 * sopts.tol.solve;
  return rep;
}

ResidualStats residual_stats(const Spacetime& st, const ScalarField& field, const std::vector<Event>& probes,
                             const Tolerances& tol) {
  ResidualStats s;
  double sum = 0.0;
  for (const Event& p : probes) {
    ++s.total;
    double r;
    try {
      r = std::abs(eikonal_residual(st, field, p, tol));
    } catch (const Error&) {
      continue;
    }
    ++s.differentiable;
    sum += r;
    s.max = std::max(s.max, r);
    if (r < tol.visc) ++s.within;
  }
  s.mean = s.differentiable ? sum / static_cast<double>(s.differentiable) : 0.0;
  return s;
}

void write_violations_csv(std::ostream& os, const Spacetime& st, const std::vector<ViscosityViolation>& v) {
  std::vector<std::string> header = st.labels();
  for (const auto& l : st.labels()) header.push_back("V_" + l);
  header.push_back("g_VV");
  header.push_back("kind");
  write_csv_header(os, header);
  for (const auto& w : v) {
    for (int a = 0; a < w.point.dim(); ++a) os << format_double(w.point.coords[a]) << ',';
    for (int a = 0; a < w.witness.size(); ++a) os << format_double(w.witness[a]) << ',';
    os << format_double(w.norm) << ',' << (w.subsolution ? "subsolution" : "supersolution") << '\n';
  }
}

}  // namespace lorentz_eikonal
