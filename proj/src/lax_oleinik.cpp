// SPDX-License-Identifier: Apache-2.0
#include "lorentz_eikonal/lax_oleinik.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "lorentz_eikonal/distance.hpp"
#include "lorentz_eikonal/errors.hpp"
#include "lorentz_eikonal/io.hpp"

namespace lorentz_eikonal {

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::InteriorMin: return "InteriorMin";
    case SolveStatus::BoundaryMin: return "BoundaryMin";
    case SolveStatus::Degenerate: return "Degenerate";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Side { Past, Future };

// Objective over spatial points of the footprint ball. The future side is
// folded into a minimisation: -phi(y) - d(y, x).
class SurfaceObjective {
 public:
  SurfaceObjective(const Spacetime& st, const CauchySurface& surface, const Event& x, Side side,
                   const SurfaceRegion& region, const Tolerances& tol)
      : st_(st), surface_(surface), x_(x), side_(side), region_(region), tol_(tol) {}

  // y is projected onto the ball first so the objective is defined everywhere.
  double operator()(const Vec& y_raw) {
    ++evaluations;
    const Vec y = project(y_raw);
    const Event on_surface = surface_.point(y);
    const Event& from = side_ == Side::Past ? x_ : on_surface;
    const Event& to = side_ == Side::Past ? on_surface : x_;
    if (!st_.has_flat_cones() && relation(st_, from, to, tol_) == Relation::Unrelated) return kInf;
    const double d = lorentz_distance(st_, from, to, tol_).value;
    const double phi = surface_.datum(y);
    return side_ == Side::Past ? phi - d : -phi - d;
  }

  Vec project(const Vec& y) const {
    const Vec off = y - region_.center;
    const double r = off.norm();
    if (r <= region_.radius || r == 0.0) return y;
    return region_.center + off * (region_.radius / r);
  }

  long evaluations = 0;

 private:
  const Spacetime& st_;
  const CauchySurface& surface_;
  const Event& x_;
  Side side_;
  SurfaceRegion region_;
  Tolerances tol_;
};

struct Candidate {
  Vec y;
  double value;
};

Candidate golden_section(SurfaceObjective& f, double a, double b, double tol_x) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  Vec y(1);
  auto eval = [&](double v) {
    y[0] = v;
    return f(y);
  };
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = eval(c), fd = eval(d);
  for (int it = 0; it < 200 && (b - a) > tol_x; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = eval(d);
    }
  }
  // Include the bracket ends: minima on the footprint boundary sit there.
  Candidate best{Vec::Constant(1, c), fc};
  if (fd < best.value) best = {Vec::Constant(1, d), fd};
  const double fa = eval(a), fb = eval(b);
  if (fa < best.value) best = {Vec::Constant(1, a), fa};
  if (fb < best.value) best = {Vec::Constant(1, b), fb};
  return best;
}

Candidate nelder_mead(SurfaceObjective& f, const Vec& start, double size, double tol_value, double tol_x) {
  const int m = static_cast<int>(start.size());
  std::vector<Vec> pts;
  std::vector<double> vals;
  pts.push_back(start);
  for (int a = 0; a < m; ++a) {
    Vec p = start;
    p[a] += size;
    pts.push_back(p);
  }
  for (const auto& p : pts) vals.push_back(f(p));
  std::vector<int> order(static_cast<std::size_t>(m + 1));
  for (int it = 0; it < 4000; ++it) {
    for (int i = 0; i <= m; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int i, int j) { return vals[static_cast<std::size_t>(i)] < vals[static_cast<std::size_t>(j)]; });
    const int best = order.front(), worst = order.back(), second = order[static_cast<std::size_t>(m - 1)];
    double diam = 0.0;
    for (int i = 0; i <= m; ++i) diam = std::max(diam, (pts[static_cast<std::size_t>(i)] - pts[static_cast<std::size_t>(best)]).norm());
    if (vals[static_cast<std::size_t>(worst)] - vals[static_cast<std::size_t>(best)] <= tol_value && diam <= tol_x) break;
    if (diam <= 1e-14) break;
    Vec centroid = Vec::Zero(m);
    for (int i = 0; i <= m; ++i)
      if (i != worst) centroid += pts[static_cast<std::size_t>(i)];
    centroid /= m;
    const Vec& xw = pts[static_cast<std::size_t>(worst)];
    const Vec xr = centroid + (centroid - xw);
    const double fr = f(xr);
    if (fr < vals[static_cast<std::size_t>(best)]) {
      const Vec xe = centroid + 2.0 * (centroid - xw);
      const double fe = f(xe);
      if (fe < fr) {
        pts[static_cast<std::size_t>(worst)] = xe;
        vals[static_cast<std::size_t>(worst)] = fe;
      } else {
        pts[static_cast<std::size_t>(worst)] = xr;
        vals[static_cast<std::size_t>(worst)] = fr;
      }
      continue;
    }
    if (fr < vals[static_cast<std::size_t>(second)]) {
      pts[static_cast<std::size_t>(worst)] = xr;
      vals[static_cast<std::size_t>(worst)] = fr;
      continue;
    }
    const bool outside = fr < vals[static_cast<std::size_t>(worst)];
    const Vec xc = outside ? Vec(centroid + 0.5 * (xr - centroid)) : Vec(centroid + 0.5 * (xw - centroid));
    const double fc = f(xc);
    if (fc < (outside ? fr : vals[static_cast<std::size_t>(worst)])) {
      pts[static_cast<std::size_t>(worst)] = xc;
      vals[static_cast<std::size_t>(worst)] = fc;
      continue;
    }
    for (int i = 0; i <= m; ++i) {
      if (i == best) continue;
      pts[static_cast<std::size_t>(i)] = pts[static_cast<std::size_t>(best)] + 0.5 * (pts[static_cast<std::size_t>(i)] - pts[static_cast<std::size_t>(best)]);
      vals[static_cast<std::size_t>(i)] = f(pts[static_cast<std::size_t>(i)]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  const std::size_t bi = static_cast<std::size_t>(it - vals.begin());
  return {f.project(pts[bi]), *it};
}

void check_footprint_in_domain(const CauchySurface& surface, const SurfaceRegion& region) {
  for (std::size_t a = 0; a < surface.domain.size(); ++a) {
    const double c = region.center[static_cast<Eigen::Index>(a)];
    if (c - region.radius < surface.domain[a][0] - 1e-12 || c + region.radius > surface.domain[a][1] + 1e-12)
      throw Error(ErrorCode::PointOutsideSlab, "causal footprint extends beyond the surface domain");
  }
}

SolveResult minimize_on_surface(const Spacetime& st, const CauchySurface& surface, const Event& x, Side side,
                                const SolveOptions& opts) {
  const Tolerances& tol = opts.tol;
  const SurfaceRegion region =
      side == Side::Past ? future_footprint(st, surface, x, tol) : past_footprint(st, surface, x, tol);

  SolveResult out;
  out.point = x;
  out.footprint_radius = region.radius;

  if (region.radius < opts.degenerate_radius) {
    const double phi = surface.datum(region.center);
    out.value = side == Side::Past ? phi : -phi;
    out.minimizers.push_back(surface.point(region.center));
    out.status = SolveStatus::Degenerate;
    return out;
  }
  check_footprint_in_domain(surface, region);

  SurfaceObjective f(st, surface, x, side, region, tol);
  const int m = st.spatial_dim();
  const int n = std::max(opts.scan_points, 3);
  const double R = region.radius;
  std::vector<Candidate> refined;

  if (m == 1) {
    std::vector<double> ys(static_cast<std::size_t>(n)), fs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      ys[static_cast<std::size_t>(i)] = region.center[0] - R + 2.0 * R * i / (n - 1);
      fs[static_cast<std::size_t>(i)] = f(Vec::Constant(1, ys[static_cast<std::size_t>(i)]));
    }
    const double tol_x = 1e-12 * std::max(1.0, R);
    for (int i = 0; i < n; ++i) {
      const double fi = fs[static_cast<std::size_t>(i)];
      const bool left_ok = i == 0 || fi <= fs[static_cast<std::size_t>(i - 1)];
      const bool right_ok = i == n - 1 || fi <= fs[static_cast<std::size_t>(i + 1)];
      if (!(left_ok && right_ok) || !std::isfinite(fi)) continue;
      const double a = ys[static_cast<std::size_t>(std::max(i - 1, 0))];
      const double b = ys[static_cast<std::size_t>(std::min(i + 1, n - 1))];
      Candidate c = golden_section(f, a, b, tol_x);
      if (fi < c.value) c = {Vec::Constant(1, ys[static_cast<std::size_t>(i)]), fi};
      refined.push_back(c);
    }
  } else {
    // Tensor scan of the ball's bounding box; points outside the ball are skipped.
    std::vector<Candidate> scan;
    std::vector<int> idx(static_cast<std::size_t>(m), 0);
    const double h = 2.0 * R / (n - 1);
    while (true) {
      Vec y(m);
      for (int a = 0; a < m; ++a) y[a] = region.center[a] - R + h * idx[static_cast<std::size_t>(a)];
      if ((y - region.center).norm() <= R) scan.push_back({y, f(y)});
      int a = 0;
      while (a < m && ++idx[static_cast<std::size_t>(a)] == n) idx[static_cast<std::size_t>(a++)] = 0;
      if (a == m) break;
    }
    std::sort(scan.begin(), scan.end(), [](const Candidate& p, const Candidate& q) { return p.value < q.value; });
    std::vector<Vec> seeds;
    for (const auto& c : scan) {
      if (static_cast<int>(seeds.size()) >= opts.max_refine_seeds) break;
      if (!std::isfinite(c.value)) break;
      bool far = true;
      for (const auto& s : seeds)
        if ((s - c.y).norm() < 2.5 * h) far = false;
      if (far) seeds.push_back(c.y);
    }
    for (const auto& s : seeds) {
      Candidate c = nelder_mead(f, s, h, 1e-3 * tol.solve, 1e-10 * std::max(1.0, R));
      refined.push_back(c);
    }
    if (!scan.empty()) refined.push_back(scan.front());
  }

  if (refined.empty()) throw Error(ErrorCode::NoConvergence, "no admissible point found in the causal footprint");
  std::sort(refined.begin(), refined.end(), [](const Candidate& p, const Candidate& q) { return p.value < q.value; });
  out.value = refined.front().value;
  std::vector<Vec> kept;
  for (const auto& c : refined) {
    if (c.value > out.value + tol.cluster) break;
    bool duplicate = false;
    for (const auto& k : kept)
      if ((k - c.y).norm() < opts.minimizer_separation) duplicate = true;
    if (duplicate) continue;
    kept.push_back(c.y);
    out.minimizers.push_back(surface.point(c.y));
  }
  out.evaluations = f.evaluations;
  const double off = (kept.front() - region.center).norm();
  out.status = off >= R - tol.cone ? SolveStatus::BoundaryMin : SolveStatus::InteriorMin;
  return out;
}

}  // namespace

SolveResult solve_at(const Spacetime& st, const CauchySurface& surface, const Event& x, const SolveOptions& opts) {
  return minimize_on_surface(st, surface, x, Side::Past, opts);
}

SolveResult solve_future_side(const Spacetime& st, const CauchySurface& surface, const Event& x,
                              const SolveOptions& opts) {
  return minimize_on_surface(st, surface, x, Side::Future, opts);
}

// ---------------------------------------------------------------------------
// Grids

std::size_t GridSpec::size() const {
  std::size_t n = static_cast<std::size_t>(std::max(t_nodes, 0));
  for (int k : space_nodes) n *= static_cast<std::size_t>(std::max(k, 0));
  return n;
}

double GridSpec::t_at(int k) const {
  const int intervals = t_end_open ? t_nodes : t_nodes - 1;
  if (intervals <= 0) return t_begin;
  return t_begin + (t_end - t_begin) * k / intervals;
}

double GridSpec::space_at(int axis, int k) const {
  const auto a = static_cast<std::size_t>(axis);
  if (space_nodes[a] <= 1) return 0.5 * (space[a][0] + space[a][1]);
  return space[a][0] + (space[a][1] - space[a][0]) * k / (space_nodes[a] - 1);
}

Event GridSpec::node(std::size_t flat) const {
  const int m = static_cast<int>(space.size());
  Vec c(m + 1);
  for (int a = m - 1; a >= 0; --a) {
    const auto n = static_cast<std::size_t>(space_nodes[static_cast<std::size_t>(a)]);
    c[a + 1] = space_at(a, static_cast<int>(flat % n));
    flat /= n;
  }
  c[0] = t_at(static_cast<int>(flat));
  return Event(c);
}

std::vector<Event> GridSpec::nodes() const {
  std::vector<Event> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(node(i));
  return out;
}

std::size_t SolutionField::error_count() const {
  return static_cast<std::size_t>(
      std::count_if(diagnostics.begin(), diagnostics.end(), [](const NodeDiagnostics& d) { return !d.error.empty(); }));
}

double SolutionField::interpolate(const Event& p) const {
  const int m = static_cast<int>(grid.space.size());
  if (p.dim() != m + 1) throw Error(ErrorCode::DomainEdge, "probe dimension does not match the grid");
  // Per-axis lower index and weight.
  std::vector<int> lo(static_cast<std::size_t>(m + 1));
  std::vector<double> w(static_cast<std::size_t>(m + 1));
  std::vector<int> count(static_cast<std::size_t>(m + 1));
  for (int a = 0; a <= m; ++a) {
    const int n = a == 0 ? grid.t_nodes : grid.space_nodes[static_cast<std::size_t>(a - 1)];
    count[static_cast<std::size_t>(a)] = n;
    const double first = a == 0 ? grid.t_at(0) : grid.space_at(a - 1, 0);
    const double last = a == 0 ? grid.t_at(n - 1) : grid.space_at(a - 1, n - 1);
    const double v = p.coords[a];
    if (v < first - 1e-12 || v > last + 1e-12) throw Error(ErrorCode::DomainEdge, "probe outside the solution grid");
    if (n == 1) {
      lo[static_cast<std::size_t>(a)] = 0;
      w[static_cast<std::size_t>(a)] = 0.0;
      continue;
    }
    const double pos = std::clamp((v - first) / (last - first) * (n - 1), 0.0, static_cast<double>(n - 1));
    const int i = std::min(static_cast<int>(std::floor(pos)), n - 2);
    lo[static_cast<std::size_t>(a)] = i;
    w[static_cast<std::size_t>(a)] = pos - i;
  }
  double total = 0.0;
  for (unsigned corner = 0; corner < (1u << (m + 1)); ++corner) {
    double weight = 1.0;
    std::size_t flat = 0;
    for (int a = 0; a <= m; ++a) {
      const bool up = (corner >> a) & 1u;
      const auto ua = static_cast<std::size_t>(a);
      if (up && count[ua] == 1) {
        weight = 0.0;
        break;
      }
      weight *= up ? w[ua] : 1.0 - w[ua];
      flat = flat * static_cast<std::size_t>(count[ua]) + static_cast<std::size_t>(lo[ua] + (up ? 1 : 0));
    }
    if (weight != 0.0) total += weight * values[flat];
  }
  return total;
}

SolutionField solve_grid(const Spacetime& st, const CauchySurface& surface, const GridSpec& grid,
                         const SolveOptions& opts, int threads) {
  if (static_cast<int>(grid.space.size()) != st.spatial_dim() || grid.space_nodes.size() != grid.space.size())
    throw Error(ErrorCode::InvalidConfig, "grid must have one spatial axis per spatial coordinate");
  SolutionField field;
  field.grid = grid;
  const std::size_t n = grid.size();
  field.values.assign(n, std::numeric_limits<double>::quiet_NaN());
  field.diagnostics.resize(n);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Event p = grid.node(i);
      NodeDiagnostics& diag = field.diagnostics[i];
      try {
        const SolveResult r = solve_at(st, surface, p, opts);
        field.values[i] = r.value;
        diag.minimizer = r.minimizers.front();
        diag.minimizer_count = static_cast<int>(r.minimizers.size());
        diag.status = r.status;
      } catch (const Error& e) {
        diag.error = e.what();
        diag.minimizer = Event(Vec::Constant(st.dim(), std::numeric_limits<double>::quiet_NaN()));
      }
    }
  };

  const int workers = std::max(1, threads);
  if (workers == 1 || n < 2) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + static_cast<std::size_t>(workers) - 1) / static_cast<std::size_t>(workers);
    for (int w = 0; w < workers; ++w) {
      const std::size_t b = static_cast<std::size_t>(w) * chunk;
      const std::size_t e = std::min(n, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& t : pool) t.join();
  }
  return field;
}

// ---------------------------------------------------------------------------
// Calibrated rays and upper support functions

Geodesic calibrated_ray(const Spacetime& st, const CauchySurface& surface, const SolveResult& result, const Event& x,
                        const SolveOptions& opts) {
  (void)surface;
  if (result.minimizers.empty()) throw Error(ErrorCode::NullMinimizer, "solve result carries no minimiser");
  const Event& y = result.minimizers.front();
  const double d = lorentz_distance(st, x, y, opts.tol).value;
  if (!(d > opts.tol.dist)) throw Error(ErrorCode::NullMinimizer, "minimiser is null related; calibration degenerates");
  auto g = connect_maximal_geodesic(st, x, y, opts.tol);
  if (!g) throw Error(ErrorCode::NullMinimizer, "no timelike geodesic to the minimiser");
  g->curve.parametrization = Parametrization::ProperTime;
  return *g;
}

Event point_at_parameter(const Spacetime& st, const Curve& c, double s) {
  const auto& samples = c.samples;
  if (samples.empty()) throw Error(ErrorCode::DomainEdge, "empty curve");
  if (s <= samples.front().s) return samples.front().point;
  if (s >= samples.back().s) return samples.back().point;
  auto it = std::upper_bound(samples.begin(), samples.end(), s,
                             [](double v, const CurveSample& smp) { return v < smp.s; });
  const CurveSample& from = *(it - 1);
  Vec x = from.point.coords, v = from.tangent;
  geodesic_rk4_step(st, x, v, s - from.s);
  return Event(x);
}

double calibration_defect(const Spacetime& st, const CauchySurface& surface, const Geodesic& ray, double base_value,
                          int samples, const SolveOptions& opts) {
  const double length = ray.curve.samples.back().s;
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = length * i / std::max(samples - 1, 1);
    const Event p = point_at_parameter(st, ray.curve, t);
    const Event on = Event(p.coords);
    Event clamped = on;
    if (clamped.coords[0] > surface.level) clamped.coords[0] = surface.level;
    const double u = solve_at(st, surface, clamped, opts).value;
    worst = std::max(worst, std::abs(u - base_value - t));
  }
  return worst;
}

UpperSupport::UpperSupport(Spacetime st, Event waypoint, double datum_value, double tail_distance, double fraction,
                           Tolerances tol)
    : st_(std::move(st)),
      waypoint_(std::move(waypoint)),
      datum_value_(datum_value),
      tail_(tail_distance),
      fraction_(fraction),
      tol_(tol) {}

double UpperSupport::operator()(const Event& z) const {
  if (relation(st_, z, waypoint_, tol_) != Relation::Chronological) return kInf;
  return datum_value_ - lorentz_distance(st_, z, waypoint_, tol_).value - tail_;
}

UpperSupport upper_support(const Spacetime& st, const CauchySurface& surface, const Event& x, double fraction,
                           const SolveOptions& opts) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error(ErrorCode::InvalidConfig, "waypoint fraction must lie in (0, 1)");
  const SolveResult r = solve_at(st, surface, x, opts);
  const Geodesic ray = calibrated_ray(st, surface, r, x, opts);
  const double length = ray.curve.samples.back().s;
  const Event p = point_at_parameter(st, ray.curve, fraction * length);
  const Event& y = r.minimizers.front();
  const double tail = lorentz_distance(st, p, y, opts.tol).value;
  return UpperSupport(st, p, surface.datum(y.spatial()), tail, fraction, opts.tol);
}

void write_solution_csv(std::ostream& os, const Spacetime& st, const SolutionField& field) {
  std::vector<std::string> header = st.labels();
  header.push_back("u");
  for (const auto& l : st.labels()) header.push_back("min_" + l);
  header.push_back("minimizers");
  header.push_back("status");
  write_csv_header(os, header);
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    const Event p = field.grid.node(i);
    const auto& d = field.diagnostics[i];
    for (int a = 0; a < p.dim(); ++a) os << format_double(p.coords[a]) << ',';
    os << format_double(field.values[i]) << ',';
    for (int a = 0; a < d.minimizer.dim(); ++a) os << format_double(d.minimizer.coords[a]) << ',';
    os << d.minimizer_count << ',' << (d.error.empty() ? to_string(d.status) : std::string_view("Error")) << '\n';
  }
}

}  // namespace lorentz_eikonal
