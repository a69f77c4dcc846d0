// SPDX-License-Identifier: Apache-2.0
#include "lorentz_eikonal/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lorentz_eikonal/causal.hpp"
#include "lorentz_eikonal/errors.hpp"
#include "lorentz_eikonal/io.hpp"

namespace lorentz_eikonal {

namespace {

Vec acceleration(const Spacetime& st, const Vec& x, const Vec& v) {
  const Christoffel g = st.christoffel(x);
  Vec a(x.size());
  for (int k = 0; k < g.dim; ++k) a[k] = -v.dot(g.upper[k] * v);
  return a;
}

// Amount by which x lies outside the slab (0 when inside).
double slab_violation(const Spacetime& st, const Vec& x) {
  const Slab& s = st.slab();
  double out = std::max({0.0, s.t_min - x[0], x[0] - s.t_max});
  for (int a = 1; a < x.size(); ++a)
    out = std::max({out, s.space[a - 1][0] - x[a], x[a] - s.space[a - 1][1]});
  return out;
}

double spatial_violation(const Spacetime& st, const Vec& x) {
  const Slab& s = st.slab();
  double out = 0.0;
  for (int a = 1; a < x.size(); ++a)
    out = std::max({out, s.space[a - 1][0] - x[a], x[a] - s.space[a - 1][1]});
  return out;
}

struct State {
  Vec x;
  Vec v;
};

State sub_step(const Spacetime& st, const State& from, double h) {
  State s = from;
  geodesic_rk4_step(st, s.x, s.v, h);
  return s;
}

// Bisection on the sub-step length in [0, h] for the first sign change of f.
// f(from) and f(step h) must bracket zero; stops once |f| <= tol.
template <class F>
std::pair<State, double> locate(const Spacetime& st, const State& from, double h, F&& f, double tol) {
  double lo = 0.0, hi = h;
  const bool start_negative = f(from) < 0;
  State best = sub_step(st, from, hi);
  double best_theta = hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    State s = sub_step(st, from, mid);
    const double val = f(s);
    if (std::abs(val) <= tol) return {s, mid};
    if ((val < 0) == start_negative) {
      lo = mid;
    } else {
      hi = mid;
      best = s;
      best_theta = mid;
    }
    if (hi - lo <= std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(h))) break;
  }
  return {best, best_theta};
}

}  // namespace

void geodesic_rk4_step(const Spacetime& st, Vec& x, Vec& v, double h) {
  const Vec k1x = v;
  const Vec k1v = acceleration(st, x, v);
  const Vec x2 = x + 0.5 * h * k1x, v2 = v + 0.5 * h * k1v;
  const Vec k2x = v2;
  const Vec k2v = acceleration(st, x2, v2);
  const Vec x3 = x + 0.5 * h * k2x, v3 = v + 0.5 * h * k2v;
  const Vec k3x = v3;
  const Vec k3v = acceleration(st, x3, v3);
  const Vec x4 = x + h * k3x, v4 = v + h * k3v;
  const Vec k4x = v4;
  const Vec k4v = acceleration(st, x4, v4);
  x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
}

Geodesic integrate_geodesic(const Spacetime& st, const Event& p, const Vec& velocity, StopRule stop,
                            const Tolerances& tol, const IntegratorOptions& opts) {
  st.require_inside(p);
  if (velocity.size() != st.dim()) throw Error(ErrorCode::InvalidConfig, "velocity has wrong dimension");
  if (velocity.squaredNorm() == 0.0) throw Error(ErrorCode::InvalidConfig, "initial velocity must be nonzero");

  Geodesic out;
  out.start = p;
  out.initial_velocity = velocity;
  out.curve.parametrization = Parametrization::Affine;
  out.curve.samples.push_back({0.0, p, velocity});

  State cur{p.coords, velocity};
  double s = 0.0;
  double h = opts.max_arc_step / velocity.norm();

  const double g0 = metric_product(st.metric(p.coords), velocity, velocity);
  const double lorentz_speed = std::sqrt(std::max(0.0, -g0));

  if (stop.kind == StopRule::Kind::ReachTime && std::abs(p.coords[0] - stop.value) <= tol.hit) return out;
  if (stop.kind == StopRule::Kind::ProperTimeBudget && stop.value <= 0.0) return out;

  for (std::size_t step = 0; step < opts.max_steps; ++step) {
    const double speed = cur.v.norm();
    State next;
    double err = 0.0;
    while (true) {
      const State full = sub_step(st, cur, h);
      const State half = sub_step(st, sub_step(st, cur, 0.5 * h), 0.5 * h);
      err = ((half.x - full.x).lpNorm<Eigen::Infinity>() + h * (half.v - full.v).lpNorm<Eigen::Infinity>()) / 15.0;
      const double allowed = tol.ode * h * speed;
      if (err <= allowed) {
        next = half;
        break;
      }
      if (h * speed <= opts.min_arc_step)
        throw Error(ErrorCode::StepFailure, "step size underflow while meeting the ODE tolerance");
      h *= 0.5;
    }
    out.error_estimate += err;

    switch (stop.kind) {
      case StopRule::Kind::ReachTime: {
        const double level = stop.value;
        auto f = [&](const State& st_) { return st_.x[0] - level; };
        if (f(next) == 0.0 || (f(next) < 0) != (f(cur) < 0)) {
          auto [hit, theta] = locate(st, cur, h, f, tol.hit);
          if (spatial_violation(st, hit.x) > 1e-12) throw Error(ErrorCode::LeftSlab, "geodesic left the slab");
          out.curve.samples.push_back({s + theta, Event(hit.x), hit.v});
          out.last_step = theta;
          return out;
        }
        break;
      }
      case StopRule::Kind::ProperTimeBudget: {
        if (lorentz_speed > 0.0 && (s + h) * lorentz_speed >= stop.value) {
          const double theta = stop.value / lorentz_speed - s;
          const State end = sub_step(st, cur, theta);
          if (slab_violation(st, end.x) > 1e-12) throw Error(ErrorCode::LeftSlab, "geodesic left the slab");
          out.curve.samples.push_back({s + theta, Event(end.x), end.v});
          out.last_step = theta;
          return out;
        }
        break;
      }
      case StopRule::Kind::LeaveSlab: break;
    }

    if (slab_violation(st, next.x) > 0.0) {
      if (stop.kind != StopRule::Kind::LeaveSlab) throw Error(ErrorCode::LeftSlab, "geodesic left the slab");
      auto f = [&](const State& st_) { return slab_violation(st, st_.x) > 0.0 ? 1.0 : -1.0; };
      // Bisection to the last inside point; the boundary is met to within tol.hit in parameter.
      double lo = 0.0, hi = h;
      State inside = cur;
      for (int it = 0; it < 200 && hi - lo > tol.hit / std::max(speed, 1e-300); ++it) {
        const double mid = 0.5 * (lo + hi);
        const State sm = sub_step(st, cur, mid);
        if (f(sm) < 0) {
          lo = mid;
          inside = sm;
        } else {
          hi = mid;
        }
      }
      if (lo > 0.0) out.curve.samples.push_back({s + lo, Event(inside.x), inside.v});
      out.last_step = lo;
      return out;
    }

    s += h;
    cur = next;
    out.curve.samples.push_back({s, Event(cur.x), cur.v});
    out.last_step = h;
    if (err < tol.ode * h * speed / 32.0) h = std::min(2.0 * h, opts.max_arc_step / std::max(cur.v.norm(), 1e-300));
  }
  throw Error(ErrorCode::StepFailure, "maximum number of geodesic steps exceeded");
}

double lorentz_length(const Spacetime& st, const Curve& c, const Tolerances& tol) {
  if (c.samples.size() < 2) return 0.0;
  double total = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    const auto& smp = c.samples[i];
    const Mat g = st.metric(smp.point.coords);
    const CausalClass cls = classify_with_metric(g, smp.tangent, tol.classify);
    if (cls != CausalClass::Zero && !is_future_directed(cls))
      throw Error(ErrorCode::NotCausal, "curve tangent at sample " + std::to_string(i) + " is " +
                                            std::string(to_string(cls)));
    const double speed = std::sqrt(std::max(0.0, -metric_product(g, smp.tangent, smp.tangent)));
    if (i > 0) total += 0.5 * (prev + speed) * (smp.s - c.samples[i - 1].s);
    prev = speed;
  }
  return total;
}

Curve straight_segment(const Spacetime& st, const Event& a, const Event& b, int n) {
  (void)st;
  Curve c;
  c.parametrization = Parametrization::Affine;
  const Vec d = b.coords - a.coords;
  for (int i = 0; i <= n; ++i) {
    const double s = static_cast<double>(i) / n;
    c.samples.push_back({s, Event(Vec(a.coords + s * d)), d});
  }
  return c;
}

Curve reparametrize_by_proper_time(const Spacetime& st, const Curve& c) {
  Curve out;
  out.parametrization = Parametrization::ProperTime;
  double tau = 0.0;
  double prev_speed = 0.0;
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    const auto& smp = c.samples[i];
    const Mat g = st.metric(smp.point.coords);
    const double speed = std::sqrt(std::max(0.0, -metric_product(g, smp.tangent, smp.tangent)));
    if (!(speed > 0.0)) throw Error(ErrorCode::NotCausal, "proper-time parametrisation needs a timelike curve");
    if (i > 0) tau += 0.5 * (prev_speed + speed) * (smp.s - c.samples[i - 1].s);
    out.samples.push_back({tau, smp.point, smp.tangent / speed});
    prev_speed = speed;
  }
  return out;
}

double first_integral_drift(const Spacetime& st, const Curve& c) {
  if (c.samples.empty()) return 0.0;
  const auto q = [&](const CurveSample& s) { return metric_product(st.metric(s.point.coords), s.tangent, s.tangent); };
  const double q0 = q(c.samples.front());
  double drift = 0.0;
  for (const auto& s : c.samples) drift = std::max(drift, std::abs(q(s) - q0));
  return drift;
}

Mat orthonormal_frame(const Spacetime& st, const Event& p) {
  const int n = st.dim();
  const Mat g = st.metric(p.coords);
  Mat frame(n, n);
  std::vector<double> signs(static_cast<std::size_t>(n), 1.0);
  signs[0] = -1.0;
  for (int a = 0; a < n; ++a) {
    Vec v = Vec::Zero(n);
    v[a] = 1.0;
    for (int b = 0; b < a; ++b) {
      const Vec e = frame.col(b);
      v -= signs[static_cast<std::size_t>(b)] * metric_product(g, v, e) * e;
    }
    const double q = metric_product(g, v, v);
    frame.col(a) = v / std::sqrt(std::abs(q));
  }
  return frame;
}

Vec hyperboloid_direction(const Mat& frame, const Vec& rapidity) {
  const double r = rapidity.norm();
  const double sinhc = r < 1e-8 ? 1.0 + r * r / 6.0 : std::sinh(r) / r;
  const int n = static_cast<int>(frame.cols());
  Vec c(n);
  c[0] = std::cosh(r);
  c.tail(n - 1) = sinhc * rapidity;
  return frame * c;
}

namespace {

struct ShotResult {
  bool ok = false;
  Vec residual;
  Geodesic geodesic;
};

ShotResult shoot(const Spacetime& st, const Event& x, const Event& y, const Mat& frame, const Vec& rapidity,
                 const Tolerances& tol) {
  ShotResult r;
  try {
    r.geodesic = integrate_geodesic(st, x, hyperboloid_direction(frame, rapidity), StopRule::reach_time(y.time()), tol);
  } catch (const Error&) {
    return r;
  }
  r.residual = r.geodesic.end().spatial() - y.spatial();
  r.ok = r.residual.allFinite();
  return r;
}

// Rapidity of the straight chart direction y - x in the frame at x.
Vec flat_guess(const Mat& frame, const Event& x, const Event& y) {
  const Vec c = frame.fullPivLu().solve(Vec(y.coords - x.coords));
  const int n = static_cast<int>(c.size());
  const Vec spatial = c.tail(n - 1);
  const double sn = spatial.norm();
  if (sn == 0.0 || !(c[0] > sn)) return Vec::Zero(n - 1);
  return std::atanh(sn / c[0]) * spatial / sn;
}

std::optional<Geodesic> newton_shoot(const Spacetime& st, const Event& x, const Event& y, const Mat& frame,
                                     Vec psi, const Tolerances& tol, int max_iterations) {
  const int m = static_cast<int>(psi.size());
  ShotResult cur = shoot(st, x, y, frame, psi, tol);
  if (!cur.ok) return std::nullopt;
  for (int it = 0; it <= max_iterations; ++it) {
    const double res = cur.residual.lpNorm<Eigen::Infinity>();
    if (res <= tol.bvp) {
      // Unit initial velocity, so the affine parameter is proper time.
      cur.geodesic.curve.parametrization = Parametrization::ProperTime;
      return cur.geodesic;
    }
    if (it == max_iterations) break;
    Mat jac(m, m);
    for (int j = 0; j < m; ++j) {
      const double dpsi = 1e-7 * std::max(1.0, std::abs(psi[j]));
      Vec pp = psi, pm = psi;
      pp[j] += dpsi;
      pm[j] -= dpsi;
      const ShotResult a = shoot(st, x, y, frame, pp, tol);
      const ShotResult b = shoot(st, x, y, frame, pm, tol);
      if (a.ok && b.ok) {
        jac.col(j) = (a.residual - b.residual) / (2 * dpsi);
      } else if (a.ok) {
        jac.col(j) = (a.residual - cur.residual) / dpsi;
      } else if (b.ok) {
        jac.col(j) = (cur.residual - b.residual) / dpsi;
      } else {
        return std::nullopt;
      }
    }
    const Vec delta = jac.fullPivLu().solve(Vec(-cur.residual));
    if (!delta.allFinite()) return std::nullopt;
    double lambda = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls, lambda *= 0.5) {
      const Vec trial = psi + lambda * delta;
      ShotResult cand = shoot(st, x, y, frame, trial, tol);
      if (cand.ok && cand.residual.lpNorm<Eigen::Infinity>() < res) {
        psi = trial;
        cur = std::move(cand);
        improved = true;
        break;
      }
    }
    if (!improved) return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::optional<Geodesic> connect_maximal_geodesic(const Spacetime& st, const Event& x, const Event& y,
                                                 const Tolerances& tol, const ConnectOptions& opts) {
  st.require_inside(x);
  st.require_inside(y);
  const Relation rel = relation(st, x, y, tol);
  if (rel == Relation::Unrelated) return std::nullopt;
  if (rel == Relation::CausalOnly) {
    if (opts.null_related_as_none || !st.has_flat_cones() || y.time() <= x.time()) return std::nullopt;
    // Null geodesics of conformally flat metrics are straight lines in the chart.
    Geodesic g;
    g.start = x;
    g.initial_velocity = y.coords - x.coords;
    g.curve = straight_segment(st, x, y, 1);
    return g;
  }

  const Mat frame = orthonormal_frame(st, x);
  const int m = st.dim() - 1;
  const Vec guess = flat_guess(frame, x, y);

  if (auto g = newton_shoot(st, x, y, frame, guess, tol, opts.max_newton_iterations)) return g;

  std::optional<Geodesic> best;
  double best_length = -1.0;
  for (int k = 0; k < opts.restarts; ++k) {
    Vec dir(m);
    if (m == 1) {
      dir[0] = (k % 2 == 0) ? 1.0 : -1.0;
    } else {
      // Spiral points on the unit sphere of rapidity directions.
      const double z = 1.0 - (2.0 * k + 1.0) / opts.restarts;
      const double phi = k * 2.399963229728653;
      dir = Vec::Zero(m);
      dir[0] = std::sqrt(std::max(0.0, 1.0 - z * z)) * std::cos(phi);
      dir[1] = std::sqrt(std::max(0.0, 1.0 - z * z)) * std::sin(phi);
      if (m > 2) dir[2] = z;
      else dir.normalize();
    }
    const double magnitude = guess.norm() * (0.5 + 0.25 * (k / 2)) + 0.1 * (k / 2);
    auto g = newton_shoot(st, x, y, frame, Vec(magnitude * dir), tol, opts.max_newton_iterations);
    if (!g) continue;
    const double len = g->curve.samples.back().s;
    if (len > best_length) {
      best_length = len;
      best = std::move(g);
    }
  }
  if (!best) throw Error(ErrorCode::NoConvergence, "geodesic shooting failed from every start");
  return best;
}

void write_curve_csv(std::ostream& os, const Spacetime& st, const Curve& c) {
  std::vector<std::string> header{"s"};
  for (const auto& l : st.labels()) header.push_back(l);
  for (const auto& l : st.labels()) header.push_back("d" + l);
  write_csv_header(os, header);
  for (const auto& smp : c.samples) {
    std::vector<double> row{smp.s};
    for (int a = 0; a < smp.point.dim(); ++a) row.push_back(smp.point.coords[a]);
    for (int a = 0; a < smp.tangent.size(); ++a) row.push_back(smp.tangent[a]);
    write_csv_row(os, row);
  }
}

}  // namespace lorentz_eikonal
