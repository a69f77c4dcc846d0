// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lorentz_eikonal/distance.hpp"
#include "lorentz_eikonal/errors.hpp"
#include "lorentz_eikonal/expression.hpp"
#include "lorentz_eikonal/lax_oleinik.hpp"
#include "lorentz_eikonal/verify.hpp"

namespace le = lorentz_eikonal;
using le::Event;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

le::Vec vec(std::initializer_list<double> v) {
  le::Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

const le::Spacetime& mink() {
  static const le::Spacetime st = le::Spacetime::minkowski(2, le::Slab{-1.0, 1.0, {{-3.0, 3.0}}});
  return st;
}

const le::Spacetime& conformal() {
  static const le::Spacetime st =
      le::Spacetime::conformally_flat(2, le::Slab{-1.0, 1.0, {{-3.0, 3.0}}}, le::parse_expression("1 + 0.1*t"));
  return st;
}

le::GridSpec benchmark_grid() {
  le::GridSpec g;
  g.t_begin = -1.0;
  g.t_end = 1.0;
  g.t_nodes = 51;
  g.t_end_open = true;
  g.space = {{-1.0, 1.0}};
  g.space_nodes = {51};
  return g;
}

struct Benchmark {
  std::string name;
  le::CauchySurface surface;
  std::function<double(const Event&)> closed_form;  // empty when unknown
};

std::vector<Benchmark> benchmarks() {
  std::vector<Benchmark> out;
  out.push_back({"constant", le::make_cauchy_surface(mink(), 1.0, le::InitialDatum::constant(0.0)),
                 [](const Event& p) { return p.time() - 1.0; }});
  out.push_back({"linear", le::make_cauchy_surface(mink(), 1.0, le::InitialDatum::linear(vec({0.75}), 0.0)),
                 [](const Event& p) { return 0.75 * p.coords[1] + 1.25 * (p.time() - 1.0); }});
  out.push_back({"sine",
                 le::make_cauchy_surface(mink(), 1.0,
                                         le::InitialDatum::expression(le::parse_expression("0.3*sin(2*x)"), {"x"})),
                 {}});
  return out;
}

double grid_error(const le::SolutionField& f, const std::function<double(const Event&)>& exact) {
  double e = 0.0;
  for (std::size_t i = 0; i < f.grid.size(); ++i) e = std::max(e, std::abs(f.values[i] - exact(f.grid.node(i))));
  return e;
}

Outcome criterion1() {
  const auto b = benchmarks()[0];
  const auto t0 = Clock::now();
  const le::SolutionField f = le::solve_grid(mink(), b.surface, benchmark_grid(), {}, 1);
  const double wall = seconds_since(t0);
  const double err = grid_error(f, b.closed_form);
  return {err < 1e-6 && wall < 10.0 && f.error_count() == 0,
          "max|u-(t-1)|=" + num(err) + " wall=" + num(wall) + "s nodes=" + std::to_string(f.grid.size())};
}

Outcome criterion2() {
  const auto b = benchmarks()[1];
  const le::SolutionField f = le::solve_grid(mink(), b.surface, benchmark_grid(), {}, 1);
  const double err = grid_error(f, b.closed_form);
  const le::SolveResult r = le::solve_at(mink(), b.surface, Event{0.0, 0.0});
  const double dv = std::abs(r.value + 1.25);
  const double dy = (r.minimizers.front().coords - vec({1.0, -0.6})).cwiseAbs().maxCoeff();
  return {err < 1e-5 && dv < 1e-6 && dy < 1e-5 && f.error_count() == 0,
          "max_err=" + num(err) + " |u(0,0)+1.25|=" + num(dv) + " minimizer_err=" + num(dy)};
}

Outcome criterion3() {
  bool pass = true;
  std::string detail;
  const le::GridSpec g = benchmark_grid();
  for (const auto& b : benchmarks()) {
    const le::ScalarField u = le::variational_field(mink(), b.surface);
    std::size_t diff = 0, within = 0;
    for (const Event& p : g.nodes()) {
      std::optional<le::Tangent> grad;
      try {
        grad = le::numeric_gradient(mink(), u, p, 1e-4);
      } catch (const le::Error&) {
        continue;
      }
      if (!grad) continue;
      ++diff;
      const double r = le::metric_product(le::metric_at(mink(), p), grad->components, grad->components) + 1.0;
      within += std::abs(r) < 1e-3;
    }
    const double frac = diff ? static_cast<double>(within) / static_cast<double>(diff) : 0.0;
    pass = pass && diff > 0 && frac >= 0.99;
    detail += b.name + ":" + std::to_string(within) + "/" + std::to_string(diff) + " ";
  }
  return {pass, detail + "(|residual|<1e-3, step 1e-4)"};
}

Outcome criterion4() {
  const auto b = benchmarks()[2];
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ut(-1.0, 0.8), ux(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Event x{ut(rng), ux(rng)};
    const le::SolveResult r = le::solve_at(mink(), b.surface, x);
    const le::Geodesic ray = le::calibrated_ray(mink(), b.surface, r, x);
    worst = std::max(worst, le::calibration_defect(mink(), b.surface, ray, r.value, 21));
  }
  return {worst < 1e-5, "20 base points on the sine benchmark, max defect=" + num(worst)};
}

Outcome criterion5() {
  bool pass = true;
  std::ostringstream d;
  // u_phi on each benchmark, probed on random points plus the grid diagonal.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ut(-0.95, 0.9), ux(-0.95, 0.95);
  std::vector<Event> region;
  for (int k = 0; k < 40; ++k) region.push_back(Event{ut(rng), ux(rng)});
  for (const auto& b : benchmarks()) {
    const le::OrientationVerdict v = le::time_orientation(mink(), le::variational_field(mink(), b.surface), region);
    pass = pass && v.kind == le::Orientation::PastConsistent;
    d << b.name << "=" << le::to_string(v.kind) << " ";
  }

  const double c = -1.0;
  const le::Spacetime paper = le::Spacetime::paper_minkowski_2d(le::Slab{-2.0, 0.0, {{-3.0, 3.0}}});
  const le::CauchySurface gamma = le::make_cauchy_surface(paper, 0.0, le::InitialDatum::constant(0.0));
  const le::ScalarField uc = le::counterexample_family(paper, c);
  std::vector<Event> probes;
  for (int i = 0; i <= 18; ++i)
    for (double y : {-0.5, 0.0, 0.7}) probes.push_back(Event{-1.9 + 0.1 * i, y});
  bool visc = true;
  for (const Event& p : probes) {
    try {
      visc = visc && le::viscosity_check(paper, uc, p).pass();
    } catch (const le::Error&) {
    }
  }
  double boundary = 0.0;
  for (int i = 0; i <= 60; ++i) boundary = std::max(boundary, std::abs(uc(Event{0.0, -3.0 + 0.1 * i})));
  const le::OrientationVerdict ov = le::time_orientation(paper, uc, probes);
  double below = 0.0, above = 0.0;
  for (int i = 0; i <= 190; ++i) {
    for (double y : {-1.0, 0.25}) {
      const Event p{-1.9 + 0.01 * i, y};
      const double diff = uc(p) - le::solve_at(paper, gamma, p).value;
      if (p.time() < c)
        below = std::max(below, std::abs(diff - 2.0 * std::abs(p.time() - c)));
      else
        above = std::max(above, std::abs(diff));
    }
  }
  const bool cx = visc && boundary < 1e-12 && ov.kind == le::Orientation::Mixed && below < 1e-9 && above < 1e-9;
  d << "| u_-1: viscosity=" << (visc ? "pass" : "fail") << " boundary=" << num(boundary)
    << " orientation=" << le::to_string(ov.kind) << " diff_err_below=" << num(below) << " diff_above=" << num(above);
  return {pass && cx, d.str()};
}

Outcome criterion6() {
  const auto b = benchmarks()[0];
  const le::StabilityReport rep =
      le::stability_experiment(mink(), b.surface, le::StabilityRule::Sinusoidal, benchmark_grid(), {1, 2, 4, 8, 16});
  bool bounded = true;
  std::string d;
  for (const auto& r : rep.rows) {
    bounded = bounded && r.error <= 1.0 / r.n + 2e-8;
    d += "e_" + std::to_string(r.n) + "=" + num(r.error) + " ";
  }
  return {bounded && rep.strictly_decreasing && rep.failed_nodes == 0,
          d + (rep.strictly_decreasing ? "strictly decreasing" : "not decreasing")};
}

Outcome criterion7() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto chronological_pair = [&](const le::Spacetime& st) {
    for (;;) {
      const Event x{u(rng), u(rng)}, y{u(rng), u(rng)};
      if (le::relation(st, x, y) == le::Relation::Chronological && le::lorentz_distance(st, x, y).value > 0.05)
        return std::make_pair(x, y);
    }
  };
  double mk_err = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto [x, y] = chronological_pair(mink());
    const double a = le::lorentz_distance(mink(), x, y).value;
    const double s = le::lorentz_distance_shooting(mink(), x, y).value;
    mk_err = std::max(mk_err, std::abs(a - s));
  }
  double worst_rel = 0.0, worst_below = 0.0;
  const le::OracleGrid og{201, 201, 5, 0.05};
  for (int k = 0; k < 50; ++k) {
    const auto [x, y] = chronological_pair(conformal());
    const double s = le::lorentz_distance(conformal(), x, y).value;
    const double o = le::distance_oracle_dag(conformal(), x, y, og);
    worst_below = std::max(worst_below, o - s);
    worst_rel = std::max(worst_rel, std::abs(s - o) / s);
  }
  double slack = INFINITY;
  int triples = 0;
  while (triples < 500) {
    const Event x{u(rng), u(rng)};
    const Event y{x.time() + 0.5 * (u(rng) + 1.0) * (1.0 - x.time()), 0.0};
    Event yy = y;
    yy.coords[1] = x.coords[1] + 0.95 * (y.time() - x.time()) * u(rng);
    const Event z{yy.time() + 0.5 * (u(rng) + 1.0) * (1.0 - yy.time()), yy.coords[1]};
    Event zz = z;
    zz.coords[1] = yy.coords[1] + 0.95 * (z.time() - yy.time()) * u(rng);
    if (std::abs(yy.coords[1]) > 2.5 || std::abs(zz.coords[1]) > 2.5) continue;
    ++triples;
    const double dxz = le::lorentz_distance(conformal(), x, zz).value;
    const double dxy = le::lorentz_distance(conformal(), x, yy).value;
    const double dyz = le::lorentz_distance(conformal(), yy, zz).value;
    slack = std::min(slack, dxz - dxy - dyz);
  }
  const bool pass = mk_err < 1e-6 && worst_below <= 1e-9 && worst_rel < 0.03 && slack >= -1e-6;
  return {pass, "minkowski max|shoot-analytic|=" + num(mk_err) + " conformal max rel gap=" + num(worst_rel) +
                    " max(oracle-shoot)=" + num(worst_below) + " triangle min slack=" + num(slack)};
}

Outcome criterion8() {
  const auto b = benchmarks()[2];
  const le::ScalarField u = le::variational_field(mink(), b.surface);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  struct Segment {
    Event a, b;
  };
  std::vector<Segment> segs;
  while (segs.size() < 1000) {
    const Event a{-1.0 + 1.8 * unif(rng), -1.0 + 2.0 * unif(rng)};
    le::Vec d = vec({normal(rng), normal(rng)});
    d *= 0.05 * unif(rng) / d.norm();
    const Event e(le::Vec(a.coords + d));
    if (e.time() < -1.0 || e.time() > 0.8 || std::abs(e.coords[1]) > 1.0) continue;
    segs.push_back({a, e});
  }
  // One constant for the whole box, from the minimisers at endpoints and midpoints.
  double C = 0.0;
  for (const auto& s : segs)
    for (const Event& q : {s.a, s.b, Event(le::Vec(0.5 * (s.a.coords + s.b.coords)))})
      C = std::max(C, le::predicted_semiconcavity_constant(q, le::solve_at(mink(), b.surface, q).minimizers.front()));
  C *= 1.1;
  int passed = 0, control_failed = 0;
  const le::ScalarField control =
      le::callable_field(mink(), [](const Event& p) { return std::abs(p.coords[1]); }, "|x|");
  for (const auto& s : segs) {
    passed += le::semiconcavity_check(u, s.a, s.b, C, 9, 1e-10).pass;
    control_failed += !le::semiconcavity_check(control, s.a, s.b, C).pass;
  }
  // Flat comparison bound 1/s for the smallest distance to a minimiser in the box.
  const double f0 = le::comparison_bound_f_c(0.0, 0.2);

  double dominance = INFINITY, base_gap = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Event x{-0.9 + 1.6 * unif(rng), -0.8 + 1.6 * unif(rng)};
    const le::UpperSupport sup = le::upper_support(mink(), b.surface, x);
    const double ux = u(x);
    base_gap = std::max(base_gap, std::abs(sup(x) - ux));
    for (int j = 0; j < 100; ++j) {
      le::Vec d = vec({normal(rng), normal(rng)});
      d *= 0.1 * std::sqrt(unif(rng)) / d.norm();
      const Event z(le::Vec(x.coords + d));
      dominance = std::min(dominance, sup(z) - u(z));
    }
  }
  const bool pass = passed == 1000 && control_failed > 0 && dominance >= -1e-8 && base_gap < 1e-8;
  return {pass, "C=" + num(C) + " passed=" + std::to_string(passed) + "/1000 control |x| failures=" +
                    std::to_string(control_failed) + " f_0(0.2)=" + num(f0) + " support min(sup-u)=" +
                    num(dominance) + " base gap=" + num(base_gap)};
}

Outcome criterion9() {
  const auto b = benchmarks()[2];
  const double s = 0.5;
  const le::InitialDatum mid = le::InitialDatum::callable(
      [&](const le::Vec& y) { return le::solve_at(mink(), b.surface, Event::from_parts(s, y)).value; }, "u at 0.5");
  const le::CauchySurface stage = le::make_cauchy_surface(mink(), s, mid, {{-3.0, 3.0}}, false);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ut(-1.0, 0.45), ux(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Event x{ut(rng), ux(rng)};
    worst = std::max(worst, std::abs(le::solve_at(mink(), stage, x).value - le::solve_at(mink(), b.surface, x).value));
  }
  return {worst < 3e-8, "50 probes on the sine benchmark through s=0.5, max diff=" + num(worst)};
}

Outcome criterion10() {
  bool pass = true;
  std::string d;
  for (const auto& b : benchmarks()) {
    const le::ScalarField u = le::variational_field(mink(), b.surface);
    int ok = 0;
    for (double t : {-0.5, 0.0, 0.5}) {
      const double level = u(Event{t, 0.0});
      const le::AchronalityResult r =
          le::level_set_achronality(mink(), u, level, {{-1.0, 1.0}}, -1.0, 1.0, 40, 200);
      ok += r.pass;
    }
    pass = pass && ok == 3;
    d += b.name + ":" + std::to_string(ok) + "/3 ";
  }
  return {pass, d + "levels achronal over 200 pairs each"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"constant-data benchmark", criterion1},  {"linear-data benchmark", criterion2},
      {"eikonal residual", criterion3},         {"calibration", criterion4},
      {"orientation and uniqueness", criterion5}, {"stability", criterion6},
      {"distance backends", criterion7},        {"semiconcavity and support", criterion8},
      {"dynamic programming", criterion9},      {"level-set achronality", criterion10}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %zu (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
