// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <sstream>

#include "lorentz_eikonal/errors.hpp"
#include "lorentz_eikonal/expression.hpp"
#include "lorentz_eikonal/verify.hpp"
#include "test_support.hpp"

using namespace lorentz_eikonal;
using test_support::slab_2d;
using test_support::vec;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidConfig;
}

const Spacetime& mink() {
  static const Spacetime st = Spacetime::minkowski(2, slab_2d(-1, 2));
  return st;
}

const Spacetime& paper() {
  static const Spacetime st = Spacetime::paper_minkowski_2d(slab_2d(-2, 0));
  return st;
}

ScalarField affine(double a) {
  const double k = std::sqrt(1 + a * a);
  return callable_field(mink(), [a, k](const Event& p) { return a * p.coords[1] + (p.time() - 1) * k; }, "affine");
}

}  // namespace

TEST_CASE("numeric_gradient examples") {
  const auto g = numeric_gradient(mink(), affine(0.0), Event{0.2, 0.1}, 1e-4);
  REQUIRE(g);
  CHECK((g->components - vec({-1, 0})).norm() < 1e-9);

  const ScalarField uc = counterexample_family(paper(), -1.0);
  const auto gc = numeric_gradient(paper(), uc, Event{-0.5, 0.0}, 1e-4);
  REQUIRE(gc);
  CHECK(metric_product(metric_at(paper(), gc->base), gc->components, gc->components) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK_FALSE(numeric_gradient(paper(), uc, Event{-1.0, 0.0}, 1e-4));
  CHECK(code_of([&] { numeric_gradient(paper(), uc, Event{-1e-5, 0.0}, 1e-4); }) == ErrorCode::DomainEdge);
}

TEST_CASE("eikonal_residual examples") {
  CHECK(std::abs(eikonal_residual(mink(), affine(0.0), Event{0, 0})) < 1e-9);
  CHECK(std::abs(eikonal_residual(mink(), affine(0.75), Event{-0.3, 0.4})) < 1e-8);
  const ScalarField sq = callable_field(mink(), [](const Event& p) { return p.time() * p.time(); }, "t^2");
  CHECK(eikonal_residual(mink(), sq, Event{1, 0}) == doctest::Approx(-3.0).epsilon(1e-6));
  const ScalarField uc = counterexample_family(paper(), -1.0);
  CHECK(code_of([&] { eikonal_residual(paper(), uc, Event{-1.0, 0.0}); }) == ErrorCode::NonDifferentiable);
}

TEST_CASE("reachable gradients at smooth points and at the kink") {
  const ScalarField uc = counterexample_family(paper(), -1.0);
  const GradientProbe smooth = reachable_gradients(paper(), uc, Event{-0.5, 0.2}, 1e-2, 16);
  CHECK(smooth.differentiable);
  CHECK(smooth.reachable.size() == 1);

  const GradientProbe kink = reachable_gradients(paper(), uc, Event{-1.0, 0.2}, 1e-2, 24);
  CHECK_FALSE(kink.differentiable);
  REQUIRE(kink.reachable.size() == 2);
  const Vec a = kink.reachable[0].components, b = kink.reachable[1].components;
  CHECK(a[0] * b[0] < 0);
  for (const Tangent& v : kink.reachable) CHECK(classify_vector(paper(), v) != CausalClass::Spacelike);
  // Convex kink: the hull belongs to the sub-differential.
  CHECK(kink.super.empty());
  CHECK(kink.sub.size() == 2);

  // Halving the radius keeps the clusters in place.
  const GradientProbe half = reachable_gradients(paper(), uc, Event{-1.0, 0.2}, 5e-3, 24);
  REQUIRE(half.reachable.size() == 2);
  for (const Tangent& v : half.reachable) {
    double best = 1e9;
    for (const Tangent& w : kink.reachable) best = std::min(best, (v.components - w.components).norm());
    CHECK(best < 1e-5);
  }

  const ScalarField bad = callable_field(mink(), [](const Event& p) { return std::abs(std::sin(1e6 * p.time())); }, "noise");
  CHECK(code_of([&] { reachable_gradients(mink(), bad, Event{0, 0}, 1e-2, 8); }) == ErrorCode::AllProbesNonDifferentiable);
}

TEST_CASE("viscosity_check examples") {
  const CauchySurface s = make_cauchy_surface(mink(), 1.0, InitialDatum::constant(0.0));
  const ScalarField u = variational_field(mink(), s);
  const ViscosityFragment f = viscosity_check(mink(), u, Event{0.0, 0.0});
  CHECK(f.pass());
  CHECK(f.vectors_tested > 0);

  const ScalarField uc = counterexample_family(paper(), -1.0);
  const ViscosityFragment k = viscosity_check(paper(), uc, Event{-1.0, 0.3});
  CHECK(k.pass());
  CHECK(k.subsolution_vacuous);
  CHECK_FALSE(k.supersolution_vacuous);

  const ScalarField sq = callable_field(mink(), [](const Event& p) { return p.time() * p.time(); }, "t^2");
  const ViscosityFragment q = viscosity_check(mink(), sq, Event{0.8, 0.0});
  CHECK_FALSE(q.pass());
  REQUIRE_FALSE(q.violations.empty());
  CHECK(q.violations[0].norm == doctest::Approx(-2.56).epsilon(1e-4));
  CHECK(viscosity_check(mink(), sq, Event{0.5, 0.0}).pass());
}

TEST_CASE("time orientation") {
  const CauchySurface s = make_cauchy_surface(mink(), 1.0, InitialDatum::constant(0.0));
  const ScalarField u = variational_field(mink(), s);
  const std::vector<Event> region{Event{-0.5, 0.0}, Event{0.0, 0.3}, Event{0.5, -0.2}};
  CHECK(time_orientation(mink(), u, region).kind == Orientation::PastConsistent);

  // Composition with the time reflection turns past-directed gradients into future-directed ones.
  const ScalarField reflected =
      callable_field(mink(), [&](const Event& p) { return u(Event{-p.time(), p.coords[1]}); }, "u(-t, x)");
  const std::vector<Event> mirrored{Event{0.5, 0.0}, Event{0.0, 0.3}, Event{-0.5, -0.2}};
  CHECK(time_orientation(mink(), reflected, mirrored).kind == Orientation::FutureConsistent);

  const ScalarField uc = counterexample_family(paper(), -1.0);
  const OrientationVerdict v = time_orientation(paper(), uc, {Event{-0.5, 0.0}, Event{-1.0, 0.0}, Event{-1.5, 0.0}});
  CHECK(v.kind == Orientation::Mixed);
  REQUIRE_FALSE(v.locations.empty());
  CHECK(std::abs(v.locations[0].time() + 1.0) < 1e-12);
  CHECK(to_string(Orientation::Mixed) == "Mixed");
}

TEST_CASE("semiconcavity_check examples") {
  const ScalarField flat = affine(0.0);
  CHECK(semiconcavity_check(flat, Event{-0.5, -0.5}, Event{0.5, 0.7}, 0.0).pass);
  const ScalarField concave = callable_field(mink(), [](const Event& p) { return -std::abs(p.coords[1]); }, "-|x|");
  CHECK(semiconcavity_check(concave, Event{0, -0.3}, Event{0, 0.4}, 0.0).pass);
  const ScalarField convex = callable_field(mink(), [](const Event& p) { return std::abs(p.coords[1]); }, "|x|");
  CHECK(semiconcavity_check(convex, Event{0, -1.0}, Event{0, 1.0}, 10.0).pass);
  const SemiconcavityResult r = semiconcavity_check(convex, Event{0, -0.05}, Event{0, 0.05}, 10.0);
  CHECK_FALSE(r.pass);
  CHECK(r.worst_t == doctest::Approx(0.5));
  CHECK(r.worst_margin == doctest::Approx(-(0.05 - 10.0 * 0.125 * 0.01)).epsilon(1e-9));
  // The smallest constant for a quadratic along the segment equals its second derivative.
  const ScalarField quad = callable_field(mink(), [](const Event& p) { return p.coords[1] * p.coords[1]; }, "x^2");
  CHECK(semiconcavity_constant(quad, Event{0, -0.5}, Event{0, 0.5}) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("comparison_bound_f_c") {
  CHECK(comparison_bound_f_c(0.0, 2.0) == 0.5);
  CHECK(comparison_bound_f_c(-1.0, M_PI / 4) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(comparison_bound_f_c(-1.0, M_PI / 2 + 0.1) == doctest::Approx(-std::tan(0.1)).epsilon(1e-12));
  CHECK(comparison_bound_f_c(-1.0, 4.0) == doctest::Approx(1 / M_PI).epsilon(1e-14));
  CHECK(comparison_bound_f_c(4.0, 0.5) == doctest::Approx(2.0 / std::tanh(1.0)).epsilon(1e-14));
  CHECK(code_of([] { comparison_bound_f_c(0.0, 0.0); }) == ErrorCode::NonpositiveArclength);
  CHECK(code_of([] { comparison_bound_f_c(1.0, -1.0); }) == ErrorCode::NonpositiveArclength);
}

TEST_CASE("predicted semiconcavity constant bounds the Hessian of the flat distance") {
  const Event y{1.0, 0.2};
  for (const Event& x : {Event{0.0, 0.0}, Event{-0.5, 0.6}, Event{0.3, 0.1}}) {
    const double h = 1e-4;
    auto f = [&](double t, double z) { return -test_support::minkowski_interval(Event{t, z}, y); };
    Eigen::Matrix2d H;
    const double t = x.time(), z = x.coords[1];
    H(0, 0) = (f(t + h, z) - 2 * f(t, z) + f(t - h, z)) / (h * h);
    H(1, 1) = (f(t, z + h) - 2 * f(t, z) + f(t, z - h)) / (h * h);
    H(0, 1) = H(1, 0) = (f(t + h, z + h) - f(t + h, z - h) - f(t - h, z + h) + f(t - h, z - h)) / (4 * h * h);
    const double spectral = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(H).eigenvalues().cwiseAbs().maxCoeff();
    CHECK(predicted_semiconcavity_constant(x, y) == doctest::Approx(spectral).epsilon(1e-4));
  }
}

TEST_CASE("level_set_achronality") {
  const CauchySurface s = make_cauchy_surface(mink(), 1.0, InitialDatum::constant(0.0));
  const ScalarField u0 = variational_field(mink(), s);
  const AchronalityResult a = level_set_achronality(mink(), u0, -0.5, {{-1.0, 1.0}}, -1.0, 0.99, 20, 60);
  CHECK(a.pass);
  REQUIRE(a.points.size() == 20);
  for (const Event& p : a.points) CHECK(std::abs(p.time() - 0.5) < 1e-9);

  const ScalarField lin = affine(0.75);
  CHECK(level_set_achronality(mink(), lin, -1.25, {{-1.0, 1.0}}, -1.0, 1.5, 30, 100).pass);

  const ScalarField steep = callable_field(mink(), [](const Event& p) { return p.time() - 2 * p.coords[1]; }, "t-2x");
  const AchronalityResult c = level_set_achronality(mink(), steep, 0.0, {{-0.4, 0.4}}, -1.0, 1.0, 20, 50);
  CHECK_FALSE(c.pass);
  CHECK_FALSE(c.violations.empty());

  CHECK(code_of([&] { level_set_achronality(mink(), lin, 10.0, {{-1.0, 1.0}}, -1.0, 0.9, 5, 5); }) ==
        ErrorCode::EmptyLevelSet);
  const ScalarField wave =
      callable_field(mink(), [](const Event& p) { return std::cos(6 * p.time()); }, "cos(6t)");
  CHECK(code_of([&] { level_set_achronality(mink(), wave, 0.0, {{-1.0, 1.0}}, -1.0, 1.0, 5, 5); }) ==
        ErrorCode::MultipleRoots);
}

TEST_CASE("stability experiment rules") {
  const Spacetime st = Spacetime::minkowski(2, slab_2d());
  const CauchySurface s = make_cauchy_surface(st, 1.0, InitialDatum::constant(0.0));
  GridSpec g;
  g.t_nodes = 6;
  g.space = {{-1.0, 1.0}};
  g.space_nodes = {7};
  const std::vector<int> terms{1, 2, 4, 8, 16};

  const StabilityReport sin_rep = stability_experiment(st, s, StabilityRule::Sinusoidal, g, terms);
  REQUIRE(sin_rep.rows.size() == 5);
  for (const StabilityRow& r : sin_rep.rows) CHECK(r.error <= 1.0 / r.n + 2e-8);
  CHECK(sin_rep.bounded);
  CHECK(sin_rep.strictly_decreasing);

  const StabilityReport shift = stability_experiment(st, s, StabilityRule::ConstantShift, g, terms);
  for (const StabilityRow& r : shift.rows) CHECK(r.error == doctest::Approx(1.0 / r.n).epsilon(1e-9));

  const StabilityReport dec = stability_experiment(st, s, StabilityRule::Decreasing, g, terms);
  CHECK(dec.monotone_fields);
  CHECK(dec.bounded);
  CHECK(dec.failed_nodes == 0);

  const InitialDatum p3 = perturbed_datum(s.datum, StabilityRule::Sinusoidal, 3);
  CHECK(p3(vec({0.4})) == doctest::Approx(std::sin(1.2) / 3));
}

TEST_CASE("counterexample family") {
  const ScalarField uc = counterexample_family(paper(), -1.0);
  CHECK(uc(Event{-0.5, 0.0}) == doctest::Approx(-0.5));
  CHECK(uc(Event{-1.5, 0.0}) == doctest::Approx(-0.5));
  CHECK(uc(Event{0.0, 1.3}) == 0.0);
  CHECK(code_of([] { counterexample_family(paper(), 0.0); }) == ErrorCode::NonNegativeC);
  CHECK(code_of([] { counterexample_family(Spacetime::minkowski(3, Slab{-1, 0, {{-1, 1}, {-1, 1}}}), -0.5); }) ==
        ErrorCode::InvalidSpacetime);
}

TEST_CASE("uniqueness premises") {
  const CauchySurface s = make_cauchy_surface(paper(), 0.0, InitialDatum::constant(0.0));
  const std::vector<Event> probes{Event{-0.5, 0.0}, Event{-1.0, 0.2}, Event{-1.5, -0.3}};
  const UniquenessReport good = uniqueness_check(paper(), s, variational_field(paper(), s), probes);
  CHECK(good.premises_hold);
  CHECK(good.agrees);

  const UniquenessReport bad = uniqueness_check(paper(), s, counterexample_family(paper(), -1.0), probes);
  CHECK(bad.viscosity_pass);
  CHECK(bad.boundary_error < 1e-12);
  CHECK(bad.orientation.kind == Orientation::Mixed);
  CHECK_FALSE(bad.premises_hold);
  CHECK_FALSE(bad.agrees);
  CHECK(bad.max_difference == doctest::Approx(1.0).epsilon(1e-9));  // 2|x - c| at x = -1.5
}

TEST_CASE("residual statistics and violation export") {
  const ScalarField lin = affine(0.75);
  const ResidualStats r = residual_stats(mink(), lin, {Event{0, 0}, Event{0.5, 0.5}, Event{-0.5, 0.2}});
  CHECK(r.total == 3);
  CHECK(r.differentiable == 3);
  CHECK(r.within == 3);
  CHECK(r.max < 1e-8);

  std::ostringstream os;
  write_violations_csv(os, mink(), {ViscosityViolation{Event{0.8, 0.0}, vec({-1.6, 0.0}), -2.56, true}});
  CHECK(os.str().rfind("t,x,", 0) == 0);
  CHECK(os.str().find("-2.5600000000000001") != std::string::npos);
}
