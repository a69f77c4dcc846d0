// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>
#include <sstream>

#include "lorentz_eikonal/errors.hpp"
#include "lorentz_eikonal/expression.hpp"
#include "lorentz_eikonal/geodesic.hpp"
#include "test_support.hpp"

using namespace lorentz_eikonal;
using test_support::slab_2d;
using test_support::vec;

TEST_CASE("integrate_geodesic in flat space follows straight lines") {
  const Spacetime mk = Spacetime::minkowski(2, slab_2d());
  const Geodesic g1 = integrate_geodesic(mk, Event{0, 0}, vec({1, 0}), StopRule::reach_time(1.0));
  CHECK(g1.end().time() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(g1.end().coords[1]) < 1e-14);

  const Geodesic g2 = integrate_geodesic(mk, Event{0, 0}, vec({2 / std::sqrt(3.0), 1 / std::sqrt(3.0)}),
                                         StopRule::reach_time(1.0));
  CHECK(std::abs(g2.end().time() - 1.0) < 1e-12);
  CHECK(std::abs(g2.end().coords[1] - 0.5) < 1e-12);
  for (std::size_t i = 1; i < g2.curve.samples.size(); ++i) CHECK(g2.curve.samples[i].s > g2.curve.samples[i - 1].s);
}

TEST_CASE("stop rules and slab exits") {
  const Spacetime mk = Spacetime::minkowski(2, slab_2d(-1, 1, -1, 1));
  const Geodesic g = integrate_geodesic(mk, Event{0, 0}, vec({1, 0}), StopRule::proper_time(0.5));
  CHECK(g.end().time() == doctest::Approx(0.5).epsilon(1e-12));
  const Geodesic leave = integrate_geodesic(mk, Event{0, 0}, vec({1, 0}), StopRule::leave_slab());
  CHECK(leave.end().time() == doctest::Approx(1.0).epsilon(1e-9));
  try {
    integrate_geodesic(mk, Event{0, 0}, vec({1, 0.9}), StopRule::reach_time(2.0));
    FAIL("expected LeftSlab");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LeftSlab);
  }
}

TEST_CASE("conformally flat first integral is conserved") {
  const Spacetime cf = Spacetime::conformally_flat(2, slab_2d(), parse_expression("1 + 0.1*t"));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (int n = 0; n < 20; ++n) {
    const Vec v = vec({1.0, u(rng)});
    const Geodesic g = integrate_geodesic(cf, Event{-1, 0}, v, StopRule::reach_time(1.0));
    CHECK(first_integral_drift(cf, g.curve) < 1e-6);
    // Conformal factor squared times the flat spatial velocity is conserved:
    // a^2 x' is a first integral of the x-independent metric.
    const auto& a = g.curve.samples.front();
    const auto& b = g.curve.samples.back();
    const double fa = std::pow(1 + 0.1 * a.point.time(), 2) * a.tangent[1];
    const double fb = std::pow(1 + 0.1 * b.point.time(), 2) * b.tangent[1];
    CHECK(fa == doctest::Approx(fb).epsilon(1e-7));
  }
}

TEST_CASE("lorentz_length examples") {
  const Spacetime mk = Spacetime::minkowski(2, slab_2d(-3, 3));
  CHECK(lorentz_length(mk, straight_segment(mk, Event{0, 0}, Event{1, 0})) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lorentz_length(mk, straight_segment(mk, Event{0, 0}, Event{2, 1})) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));
  CHECK(lorentz_length(mk, straight_segment(mk, Event{0, 0}, Event{1, 1})) == 0.0);
  try {
    lorentz_length(mk, straight_segment(mk, Event{0, 0}, Event{-1, 0}));
    FAIL("expected NotCausal");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotCausal);
  }
  CHECK_THROWS_AS(lorentz_length(mk, straight_segment(mk, Event{0, 0}, Event{0.5, 1})), Error);
}

TEST_CASE("length additivity and proper-time reparametrisation") {
  const Spacetime cf = Spacetime::conformally_flat(2, slab_2d(), parse_expression("1 + 0.1*t"));
  const Geodesic g = integrate_geodesic(cf, Event{-1, 0}, vec({1, 0.3}), StopRule::reach_time(1.0));
  const double total = lorentz_length(cf, g.curve);
  const std::size_t cut = g.curve.samples.size() / 2;
  Curve a, b;
  a.samples.assign(g.curve.samples.begin(), g.curve.samples.begin() + static_cast<long>(cut) + 1);
  b.samples.assign(g.curve.samples.begin() + static_cast<long>(cut), g.curve.samples.end());
  CHECK(lorentz_length(cf, a) + lorentz_length(cf, b) == doctest::Approx(total).epsilon(1e-12));

  const Curve pt = reparametrize_by_proper_time(cf, g.curve);
  CHECK(pt.parametrization == Parametrization::ProperTime);
  for (const auto& s : pt.samples)
    CHECK(lorentz_norm(cf, {s.point, s.tangent}) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("connect_maximal_geodesic examples") {
  const Spacetime mk = Spacetime::minkowski(2, slab_2d(-3, 3));
  const auto g1 = connect_maximal_geodesic(mk, Event{0, 0}, Event{1, 0});
  REQUIRE(g1);
  CHECK(lorentz_length(mk, g1->curve) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(g1->curve.parametrization == Parametrization::ProperTime);
  const auto g2 = connect_maximal_geodesic(mk, Event{0, 0}, Event{2, 1});
  REQUIRE(g2);
  CHECK(lorentz_length(mk, g2->curve) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-9));
  CHECK((g2->end().coords - vec({2, 1})).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_FALSE(connect_maximal_geodesic(mk, Event{0, 0}, Event{1, 2}));
  CHECK_FALSE(connect_maximal_geodesic(mk, Event{0, 0}, Event{1, 1}));
  ConnectOptions keep_null;
  keep_null.null_related_as_none = false;
  const auto gn = connect_maximal_geodesic(mk, Event{0, 0}, Event{1, 1}, default_tolerances(), keep_null);
  REQUIRE(gn);
  CHECK(lorentz_length(mk, gn->curve) == 0.0);
}

TEST_CASE("shooting matches the flat interval on random pairs") {
  const Spacetime mk = Spacetime::minkowski(3, Slab{-1, 1, {{-1, 1}, {-1, 1}}});
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);
  int tested = 0;
  while (tested < 100) {
    const Event x{u(rng), u(rng), u(rng)};
    const Event y{u(rng), u(rng), u(rng)};
    const double d = test_support::minkowski_interval(x, y);
    if (d < 0.05) continue;
    ++tested;
    const auto g = connect_maximal_geodesic(mk, x, y);
    REQUIRE(g);
    CHECK(std::abs(lorentz_length(mk, g->curve) - d) < 1e-8);
  }
}

TEST_CASE("maximality under small orthogonal bumps") {
  const Spacetime cf = Spacetime::conformally_flat(2, slab_2d(), parse_expression("1 + 0.1*t"));
  const Event x{-0.8, 0.0}, y{0.8, 0.4};
  const auto g = connect_maximal_geodesic(cf, x, y);
  REQUIRE(g);
  const double base = lorentz_length(cf, g->curve);
  for (double amp : {-1e-2, -3e-3, 3e-3, 1e-2}) {
    Curve bumped = g->curve;
    const double span = bumped.parameter_span();
    for (auto& s : bumped.samples) {
      const double r = s.s / span;
      s.point.coords[1] += amp * std::sin(M_PI * r);
      s.tangent[1] += amp * M_PI / span * std::cos(M_PI * r);
    }
    CHECK(lorentz_length(cf, bumped) <= base + 1e-9);
  }
}

TEST_CASE("curve CSV export") {
  const Spacetime mk = Spacetime::minkowski(2, slab_2d());
  std::ostringstream os;
  write_curve_csv(os, mk, straight_segment(mk, Event{0, 0}, Event{1, 0.5}, 2));
  const std::string s = os.str();
  CHECK(s.rfind("s,t,x,dt,dx\n", 0) == 0);
  CHECK(s.find("0.5,0.5,0.25,1,0.5") != std::string::npos);
}
