// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "lorentz_eikonal/errors.hpp"
#include "lorentz_eikonal/expression.hpp"
#include "lorentz_eikonal/spacetime.hpp"
#include "test_support.hpp"

using namespace lorentz_eikonal;
using test_support::slab_2d;
using test_support::vec;

namespace {

Spacetime conformal_2d() { return Spacetime::conformally_flat(2, slab_2d(), parse_expression("1 + 0.1*t")); }

// Levi-Civita symbols from central differences of metric_at, written out
// independently of the library's own finite-difference route.
double reference_christoffel(const Spacetime& st, const Event& p, int k, int i, int j, double h) {
  const int n = st.dim();
  auto dg = [&](int l) {
    Event a = p, b = p;
    a.coords[l] += h;
    b.coords[l] -= h;
    return Mat((metric_at(st, a) - metric_at(st, b)) / (2 * h));
  };
  const Mat ginv = inverse_metric_at(st, p);
  double s = 0.0;
  for (int l = 0; l < n; ++l) s += 0.5 * ginv(k, l) * (dg(i)(j, l) + dg(j)(i, l) - dg(l)(i, j));
  return s;
}

}  // namespace

TEST_CASE("metric_at examples") {
  const Spacetime mk = Spacetime::minkowski(2, slab_2d());
  const Mat g = metric_at(mk, Event{0, 0});
  CHECK(g(0, 0) == -1.0);
  CHECK(g(1, 1) == 1.0);
  CHECK(g(0, 1) == 0.0);

  const Spacetime paper = Spacetime::paper_minkowski_2d(slab_2d());
  CHECK(paper.labels() == std::vector<std::string>{"x", "y"});
  const Mat gp = metric_at(paper, Event{0.3, -0.2});
  CHECK(gp(0, 0) == -1.0);  // g_xx
  CHECK(gp(1, 1) == 1.0);   // g_yy

  const Mat gc = metric_at(conformal_2d(), Event{1, 0});
  CHECK(gc(0, 0) == doctest::Approx(-1.21).epsilon(1e-14));
  CHECK(gc(1, 1) == doctest::Approx(1.21).epsilon(1e-14));
  CHECK(gc(0, 1) == 0.0);

  CHECK_THROWS_AS(metric_at(mk, Event{2, 0}), Error);
  try {
    metric_at(mk, Event{0, 5});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PointOutsideSlab);
  }
}

TEST_CASE("classify_vector examples and orientation convention") {
  const Spacetime mk = Spacetime::minkowski(2, slab_2d());
  const Event o{0, 0};
  CHECK(classify_vector(mk, {o, vec({1, 0})}) == CausalClass::TimelikeFuture);
  CHECK(classify_vector(mk, {o, vec({1, 1})}) == CausalClass::LightlikeFuture);
  CHECK(classify_vector(mk, {o, vec({0, 1})}) == CausalClass::Spacelike);
  CHECK(classify_vector(mk, {o, vec({-1, 0})}) == CausalClass::TimelikePast);
  CHECK(classify_vector(mk, {o, vec({-1, 1})}) == CausalClass::LightlikePast);
  CHECK(classify_vector(mk, {o, vec({0, 0})}) == CausalClass::Zero);
  // Relative band: a tiny null perturbation stays lightlike.
  CHECK(classify_vector(mk, {o, vec({1, 1 + 1e-12})}) == CausalClass::LightlikeFuture);
}

TEST_CASE("orientation sign over random causal vectors") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2, 2);
  for (const Spacetime& st : {Spacetime::minkowski(3, Slab{-1, 1, {{-1, 1}, {-1, 1}}}),
                              Spacetime::conformally_flat(3, Slab{-1, 1, {{-1, 1}, {-1, 1}}}, parse_expression("1+0.1*t"))}) {
    int causal = 0;
    for (int k = 0; k < 4000 && causal < 1000; ++k) {
      const Event p{u(rng) / 2, u(rng) / 2, u(rng) / 2};
      const Vec v = vec({u(rng), u(rng), u(rng)});
      const Tangent t{p, v};
      const CausalClass c = classify_vector(st, t);
      const Mat g = metric_at(st, p);
      const double gxv = metric_product(g, orientation_field(st, p), v);
      const double q = metric_product(g, v, v);
      // Exactly one class, consistent with the quadratic form.
      if (is_timelike(c)) CHECK(q < 0);
      if (c == CausalClass::Spacelike) CHECK(q > 0);
      if (!is_causal(c)) continue;
      ++causal;
      if (is_past_directed(c)) CHECK(gxv > 0);
      if (is_future_directed(c)) CHECK(gxv < 0);
    }
    CHECK(causal >= 1000);
  }
}

TEST_CASE("lorentz_norm examples") {
  const Spacetime mk = Spacetime::minkowski(2, slab_2d());
  const Event o{0, 0};
  CHECK(lorentz_norm(mk, {o, vec({1, 0})}) == doctest::Approx(1.0));
  CHECK(lorentz_norm(mk, {o, vec({2, 1})}) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
  CHECK(lorentz_norm(mk, {o, vec({1, 1})}) == 0.0);
  try {
    lorentz_norm(mk, {o, vec({0, 1})});
    FAIL("expected SpacelikeVector");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SpacelikeVector);
  }
}

TEST_CASE("christoffel symbols") {
  const Spacetime mk = Spacetime::minkowski(3, Slab{-1, 1, {{-1, 1}, {-1, 1}}});
  const Christoffel z = christoffel_at(mk, Event{0.2, 0.1, -0.3});
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(z(k, i, j) == 0.0);

  const Spacetime cf = conformal_2d();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  const double h = 1e-5;
  for (int n = 0; n < 100; ++n) {
    const Event p{u(rng), 2 * u(rng)};
    const Christoffel c = christoffel_at(cf, p);
    const double a = 1 + 0.1 * p.time();
    CHECK(c(0, 0, 0) == doctest::Approx(0.1 / a).epsilon(1e-12));
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          CHECK(c(k, i, j) == c(k, j, i));
          CHECK(std::abs(c(k, i, j) - reference_christoffel(cf, p, k, i, j, h)) < 10 * h);
        }
    const Christoffel fd = christoffel_finite_difference(cf, p, h);
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(std::abs(c(k, i, j) - fd(k, i, j)) < 10 * h);
  }
}

TEST_CASE("custom metric Christoffels match the metric derivatives") {
  const std::vector<std::vector<Expression>> g{
      {parse_expression("-(1 + 0.1*x^2)"), Expression::number(0)},
      {Expression::number(0), parse_expression("1 + 0.05*t")}};
  const Spacetime st = Spacetime::custom(2, slab_2d(-1, 1, -2, 2), g);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (int n = 0; n < 50; ++n) {
    const Event p{u(rng), 2 * u(rng)};
    const Christoffel c = christoffel_at(st, p);
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(std::abs(c(k, i, j) - reference_christoffel(st, p, k, i, j, 1e-5)) < 1e-4);
  }
}

TEST_CASE("signature and construction checks") {
  const Spacetime cf = conformal_2d();
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 10; ++j) CHECK(negative_eigenvalues(metric_at(cf, Event{-1 + 0.2 * i, -3 + 0.6 * j})) == 1);

  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidConfig;
  };
  CHECK(code_of([] { Spacetime::conformally_flat(2, slab_2d(), parse_expression("t")); }) ==
        ErrorCode::InvalidSpacetime);
  CHECK(code_of([] {
          Spacetime::custom(2, slab_2d(), {{Expression::number(1), Expression::number(0)},
                                           {Expression::number(0), Expression::number(1)}});
        }) == ErrorCode::InvalidSpacetime);
  CHECK(code_of([] {
          Spacetime::custom(2, slab_2d(), {{Expression::number(-1), Expression::number(0.2)},
                                           {Expression::number(0), Expression::number(1)}});
        }) == ErrorCode::InvalidSpacetime);
  CHECK(code_of([] { Spacetime::minkowski(5, Slab{-1, 1, {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}}}); }) ==
        ErrorCode::InvalidSpacetime);
  CHECK(code_of([] { Spacetime::minkowski(2, Slab{1, -1, {{-1, 1}}}); }) == ErrorCode::InvalidSpacetime);
}

TEST_CASE("light speed bounds") {
  CHECK(Spacetime::minkowski(2, slab_2d()).max_light_speed() == 1.0);
  const Spacetime st = Spacetime::custom(
      2, slab_2d(-1, 1, -2, 2), {{parse_expression("-(1 + 0.1*x^2)"), Expression::number(0)}, {Expression::number(0), Expression::number(1)}});
  // Coordinate light speed sqrt(1 + 0.1 x^2) peaks at sqrt(1.4) on the slab.
  CHECK(st.max_light_speed() >= std::sqrt(1.4));
  CHECK(st.min_light_speed() <= 1.0);
}
