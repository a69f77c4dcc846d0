// SPDX-License-Identifier: Apache-2.0
#include "lorentz_eikonal/spacetime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "lorentz_eikonal/errors.hpp"

namespace lorentz_eikonal {

std::string_view to_string(SpacetimeKind kind) {
  switch (kind) {
    case SpacetimeKind::Minkowski: return "minkowski";
    case SpacetimeKind::PaperMinkowski2D: return "paper_minkowski_2d";
    case SpacetimeKind::ConformallyFlat: return "conformally_flat";
    case SpacetimeKind::Custom: return "custom";
  }
  return "?";
}

std::string_view to_string(CausalClass c) {
  switch (c) {
    case CausalClass::TimelikeFuture: return "TimelikeFuture";
    case CausalClass::TimelikePast: return "TimelikePast";
    case CausalClass::LightlikeFuture: return "LightlikeFuture";
    case CausalClass::LightlikePast: return "LightlikePast";
    case CausalClass::Spacelike: return "Spacelike";
    case CausalClass::Zero: return "Zero";
  }
  return "?";
}

bool is_timelike(CausalClass c) { return c == CausalClass::TimelikeFuture || c == CausalClass::TimelikePast; }
bool is_causal(CausalClass c) {
  return is_timelike(c) || c == CausalClass::LightlikeFuture || c == CausalClass::LightlikePast;
}
bool is_future_directed(CausalClass c) {
  return c == CausalClass::TimelikeFuture || c == CausalClass::LightlikeFuture;
}
bool is_past_directed(CausalClass c) { return c == CausalClass::TimelikePast || c == CausalClass::LightlikePast; }

Event::Event(std::initializer_list<double> c) : coords(static_cast<Eigen::Index>(c.size())) {
  Eigen::Index i = 0;
  for (double v : c) coords[i++] = v;
}

Event Event::from_parts(double t, const Vec& spatial) {
  Vec c(spatial.size() + 1);
  c[0] = t;
  c.tail(spatial.size()) = spatial;
  return Event(c);
}

struct Spacetime::Impl {
  SpacetimeKind kind = SpacetimeKind::Minkowski;
  int dim = 2;
  std::vector<std::string> labels;
  Slab slab;

  std::optional<Expression> factor;
  BoundExpression factor_fn;
  BoundExpression factor_dt;

  std::vector<std::vector<Expression>> components;
  std::vector<BoundExpression> component_fn;                // dim*dim
  std::vector<std::optional<BoundExpression>> component_d;  // dim*dim*dim; empty -> finite differences
  bool depends_on_space = false;

  double c_max = 1.0;
  double c_min = 1.0;
};

namespace {

std::vector<std::string> default_labels(int dim) {
  static const char* names[] = {"t", "x", "y", "z"};
  return {names, names + dim};
}

void check_slab(int dim, const Slab& slab) {
  if (dim < 2 || dim > kMaxDim) throw Error(ErrorCode::InvalidSpacetime, "dimension must be in [2, 4]");
  if (!(slab.t_min < slab.t_max)) throw Error(ErrorCode::InvalidSpacetime, "empty temporal range");
  if (static_cast<int>(slab.space.size()) != dim - 1)
    throw Error(ErrorCode::InvalidSpacetime, "slab must give one spatial interval per spatial coordinate");
  for (const auto& iv : slab.space)
    if (!(iv[0] < iv[1])) throw Error(ErrorCode::InvalidSpacetime, "empty spatial interval");
}

Mat flat_metric(int dim) {
  Mat g = Mat::Identity(dim, dim);
  g(0, 0) = -1.0;
  return g;
}

// Calls f on every node of a tensor grid with n points per axis covering the slab.
template <class F>
void for_each_grid_point(const Slab& slab, int dim, int n, F&& f) {
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  Vec p(dim);
  while (true) {
    for (int a = 0; a < dim; ++a) {
      const double lo = a == 0 ? slab.t_min : slab.space[a - 1][0];
      const double hi = a == 0 ? slab.t_max : slab.space[a - 1][1];
      p[a] = lo + (hi - lo) * idx[a] / (n - 1);
    }
    f(p);
    int a = 0;
    while (a < dim && ++idx[a] == n) idx[a++] = 0;
    if (a == dim) break;
  }
}

// Unit spatial directions used to bound coordinate light speeds.
std::vector<Vec> probe_directions(int spatial_dim) {
  std::vector<Vec> dirs;
  if (spatial_dim == 1) {
    Vec v(1);
    v[0] = 1.0;
    dirs.push_back(v);
    v[0] = -1.0;
    dirs.push_back(v);
    return dirs;
  }
  // All nonzero {-1,0,1}^n directions, normalised.
  const int total = static_cast<int>(std::pow(3, spatial_dim));
  for (int code = 0; code < total; ++code) {
    Vec v(spatial_dim);
    int c = code;
    for (int a = 0; a < spatial_dim; ++a, c /= 3) v[a] = static_cast<double>(c % 3) - 1.0;
    if (v.norm() > 0) dirs.push_back(v.normalized());
  }
  return dirs;
}

}  // namespace

Spacetime Spacetime::minkowski(int dim, Slab slab) {
  check_slab(dim, slab);
  auto impl = std::make_shared<Impl>();
  impl->kind = SpacetimeKind::Minkowski;
  impl->dim = dim;
  impl->labels = default_labels(dim);
  impl->slab = std::move(slab);
  return Spacetime(std::move(impl));
}

Spacetime Spacetime::paper_minkowski_2d(Slab slab) {
  check_slab(2, slab);
  auto impl = std::make_shared<Impl>();
  impl->kind = SpacetimeKind::PaperMinkowski2D;
  impl->dim = 2;
  impl->labels = {"x", "y"};
  impl->slab = std::move(slab);
  return Spacetime(std::move(impl));
}

Spacetime Spacetime::conformally_flat(int dim, Slab slab, Expression factor) {
  check_slab(dim, slab);
  auto impl = std::make_shared<Impl>();
  impl->kind = SpacetimeKind::ConformallyFlat;
  impl->dim = dim;
  impl->labels = default_labels(dim);
  const std::string t_label[] = {"t"};
  impl->factor_fn = factor.bind(t_label);
  impl->factor_dt = factor.derivative("t").bind(t_label);
  impl->factor = std::move(factor);
  impl->slab = std::move(slab);
  constexpr int kSamples = 1001;
  for (int i = 0; i < kSamples; ++i) {
    const double t = impl->slab.t_min + (impl->slab.t_max - impl->slab.t_min) * i / (kSamples - 1);
    const double a = impl->factor_fn(std::span<const double>(&t, 1));
    if (!(a > 0.0) || !std::isfinite(a))
      throw Error(ErrorCode::InvalidSpacetime, "conformal factor must be positive on the slab (fails at t=" +
                                                   std::to_string(t) + ")");
  }
  return Spacetime(std::move(impl));
}

Spacetime Spacetime::custom(int dim, Slab slab, std::vector<std::vector<Expression>> components) {
  check_slab(dim, slab);
  if (static_cast<int>(components.size()) != dim)
    throw Error(ErrorCode::InvalidSpacetime, "metric must have dim rows");
  for (const auto& row : components)
    if (static_cast<int>(row.size()) != dim) throw Error(ErrorCode::InvalidSpacetime, "metric must be square");
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      if (!(components[i][j] == components[j][i]))
        throw Error(ErrorCode::InvalidSpacetime, "metric components must be symmetric");

  auto impl = std::make_shared<Impl>();
  impl->kind = SpacetimeKind::Custom;
  impl->dim = dim;
  impl->labels = default_labels(dim);
  impl->slab = std::move(slab);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      const Expression& e = components[i][j];
      impl->component_fn.push_back(e.bind(impl->labels));
      for (int k = 1; k < dim; ++k)
        if (e.depends_on(impl->labels[k])) impl->depends_on_space = true;
      for (int k = 0; k < dim; ++k) {
        try {
          impl->component_d.emplace_back(e.derivative(impl->labels[k]).bind(impl->labels));
        } catch (const Error&) {
          impl->component_d.emplace_back(std::nullopt);
        }
      }
    }
  impl->components = std::move(components);

  Spacetime st(impl);
  const int n = dim <= 3 ? 9 : 5;
  const auto dirs = probe_directions(dim - 1);
  double c_max = 0.0;
  double c_min = std::numeric_limits<double>::infinity();
  for_each_grid_point(impl->slab, dim, n, [&](const Vec& p) {
    const Mat g = st.metric(p);
    if (!g.allFinite() || negative_eigenvalues(g) != 1)
      throw Error(ErrorCode::InvalidSpacetime, "metric signature is not (-,+,...,+) on the slab");
    if (!(g(0, 0) < 0.0)) throw Error(ErrorCode::InvalidSpacetime, "d/dt must be timelike on the slab");
    const Mat ginv = g.inverse();
    if (!(ginv(0, 0) < 0.0)) throw Error(ErrorCode::InvalidSpacetime, "t must be a temporal function on the slab");
    for (const Vec& dir : dirs) {
      // g(dt + c n, dt + c n) = 0, positive root.
      const double b = g.row(0).tail(dim - 1).dot(dir);
      const double gnn = dir.dot(g.bottomRightCorner(dim - 1, dim - 1) * dir);
      const double c = (-b + std::sqrt(b * b - g(0, 0) * gnn)) / gnn;
      c_max = std::max(c_max, c);
      c_min = std::min(c_min, c);
    }
  });
  // The grid bound is widened slightly so that footprints never under-cover.
  impl->c_max = c_max * 1.05;
  impl->c_min = c_min / 1.05;
  return st;
}

int Spacetime::dim() const { return impl_->dim; }
SpacetimeKind Spacetime::kind() const { return impl_->kind; }
const std::vector<std::string>& Spacetime::labels() const { return impl_->labels; }
std::vector<std::string> Spacetime::spatial_labels() const { return {impl_->labels.begin() + 1, impl_->labels.end()}; }
const Slab& Spacetime::slab() const { return impl_->slab; }

bool Spacetime::is_flat() const {
  return impl_->kind == SpacetimeKind::Minkowski || impl_->kind == SpacetimeKind::PaperMinkowski2D;
}
bool Spacetime::has_flat_cones() const { return is_flat() || impl_->kind == SpacetimeKind::ConformallyFlat; }
bool Spacetime::metric_depends_on_space() const { return impl_->depends_on_space; }

double Spacetime::max_light_speed() const { return impl_->c_max; }
double Spacetime::min_light_speed() const { return impl_->c_min; }

const Expression* Spacetime::factor_expression() const { return impl_->factor ? &*impl_->factor : nullptr; }
const std::vector<std::vector<Expression>>* Spacetime::component_expressions() const {
  return impl_->kind == SpacetimeKind::Custom ? &impl_->components : nullptr;
}

bool Spacetime::contains(const Event& p, double slack) const {
  if (p.dim() != impl_->dim) return false;
  if (!p.coords.allFinite()) return false;
  const Slab& s = impl_->slab;
  if (p.coords[0] < s.t_min - slack || p.coords[0] > s.t_max + slack) return false;
  for (int a = 1; a < impl_->dim; ++a)
    if (p.coords[a] < s.space[a - 1][0] - slack || p.coords[a] > s.space[a - 1][1] + slack) return false;
  return true;
}

void Spacetime::require_inside(const Event& p) const {
  if (p.dim() != impl_->dim)
    throw Error(ErrorCode::PointOutsideSlab, "event has dimension " + std::to_string(p.dim()) + ", expected " +
                                                 std::to_string(impl_->dim));
  if (!contains(p)) {
    std::string s = "(";
    for (int a = 0; a < p.dim(); ++a) s += (a ? ", " : "") + std::to_string(p.coords[a]);
    throw Error(ErrorCode::PointOutsideSlab, "event " + s + ") lies outside the slab");
  }
}

double Spacetime::conformal_factor(double t) const {
  if (impl_->kind != SpacetimeKind::ConformallyFlat) return 1.0;
  return impl_->factor_fn(std::span<const double>(&t, 1));
}

double Spacetime::conformal_factor_derivative(double t) const {
  if (impl_->kind != SpacetimeKind::ConformallyFlat) return 0.0;
  return impl_->factor_dt(std::span<const double>(&t, 1));
}

Mat Spacetime::metric(const Vec& p) const {
  const int n = impl_->dim;
  switch (impl_->kind) {
    case SpacetimeKind::Minkowski:
    case SpacetimeKind::PaperMinkowski2D: return flat_metric(n);
    case SpacetimeKind::ConformallyFlat: {
      const double a = conformal_factor(p[0]);
      return (a * a) * flat_metric(n);
    }
    case SpacetimeKind::Custom: {
      Mat g(n, n);
      const std::span<const double> x(p.data(), static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = impl_->component_fn[static_cast<std::size_t>(i * n + j)](x);
      return g;
    }
  }
  return flat_metric(n);
}

Christoffel Spacetime::christoffel(const Vec& p) const {
  const int n = impl_->dim;
  Christoffel out;
  out.dim = n;
  for (int k = 0; k < n; ++k) out.upper[k] = Mat::Zero(n, n);
  if (is_flat()) return out;

  if (impl_->kind == SpacetimeKind::ConformallyFlat) {
    const double w = conformal_factor_derivative(p[0]) / conformal_factor(p[0]);
    // Gamma^k_ij = d^k_i w_j + d^k_j w_i - eta_ij eta^kl w_l with w = d(ln a) = (w, 0, ..., 0).
    out.upper[0](0, 0) = w;
    for (int i = 1; i < n; ++i) {
      out.upper[0](i, i) = w;
      out.upper[i](0, i) = w;
      out.upper[i](i, 0) = w;
    }
    return out;
  }

  // Custom: Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij).
  std::array<Mat, kMaxDim> dg;  // dg[l](i, j) = d_l g_ij
  const std::span<const double> x(p.data(), static_cast<std::size_t>(n));
  const double h = default_tolerances().fd_metric;
  for (int l = 0; l < n; ++l) {
    dg[l] = Mat(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const auto& d = impl_->component_d[static_cast<std::size_t>((i * n + j) * n + l)];
        if (d) {
          dg[l](i, j) = (*d)(x);
        } else {
          Vec lo = p, hi = p;
          lo[l] -= h;
          hi[l] += h;
          const auto& fn = impl_->component_fn[static_cast<std::size_t>(i * n + j)];
          dg[l](i, j) = (fn(std::span<const double>(hi.data(), x.size())) -
                         fn(std::span<const double>(lo.data(), x.size()))) /
                        (2 * h);
        }
      }
  }
  const Mat ginv = metric(p).inverse();
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        out.upper[k](i, j) = 0.5 * s;
      }
  return out;
}

Mat metric_at(const Spacetime& st, const Event& p) {
  st.require_inside(p);
  return st.metric(p.coords);
}

Mat inverse_metric_at(const Spacetime& st, const Event& p) { return metric_at(st, p).inverse(); }

double metric_product(const Mat& g, const Vec& a, const Vec& b) { return a.dot(g * b); }

int negative_eigenvalues(const Mat& g) {
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  int count = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] < 0) ++count;
  return count;
}

Vec orientation_field(const Spacetime& st, const Event& p) {
  Vec x = Vec::Zero(st.dim());
  x[0] = 1.0;
  (void)p;
  return x;
}

CausalClass classify_with_metric(const Mat& g, const Vec& v, double tol_class) {
  const double e2 = v.squaredNorm();
  if (e2 == 0.0) return CausalClass::Zero;
  const double q = metric_product(g, v, v);
  // g(X, V) with X = d/dt.
  const double gx = (g * v)[0];
  if (q < -tol_class * e2) return gx < 0 ? CausalClass::TimelikeFuture : CausalClass::TimelikePast;
  if (std::abs(q) <= tol_class * e2) return gx < 0 ? CausalClass::LightlikeFuture : CausalClass::LightlikePast;
  return CausalClass::Spacelike;
}

CausalClass classify_vector(const Spacetime& st, const Tangent& v, const Tolerances& tol) {
  return classify_with_metric(metric_at(st, v.base), v.components, tol.classify);
}

double lorentz_norm(const Spacetime& st, const Tangent& v, const Tolerances& tol) {
  const Mat g = metric_at(st, v.base);
  const double q = metric_product(g, v.components, v.components);
  if (q > tol.classify * v.components.squaredNorm())
    throw Error(ErrorCode::SpacelikeVector, "Lorentzian norm is defined for non-spacelike vectors only");
  return std::sqrt(std::max(0.0, -q));
}

Christoffel christoffel_at(const Spacetime& st, const Event& p) {
  st.require_inside(p);
  return st.christoffel(p.coords);
}

Christoffel christoffel_finite_difference(const Spacetime& st, const Event& p, double h) {
  st.require_inside(p);
  const int n = st.dim();
  std::array<Mat, kMaxDim> dg;
  for (int l = 0; l < n; ++l) {
    Vec lo = p.coords, hi = p.coords;
    lo[l] -= h;
    hi[l] += h;
    dg[l] = (st.metric(hi) - st.metric(lo)) / (2 * h);
  }
  const Mat ginv = st.metric(p.coords).inverse();
  Christoffel out;
  out.dim = n;
  for (int k = 0; k < n; ++k) {
    out.upper[k] = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        out.upper[k](i, j) = 0.5 * s;
      }
  }
  return out;
}

}  // namespace lorentz_eikonal
