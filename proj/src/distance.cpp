// SPDX-License-Identifier: Apache-2.0
#include "lorentz_eikonal/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lorentz_eikonal/causal.hpp"
#include "lorentz_eikonal/errors.hpp"
#include "lorentz_eikonal/io.hpp"

namespace lorentz_eikonal {

std::string_view to_string(DistanceBackend b) {
  switch (b) {
    case DistanceBackend::Analytic: return "analytic";
    case DistanceBackend::Shooting: return "shooting";
    case DistanceBackend::DagOracle: return "dag_oracle";
  }
  return "?";
}

double flat_distance(const Event& x, const Event& y, double tol_cone) {
  const double dt = y.time() - x.time();
  const double dx = (y.spatial() - x.spatial()).norm();
  if (!(dt > 0.0) || dx >= dt - tol_cone) return 0.0;
  return std::sqrt((dt - dx) * (dt + dx));
}

DistanceResult lorentz_distance_shooting(const Spacetime& st, const Event& x, const Event& y, const Tolerances& tol) {
  DistanceResult out;
  out.backend = DistanceBackend::Shooting;
  auto g = connect_maximal_geodesic(st, x, y, tol);
  if (!g) return out;
  out.value = lorentz_length(st, g->curve, tol);
  out.realizer = std::move(g);
  return out;
}

DistanceResult lorentz_distance(const Spacetime& st, const Event& x, const Event& y, const Tolerances& tol) {
  st.require_inside(x);
  st.require_inside(y);
  if (st.is_flat()) {
    DistanceResult out;
    out.backend = DistanceBackend::Analytic;
    out.value = flat_distance(x, y, tol.cone);
    return out;
  }
  return lorentz_distance_shooting(st, x, y, tol);
}

namespace {

// Three-point Gauss-Legendre rule on [0, 1].
constexpr double kGaussNodes[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
constexpr double kGaussWeights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

struct Arc {
  int dt_steps;
  std::vector<int> dj;
  Vec delta;  // chart displacement
  double flat_interval = 0.0;
  bool flat_causal = false;
};

}  // namespace

DagResult dag_longest_path(const Spacetime& st, const Event& x, const Event& y, const OracleGrid& grid) {
  const int dim = st.dim();
  const int m = dim - 1;
  const int nt = grid.time_nodes;
  if (nt < 2 || grid.space_nodes < 1 || grid.stencil < 1)
    throw Error(ErrorCode::InvalidConfig, "oracle grid needs >= 2 time nodes and a positive stencil");
  const int half = (grid.space_nodes - 1) / 2;
  const int width = 2 * half + 1;
  const double dtau = y.time() - x.time();
  DagResult out;
  if (!(dtau > 0.0)) {
    out.reachable = (x.coords - y.coords).norm() == 0.0;
    return out;
  }

  const Vec step = (y.coords - x.coords) / (nt - 1);
  const double half_width = (0.5 * st.max_light_speed() * dtau) * (1.0 + grid.margin);
  const double dx = half > 0 ? half_width / half : 0.0;

  std::size_t layer = 1;
  for (int a = 0; a < m; ++a) layer *= static_cast<std::size_t>(width);

  auto decode = [&](std::size_t idx, std::vector<int>& j) {
    for (int a = m - 1; a >= 0; --a) {
      j[static_cast<std::size_t>(a)] = static_cast<int>(idx % static_cast<std::size_t>(width)) - half;
      idx /= static_cast<std::size_t>(width);
    }
  };
  auto encode = [&](const std::vector<int>& j) {
    std::size_t idx = 0;
    for (int a = 0; a < m; ++a) idx = idx * static_cast<std::size_t>(width) + static_cast<std::size_t>(j[static_cast<std::size_t>(a)] + half);
    return idx;
  };
  auto position = [&](int i, const std::vector<int>& j) {
    Vec p = x.coords + i * step;
    for (int a = 0; a < m; ++a) p[a + 1] += j[static_cast<std::size_t>(a)] * dx;
    return p;
  };

  // Arc templates.
  const int k = grid.stencil;
  std::vector<Arc> arcs;
  {
    std::vector<int> dj(static_cast<std::size_t>(m), -k);
    for (int a = 1; a <= k; ++a) {
      std::fill(dj.begin(), dj.end(), -k);
      while (true) {
        Arc arc;
        arc.dt_steps = a;
        arc.dj = dj;
        arc.delta = a * step;
        for (int c = 0; c < m; ++c) arc.delta[c + 1] += dj[static_cast<std::size_t>(c)] * dx;
        const double t = arc.delta[0];
        const double r = arc.delta.tail(m).norm();
        arc.flat_causal = t > 0.0 && r <= t * (1.0 + 1e-12);
        arc.flat_interval = arc.flat_causal ? std::sqrt(std::max(0.0, (t - r) * (t + r))) : 0.0;
        if (!st.has_flat_cones() || arc.flat_causal) arcs.push_back(arc);
        int c = m - 1;
        while (c >= 0 && ++dj[static_cast<std::size_t>(c)] > k) dj[static_cast<std::size_t>(c--)] = -k;
        if (c < 0) break;
      }
    }
  }

  // Conformal factor averages along arcs depend only on (start row, arc length in rows).
  const bool conformal = st.kind() == SpacetimeKind::ConformallyFlat;
  std::vector<double> factor_mean;
  if (conformal) {
    factor_mean.assign(static_cast<std::size_t>(nt * (k + 1)), 0.0);
    for (int i = 0; i < nt; ++i)
      for (int a = 1; a <= k && i + a < nt; ++a) {
        double s = 0.0;
        for (int q = 0; q < 3; ++q) s += kGaussWeights[q] * st.conformal_factor(x.time() + (i + kGaussNodes[q] * a) * step[0]);
        factor_mean[static_cast<std::size_t>(i * (k + 1) + a)] = s;
      }
  }

  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> best(static_cast<std::size_t>(nt) * layer, neg_inf);
  const std::vector<int> origin(static_cast<std::size_t>(m), 0);
  best[encode(origin)] = 0.0;

  std::vector<int> j(static_cast<std::size_t>(m)), jn(static_cast<std::size_t>(m));
  for (int i = 0; i + 1 < nt; ++i) {
    for (std::size_t idx = 0; idx < layer; ++idx) {
      const double here = best[static_cast<std::size_t>(i) * layer + idx];
      if (here == neg_inf) continue;
      decode(idx, j);
      const Vec p = position(i, j);
      for (const Arc& arc : arcs) {
        const int in = i + arc.dt_steps;
        if (in >= nt) continue;
        bool inside = true;
        for (int c = 0; c < m; ++c) {
          jn[static_cast<std::size_t>(c)] = j[static_cast<std::size_t>(c)] + arc.dj[static_cast<std::size_t>(c)];
          if (std::abs(jn[static_cast<std::size_t>(c)]) > half) inside = false;
        }
        if (!inside) continue;
        const Vec q = p + arc.delta;
        if (!st.contains(Event(q))) continue;
        double w;
        if (st.is_flat()) {
          w = arc.flat_interval;
        } else if (conformal) {
          w = arc.flat_interval * factor_mean[static_cast<std::size_t>(i * (k + 1) + arc.dt_steps)];
        } else {
          w = 0.0;
          bool causal = true;
          for (int qd = 0; qd < 3 && causal; ++qd) {
            const Vec pt = p + kGaussNodes[qd] * arc.delta;
            const Mat g = st.metric(pt);
            const CausalClass cls = classify_with_metric(g, arc.delta, 1e-12);
            if (!is_future_directed(cls)) causal = false;
            w += kGaussWeights[qd] * std::sqrt(std::max(0.0, -metric_product(g, arc.delta, arc.delta)));
          }
          if (!causal) continue;
        }
        double& target = best[static_cast<std::size_t>(in) * layer + encode(jn)];
        target = std::max(target, here + w);
      }
    }
  }
  const double v = best[static_cast<std::size_t>(nt - 1) * layer + encode(origin)];
  out.reachable = v != neg_inf;
  out.value = out.reachable ? v : 0.0;
  return out;
}

double distance_oracle_dag(const Spacetime& st, const Event& x, const Event& y, const OracleGrid& grid,
                           const Tolerances& tol) {
  st.require_inside(x);
  st.require_inside(y);
  const DagResult r = dag_longest_path(st, x, y, grid);
  if (!r.reachable && relation(st, x, y, tol) == Relation::Chronological)
    throw Error(ErrorCode::GridTooCoarse, "target unreachable on the oracle lattice");
  return r.value;
}

void write_distance_csv(std::ostream& os, const Spacetime& st, const std::vector<DistanceRow>& rows) {
  std::vector<std::string> header;
  for (const auto& l : st.labels()) header.push_back("from_" + l);
  for (const auto& l : st.labels()) header.push_back("to_" + l);
  header.push_back("distance");
  header.push_back("backend");
  write_csv_header(os, header);
  for (const auto& r : rows) {
    for (int a = 0; a < r.from.dim(); ++a) os << format_double(r.from.coords[a]) << ',';
    for (int a = 0; a < r.to.dim(); ++a) os << format_double(r.to.coords[a]) << ',';
    os << format_double(r.result.value) << ',' << to_string(r.result.backend) << '\n';
  }
}

}  // namespace lorentz_eikonal
