// SPDX-License-Identifier: Apache-2.0
#include "lorentz_eikonal/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "lorentz_eikonal/expression.hpp"
#include "lorentz_eikonal/io.hpp"

namespace lorentz_eikonal {

using json = nlohmann::json;

std::string_view to_string(Task t) {
  switch (t) {
    case Task::Solve: return "solve";
    case Task::Verify: return "verify";
    case Task::Ray: return "ray";
    case Task::Stability: return "stability";
    case Task::Counterexample: return "counterexample";
    case Task::Distance: return "distance";
  }
  return "?";
}

namespace {

// ---------------------------------------------------------------------------
// JSON field access with strict validation

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + " must be finite");
  return v;
}

int integer(const json& j, const std::string& where, int lo, int hi) {
  if (!j.is_number_integer()) throw ConfigError(where + " must be an integer");
  const long long v = j.get<long long>();
  if (v < lo || v > hi) throw ConfigError(where + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + " must be a string");
  return j.get<std::string>();
}

bool boolean(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ConfigError(where + " must be a boolean");
  return j.get<bool>();
}

std::array<double, 2> interval(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + " must be a pair [lo, hi]");
  const std::array<double, 2> r{number(j[0], where + "[0]"), number(j[1], where + "[1]")};
  if (!(r[0] < r[1])) throw ConfigError(where + " must satisfy lo < hi");
  return r;
}

std::vector<std::array<double, 2>> intervals(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be a list of intervals");
  std::vector<std::array<double, 2>> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(interval(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Vec vector_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || j.size() > static_cast<std::size_t>(kMaxDim))
    throw ConfigError(where + " must be a non-empty list of at most " + std::to_string(kMaxDim) + " numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], where);
  return v;
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be a list of numbers");
  std::vector<double> out;
  for (const auto& e : j) out.push_back(number(e, where));
  return out;
}

Expression expression_of(const json& j, const std::string& where) {
  const std::string s = text(j, where);
  try {
    return parse_expression(s);
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Sections

Spacetime parse_spacetime(const json& j) {
  check_keys(j, {"kind", "dim", "slab", "params"}, "spacetime");
  if (!j.contains("kind")) throw ConfigError("spacetime.kind is required");
  const std::string kind = text(j["kind"], "spacetime.kind");
  const int dim = j.contains("dim") ? integer(j["dim"], "spacetime.dim", 2, kMaxDim) : 2;
  if (!j.contains("slab")) throw ConfigError("spacetime.slab is required");
  const json& js = j["slab"];
  check_keys(js, {"t", "space"}, "spacetime.slab");
  if (!js.contains("t") || !js.contains("space")) throw ConfigError("spacetime.slab needs t and space");
  Slab slab;
  const auto t = interval(js["t"], "spacetime.slab.t");
  slab.t_min = t[0];
  slab.t_max = t[1];
  slab.space = intervals(js["space"], "spacetime.slab.space");
  if (static_cast<int>(slab.space.size()) != dim - 1)
    throw ConfigError("spacetime.slab.space needs one interval per spatial coordinate");
  const json params = j.contains("params") ? j["params"] : json::object();
  check_keys(params, {"conformal_factor", "metric"}, "spacetime.params");
  const bool has_factor = params.contains("conformal_factor");
  const bool has_metric = params.contains("metric");
  try {
    if (kind == "minkowski") {
      if (has_factor || has_metric) throw ConfigError("minkowski takes no metric parameters");
      return Spacetime::minkowski(dim, slab);
    }
    if (kind == "paper_minkowski_2d") {
      if (dim != 2) throw ConfigError("paper_minkowski_2d is two-dimensional");
      if (has_factor || has_metric) throw ConfigError("paper_minkowski_2d takes no metric parameters");
      return Spacetime::paper_minkowski_2d(slab);
    }
    if (kind == "conformally_flat") {
      if (!has_factor || has_metric) throw ConfigError("conformally_flat needs conformal_factor and no metric");
      return Spacetime::conformally_flat(dim, slab, expression_of(params["conformal_factor"], "spacetime.params.conformal_factor"));
    }
    if (kind == "custom") {
      if (!has_metric || has_factor) throw ConfigError("custom needs metric and no conformal_factor");
      const json& jm = params["metric"];
      if (!jm.is_array() || static_cast<int>(jm.size()) != dim)
        throw ConfigError("spacetime.params.metric must be a dim x dim array of expressions");
      std::vector<std::vector<Expression>> comps;
      for (std::size_t r = 0; r < jm.size(); ++r) {
        if (!jm[r].is_array() || static_cast<int>(jm[r].size()) != dim)
          throw ConfigError("spacetime.params.metric must be a dim x dim array of expressions");
        std::vector<Expression> row;
        for (std::size_t c = 0; c < jm[r].size(); ++c) {
          const json& e = jm[r][c];
          row.push_back(e.is_number() ? Expression::number(e.get<double>())
                                      : expression_of(e, "spacetime.params.metric[" + std::to_string(r) + "][" + std::to_string(c) + "]"));
        }
        comps.push_back(std::move(row));
      }
      return Spacetime::custom(dim, slab, std::move(comps));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("spacetime: ") + e.what());
  }
  throw ConfigError("unknown spacetime.kind '" + kind + "'");
}

InitialDatum parse_datum(const json& j, const Spacetime& st, std::optional<std::pair<Vec, double>>& affine) {
  if (!j.is_object() || !j.contains("type")) throw ConfigError("surface.datum needs a type");
  const std::string type = text(j["type"], "surface.datum.type");
  const int m = st.spatial_dim();
  try {
    if (type == "constant") {
      check_keys(j, {"type", "value"}, "surface.datum");
      const double v = j.contains("value") ? number(j["value"], "surface.datum.value") : 0.0;
      affine = std::make_pair(Vec(Vec::Zero(m)), v);
      return InitialDatum::constant(v);
    }
    if (type == "linear") {
      check_keys(j, {"type", "slope", "offset"}, "surface.datum");
      if (!j.contains("slope")) throw ConfigError("linear datum needs slope");
      const Vec slope = vector_of(j["slope"], "surface.datum.slope");
      if (slope.size() != m) throw ConfigError("surface.datum.slope needs one entry per spatial coordinate");
      const double off = j.contains("offset") ? number(j["offset"], "surface.datum.offset") : 0.0;
      affine = std::make_pair(slope, off);
      return InitialDatum::linear(slope, off);
    }
    if (type == "piecewise_linear") {
      check_keys(j, {"type", "knots"}, "surface.datum");
      if (m != 1) throw ConfigError("piecewise_linear data need one spatial coordinate");
      if (!j.contains("knots") || !j["knots"].is_array()) throw ConfigError("piecewise_linear datum needs knots");
      std::vector<std::pair<double, double>> knots;
      for (const auto& k : j["knots"]) {
        if (!k.is_array() || k.size() != 2) throw ConfigError("each knot is [abscissa, value]");
        knots.emplace_back(number(k[0], "knot"), number(k[1], "knot"));
      }
      return InitialDatum::piecewise_linear(std::move(knots));
    }
    if (type == "sinusoidal") {
      check_keys(j, {"type", "amplitude", "wavenumber", "phase"}, "surface.datum");
      if (!j.contains("amplitude") || !j.contains("wavenumber"))
        throw ConfigError("sinusoidal datum needs amplitude and wavenumber");
      const Vec k = vector_of(j["wavenumber"], "surface.datum.wavenumber");
      if (k.size() != m) throw ConfigError("surface.datum.wavenumber needs one entry per spatial coordinate");
      const double phase = j.contains("phase") ? number(j["phase"], "surface.datum.phase") : 0.0;
      return InitialDatum::sinusoidal(number(j["amplitude"], "surface.datum.amplitude"), k, phase);
    }
    if (type == "expression") {
      check_keys(j, {"type", "expr"}, "surface.datum");
      if (!j.contains("expr")) throw ConfigError("expression datum needs expr");
      return InitialDatum::expression(expression_of(j["expr"], "surface.datum.expr"), st.spatial_labels());
    }
    if (type == "tabulated") {
      check_keys(j, {"type", "axes", "values"}, "surface.datum");
      if (!j.contains("axes") || !j["axes"].is_array() || !j.contains("values"))
        throw ConfigError("tabulated datum needs axes and values");
      std::vector<std::vector<double>> axes;
      for (const auto& a : j["axes"]) axes.push_back(numbers(a, "surface.datum.axes"));
      if (static_cast<int>(axes.size()) != m) throw ConfigError("tabulated datum needs one axis per spatial coordinate");
      return InitialDatum::tabulated(std::move(axes), numbers(j["values"], "surface.datum.values"));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("surface.datum: ") + e.what());
  }
  throw ConfigError("unknown datum type '" + type + "'");
}

struct TolField {
  const char* name;
  double Tolerances::*member;
};

constexpr TolField kTolFields[] = {
    {"classify", &Tolerances::classify}, {"cone", &Tolerances::cone},       {"hit", &Tolerances::hit},
    {"ode", &Tolerances::ode},           {"bvp", &Tolerances::bvp},         {"dist", &Tolerances::dist},
    {"solve", &Tolerances::solve},       {"cluster", &Tolerances::cluster}, {"cal", &Tolerances::cal},
    {"visc", &Tolerances::visc},         {"kink", &Tolerances::kink},       {"fd_step", &Tolerances::fd_step},
    {"fd_metric", &Tolerances::fd_metric},
};

Tolerances parse_tolerances(const json& j) {
  Tolerances tol;
  if (!j.is_object()) throw ConfigError("tolerances must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto f = std::find_if(std::begin(kTolFields), std::end(kTolFields),
                                [&](const TolField& t) { return it.key() == t.name; });
    if (f == std::end(kTolFields)) throw ConfigError("unknown key '" + it.key() + "' in tolerances");
    const double v = number(it.value(), "tolerances." + it.key());
    if (!(v > 0.0 && v < 1.0)) throw ConfigError("tolerances." + it.key() + " must lie in the open interval (0, 1)");
    tol.*(f->member) = v;
  }
  return tol;
}

GridSpec parse_grid(const json& j, const Spacetime& st, const CauchySurface& surface) {
  check_keys(j, {"t", "t_nodes", "t_end_open", "space", "space_nodes"}, "grid");
  GridSpec g;
  if (!j.contains("t") || !j.contains("space") || !j.contains("t_nodes") || !j.contains("space_nodes"))
    throw ConfigError("grid needs t, t_nodes, space and space_nodes");
  const auto t = interval(j["t"], "grid.t");
  g.t_begin = t[0];
  g.t_end = t[1];
  g.t_nodes = integer(j["t_nodes"], "grid.t_nodes", 1, 100000);
  g.t_end_open = j.contains("t_end_open") ? boolean(j["t_end_open"], "grid.t_end_open") : true;
  g.space = intervals(j["space"], "grid.space");
  if (!j["space_nodes"].is_array()) throw ConfigError("grid.space_nodes must be a list");
  for (const auto& n : j["space_nodes"]) g.space_nodes.push_back(integer(n, "grid.space_nodes", 1, 100000));
  if (static_cast<int>(g.space.size()) != st.spatial_dim() || g.space_nodes.size() != g.space.size())
    throw ConfigError("grid needs one spatial interval and node count per spatial coordinate");
  const Slab& slab = st.slab();
  if (g.t_begin < slab.t_min || g.t_end > slab.t_max) throw ConfigError("grid.t leaves the slab");
  if (g.t_end > surface.level + 1e-12)
    throw ConfigError("grid must lie at or before the surface level");
  for (std::size_t a = 0; a < g.space.size(); ++a)
    if (g.space[a][0] < slab.space[a][0] || g.space[a][1] > slab.space[a][1])
      throw ConfigError("grid.space leaves the slab");
  return g;
}

void parse_task_params(const json& j, RunConfig& cfg) {
  check_keys(j,
             {"point", "rule", "terms", "c", "from", "to", "oracle", "probes", "segments", "collar", "segment_length",
              "levels", "achronal_points", "achronal_pairs", "waypoint_fraction"},
             "task_params");
  TaskParams& p = cfg.params;
  const int dim = cfg.spacetime ? cfg.spacetime->dim() : 2;
  auto event = [&](const char* key) {
    const Vec v = vector_of(j[key], std::string("task_params.") + key);
    if (v.size() != dim) throw ConfigError(std::string("task_params.") + key + " must have one entry per coordinate");
    return Event(v);
  };
  if (j.contains("point")) p.point = event("point");
  if (j.contains("from")) p.from = event("from");
  if (j.contains("to")) p.to = event("to");
  if (j.contains("rule")) {
    const std::string r = text(j["rule"], "task_params.rule");
    if (r == "sinusoidal") p.rule = StabilityRule::Sinusoidal;
    else if (r == "constant_shift") p.rule = StabilityRule::ConstantShift;
    else if (r == "decreasing") p.rule = StabilityRule::Decreasing;
    else throw ConfigError("unknown stability rule '" + r + "'");
  }
  if (j.contains("terms")) {
    if (!j["terms"].is_array() || j["terms"].empty()) throw ConfigError("task_params.terms must be a non-empty list");
    p.terms.clear();
    for (const auto& n : j["terms"]) p.terms.push_back(integer(n, "task_params.terms", 1, 1 << 20));
  }
  if (j.contains("c")) p.c = number(j["c"], "task_params.c");
  if (j.contains("oracle")) p.oracle = boolean(j["oracle"], "task_params.oracle");
  if (j.contains("probes")) p.probes = integer(j["probes"], "task_params.probes", 1, 1000000);
  if (j.contains("segments")) p.segments = integer(j["segments"], "task_params.segments", 0, 1000000);
  if (j.contains("collar")) {
    p.collar = number(j["collar"], "task_params.collar");
    if (!(p.collar > 0.0 && p.collar < 1.0)) throw ConfigError("task_params.collar must lie in (0, 1)");
  }
  if (j.contains("segment_length")) {
    p.segment_length = number(j["segment_length"], "task_params.segment_length");
    if (!(p.segment_length > 0.0)) throw ConfigError("task_params.segment_length must be positive");
  }
  if (j.contains("levels")) p.levels = numbers(j["levels"], "task_params.levels");
  if (j.contains("achronal_points")) p.achronal_points = integer(j["achronal_points"], "task_params.achronal_points", 2, 100000);
  if (j.contains("achronal_pairs")) p.achronal_pairs = integer(j["achronal_pairs"], "task_params.achronal_pairs", 0, 1000000);
  if (j.contains("waypoint_fraction")) {
    p.waypoint_fraction = number(j["waypoint_fraction"], "task_params.waypoint_fraction");
    if (!(p.waypoint_fraction > 0.0 && p.waypoint_fraction < 1.0))
      throw ConfigError("task_params.waypoint_fraction must lie in (0, 1)");
  }
}

}  // namespace

std::optional<Task> task_from_string(std::string_view name) {
  for (Task t : {Task::Solve, Task::Verify, Task::Ray, Task::Stability, Task::Counterexample, Task::Distance})
    if (to_string(t) == name) return t;
  return std::nullopt;
}

RunConfig parse_config(std::string_view json_text, std::optional<Task> task) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  check_keys(j, {"task", "seed", "threads", "spacetime", "surface", "grid", "tolerances", "solver", "oracle", "output",
                 "task_params"},
             "configuration");
  RunConfig cfg;
  cfg.digest = fnv1a_hex(j.dump());
  if (j.contains("task")) {
    const std::string name = text(j["task"], "task");
    const auto t = task_from_string(name);
    if (!t) throw ConfigError("unknown task '" + name + "'");
    cfg.task = *t;
  } else if (!task) {
    throw ConfigError("task is required");
  }
  if (task) cfg.task = *task;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      throw ConfigError("seed must be a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("threads")) cfg.threads = integer(j["threads"], "threads", 1, 1024);
  if (j.contains("tolerances")) cfg.tol = parse_tolerances(j["tolerances"]);

  if (j.contains("solver")) {
    const json& s = j["solver"];
    check_keys(s, {"scan_points", "degenerate_radius", "max_refine_seeds", "minimizer_separation"}, "solver");
    if (s.contains("scan_points")) cfg.solve.scan_points = integer(s["scan_points"], "solver.scan_points", 3, 100000);
    if (s.contains("degenerate_radius")) {
      cfg.solve.degenerate_radius = number(s["degenerate_radius"], "solver.degenerate_radius");
      if (!(cfg.solve.degenerate_radius >= 0.0)) throw ConfigError("solver.degenerate_radius must be non-negative");
    }
    if (s.contains("max_refine_seeds"))
      cfg.solve.max_refine_seeds = integer(s["max_refine_seeds"], "solver.max_refine_seeds", 1, 1000);
    if (s.contains("minimizer_separation")) {
      cfg.solve.minimizer_separation = number(s["minimizer_separation"], "solver.minimizer_separation");
      if (!(cfg.solve.minimizer_separation > 0.0)) throw ConfigError("solver.minimizer_separation must be positive");
    }
  }
  cfg.solve.tol = cfg.tol;
  cfg.verify.tol = cfg.tol;
  cfg.verify.seed = cfg.seed;

  if (j.contains("oracle")) {
    const json& o = j["oracle"];
    check_keys(o, {"time_nodes", "space_nodes", "stencil", "margin"}, "oracle");
    if (o.contains("time_nodes")) cfg.oracle.time_nodes = integer(o["time_nodes"], "oracle.time_nodes", 2, 100000);
    if (o.contains("space_nodes")) cfg.oracle.space_nodes = integer(o["space_nodes"], "oracle.space_nodes", 1, 100000);
    if (o.contains("stencil")) cfg.oracle.stencil = integer(o["stencil"], "oracle.stencil", 1, 1000);
    if (o.contains("margin")) cfg.oracle.margin = number(o["margin"], "oracle.margin");
  }
  if (j.contains("output")) {
    check_keys(j["output"], {"dir"}, "output");
    if (j["output"].contains("dir")) cfg.output_dir = text(j["output"]["dir"], "output.dir");
  }

  if (j.contains("spacetime")) cfg.spacetime = parse_spacetime(j["spacetime"]);
  if (j.contains("surface")) {
    if (!cfg.spacetime) throw ConfigError("surface requires a spacetime");
    const json& s = j["surface"];
    check_keys(s, {"level", "domain", "datum"}, "surface");
    if (!s.contains("level")) throw ConfigError("surface.level is required");
    const double level = number(s["level"], "surface.level");
    SpatialBox domain;
    if (s.contains("domain")) domain = intervals(s["domain"], "surface.domain");
    const InitialDatum datum = s.contains("datum") ? parse_datum(s["datum"], *cfg.spacetime, cfg.affine_datum)
                                                   : InitialDatum::constant(0.0);
    if (!s.contains("datum")) cfg.affine_datum = std::make_pair(Vec(Vec::Zero(cfg.spacetime->spatial_dim())), 0.0);
    try {
      cfg.surface = make_cauchy_surface(*cfg.spacetime, level, datum, domain);
    } catch (const Error& e) {
      throw ConfigError(std::string("surface: ") + e.what());
    }
  }
  if (j.contains("grid")) {
    if (!cfg.surface) throw ConfigError("grid requires a surface");
    cfg.grid = parse_grid(j["grid"], *cfg.spacetime, *cfg.surface);
  }
  if (j.contains("task_params")) parse_task_params(j["task_params"], cfg);

  // Task prerequisites, checked before any computation.
  switch (cfg.task) {
    case Task::Solve:
    case Task::Verify:
    case Task::Stability:
      if (!cfg.grid) throw ConfigError(std::string(to_string(cfg.task)) + " needs spacetime, surface and grid");
      break;
    case Task::Ray:
      if (!cfg.surface) throw ConfigError("ray needs spacetime and surface");
      break;
    case Task::Distance:
      if (!cfg.spacetime) throw ConfigError("distance needs a spacetime");
      break;
    case Task::Counterexample:
      if (cfg.spacetime && cfg.spacetime->dim() != 2) throw ConfigError("counterexample needs a two-dimensional spacetime");
      break;
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file, std::optional<Task> task) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read configuration file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), task);
}

RunConfig counterexample_config(double c) {
  json j = {
      {"task", "counterexample"},
      {"spacetime", {{"kind", "paper_minkowski_2d"}, {"slab", {{"t", {-2.0, 0.0}}, {"space", {{-3.0, 3.0}}}}}}},
      {"surface", {{"level", 0.0}, {"datum", {{"type", "constant"}, {"value", 0.0}}}}},
      {"task_params", {{"c", c}}},
  };
  return parse_config(j.dump());
}

void apply_environment(RunConfig& cfg) {
  if (const char* out = std::getenv("LORENTZ_EIKONAL_OUT"); out && *out) cfg.output_dir = out;
  if (const char* th = std::getenv("LORENTZ_EIKONAL_THREADS"); th && *th) {
    char* end = nullptr;
    const long v = std::strtol(th, &end, 10);
    if (*end != '\0' || v < 1 || v > 1024) throw ConfigError("LORENTZ_EIKONAL_THREADS must be an integer in [1, 1024]");
    cfg.threads = static_cast<int>(v);
  }
}

Event parse_point(std::string_view s, int dim) {
  std::vector<double> v;
  std::string item;
  std::stringstream ss{std::string(s)};
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double x = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0' || !std::isfinite(x)) throw ConfigError("malformed coordinate '" + item + "'");
    v.push_back(x);
  }
  if (static_cast<int>(v.size()) != dim)
    throw ConfigError("point needs " + std::to_string(dim) + " comma-separated coordinates");
  Vec c(dim);
  for (int a = 0; a < dim; ++a) c[a] = v[static_cast<std::size_t>(a)];
  return Event(c);
}

// ---------------------------------------------------------------------------
// Task execution

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

json event_json(const Event& p) {
  json a = json::array();
  for (int i = 0; i < p.dim(); ++i) a.push_back(p.coords[i]);
  return a;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

struct Context {
  Context(const RunConfig& c, std::filesystem::path d) : cfg(c), dir(std::move(d)) {}

  const RunConfig& cfg;
  std::filesystem::path dir;
  json results = json::object();
  json violations = json::array();
  json timings = json::object();
  std::vector<std::filesystem::path> files;
  std::string summary;

  std::ofstream open(const std::string& name) {
    const auto path = dir / name;
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::InvalidConfig, "cannot write " + path.string());
    files.push_back(path);
    return os;
  }
};

std::vector<Event> strided_nodes(const GridSpec& grid, int max_count) {
  const std::size_t n = grid.size();
  const std::size_t stride = std::max<std::size_t>(1, (n + static_cast<std::size_t>(max_count) - 1) / static_cast<std::size_t>(max_count));
  std::vector<Event> out;
  for (std::size_t i = 0; i < n; i += stride) out.push_back(grid.node(i));
  return out;
}

std::string grid_shape(const GridSpec& g) {
  std::string s = std::to_string(g.t_nodes);
  for (int n : g.space_nodes) s += "x" + std::to_string(n);
  return s;
}

double closed_form(const std::pair<Vec, double>& affine, double level, const Event& p) {
  const Vec& a = affine.first;
  return a.dot(p.spatial()) + affine.second - (level - p.time()) * std::sqrt(1.0 + a.squaredNorm());
}

json residual_json(const ResidualStats& r) {
  return {{"max", r.max}, {"mean", r.mean}, {"differentiable", r.differentiable}, {"within_tolerance", r.within},
          {"probes", r.total}};
}

json viscosity_violation_json(const ViscosityViolation& v) {
  return {{"kind", v.subsolution ? "subsolution" : "supersolution"}, {"point", event_json(v.point)},
          {"witness", vec_json(v.witness)}, {"g_VV", v.norm}};
}

json orientation_json(const OrientationVerdict& o) {
  json locs = json::array();
  for (const auto& p : o.locations) locs.push_back(event_json(p));
  return {{"verdict", std::string(to_string(o.kind))}, {"locations", locs}, {"past_clusters", o.past_clusters},
          {"future_clusters", o.future_clusters}, {"other_clusters", o.other_clusters}};
}

void run_solve(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Spacetime& st = *cfg.spacetime;
  const auto t0 = Clock::now();
  const SolutionField field = solve_grid(st, *cfg.surface, *cfg.grid, cfg.solve, cfg.threads);
  ctx.timings["solve_grid_s"] = seconds_since(t0);
  {
    auto os = ctx.open("solution.csv");
    write_solution_csv(os, st, field);
  }
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    if (!field.diagnostics[i].error.empty()) {
      ctx.violations.push_back({{"kind", "node_error"}, {"point", event_json(cfg.grid->node(i))},
                                {"message", field.diagnostics[i].error}});
      continue;
    }
    lo = std::min(lo, field.values[i]);
    hi = std::max(hi, field.values[i]);
  }
  ctx.results["grid"] = grid_shape(*cfg.grid);
  ctx.results["nodes"] = field.values.size();
  ctx.results["node_errors"] = field.error_count();
  ctx.results["min_u"] = lo;
  ctx.results["max_u"] = hi;
  if (st.kind() == SpacetimeKind::Minkowski && cfg.affine_datum) {
    double err = 0.0;
    for (std::size_t i = 0; i < field.values.size(); ++i)
      if (field.diagnostics[i].error.empty())
        err = std::max(err, std::abs(field.values[i] - closed_form(*cfg.affine_datum, cfg.surface->level, cfg.grid->node(i))));
    ctx.results["closed_form_max_error"] = err;
  }
  const auto t1 = Clock::now();
  const ResidualStats r =
      residual_stats(st, variational_field(st, *cfg.surface, cfg.solve), strided_nodes(*cfg.grid, 200), cfg.tol);
  ctx.timings["residual_s"] = seconds_since(t1);
  ctx.results["residual"] = residual_json(r);
  ctx.summary = "grid=" + grid_shape(*cfg.grid) + " max_residual=" + format_double(r.max);
  if (ctx.results.contains("closed_form_max_error"))
    ctx.summary += " closed_form_max_error=" + format_double(ctx.results["closed_form_max_error"].get<double>());
}

void run_verify(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Spacetime& st = *cfg.spacetime;
  const CauchySurface& surface = *cfg.surface;
  const GridSpec& grid = *cfg.grid;
  const TaskParams& p = cfg.params;
  const ScalarField u = variational_field(st, surface, cfg.solve);
  const std::vector<Event> probes = strided_nodes(grid, p.probes);

  auto t0 = Clock::now();
  const ResidualStats res = residual_stats(st, u, probes, cfg.tol);
  ctx.results["residual"] = residual_json(res);
  ctx.timings["residual_s"] = seconds_since(t0);

  t0 = Clock::now();
  std::vector<ViscosityViolation> visc;
  int vacuous = 0, checked = 0;
  for (const Event& x : probes) {
    try {
      const ViscosityFragment f = viscosity_check(st, u, x, 1e-2, 24, cfg.verify);
      ++checked;
      vacuous += f.subsolution_vacuous || f.supersolution_vacuous;
      visc.insert(visc.end(), f.violations.begin(), f.violations.end());
    } catch (const Error&) {
      // Probes whose stencil leaves the domain are skipped.
    }
  }
  ctx.results["viscosity"] = {{"checked", checked}, {"vacuous", vacuous}, {"violations", visc.size()}};
  for (const auto& v : visc) ctx.violations.push_back(viscosity_violation_json(v));
  {
    auto os = ctx.open("violations.csv");
    write_violations_csv(os, st, visc);
  }
  ctx.timings["viscosity_s"] = seconds_since(t0);

  t0 = Clock::now();
  const OrientationVerdict ori = time_orientation(st, u, probes, 1e-2, 24, cfg.verify);
  ctx.results["orientation"] = orientation_json(ori);
  ctx.timings["orientation_s"] = seconds_since(t0);

  // Semiconcavity on random short segments below the collar.
  t0 = Clock::now();
  const double t_top = surface.level - p.collar * (surface.level - st.slab().t_min);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  const int dim = st.dim();
  auto inside_box = [&](const Event& e) {
    if (e.time() < grid.t_begin || e.time() > std::min(t_top, grid.t_end)) return false;
    for (int a = 1; a < dim; ++a)
      if (e.coords[a] < grid.space[static_cast<std::size_t>(a - 1)][0] || e.coords[a] > grid.space[static_cast<std::size_t>(a - 1)][1]) return false;
    return u.contains(e);
  };
  int seg_pass = 0, seg_total = 0;
  double estimate = 0.0, predicted = 0.0;
  const bool flat = st.kind() == SpacetimeKind::Minkowski || st.kind() == SpacetimeKind::PaperMinkowski2D;
  for (int k = 0; k < p.segments; ++k) {
    Event a, b;
    bool found = false;
    for (int tries = 0; tries < 100 && !found; ++tries) {
      Vec c(dim), d(dim);
      c[0] = grid.t_begin + unif(rng) * (std::min(t_top, grid.t_end) - grid.t_begin);
      for (int i = 1; i < dim; ++i) c[i] = grid.space[static_cast<std::size_t>(i - 1)][0] + unif(rng) * (grid.space[static_cast<std::size_t>(i - 1)][1] - grid.space[static_cast<std::size_t>(i - 1)][0]);
      for (int i = 0; i < dim; ++i) d[i] = normal(rng);
      d.normalize();
      a = Event(c);
      b = Event(Vec(c + p.segment_length * unif(rng) * d));
      found = inside_box(a) && inside_box(b);
    }
    if (!found) continue;
    ++seg_total;
    double C = 0.0;
    const double est = semiconcavity_constant(u, a, b);
    estimate = std::max(estimate, est);
    if (flat) {
      // A priori bound from the minimisers at the endpoints and midpoint.
      for (const Event& q : {a, b, Event(Vec(0.5 * (a.coords + b.coords)))}) {
        const SolveResult r = solve_at(st, surface, q, cfg.solve);
        try {
          C = std::max(C, predicted_semiconcavity_constant(q, r.minimizers.front()));
        } catch (const Error&) {
          C = INFINITY;
        }
      }
      C *= 1.1;
      predicted = std::max(predicted, C);
      const SemiconcavityResult sr = semiconcavity_check(u, a, b, C, 9, 1e-10);
      if (sr.pass) {
        ++seg_pass;
      } else {
        ctx.violations.push_back({{"kind", "semiconcavity"}, {"from", event_json(a)}, {"to", event_json(b)},
                                  {"constant", C}, {"margin", sr.worst_margin}});
      }
    }
  }
  ctx.results["semiconcavity"] = {{"segments", seg_total}, {"estimated_constant", estimate},
                                  {"checked_against_prediction", flat}, {"passed", seg_pass},
                                  {"predicted_constant_max", predicted}};
  ctx.timings["semiconcavity_s"] = seconds_since(t0);

  // Level sets.
  t0 = Clock::now();
  std::vector<double> levels = p.levels;
  if (levels.empty()) {
    Vec mid(st.spatial_dim());
    for (int a = 0; a < st.spatial_dim(); ++a) mid[a] = 0.5 * (grid.space[static_cast<std::size_t>(a)][0] + grid.space[static_cast<std::size_t>(a)][1]);
    for (double f : {0.25, 0.5, 0.75})
      levels.push_back(u(Event::from_parts(grid.t_begin + f * (surface.level - grid.t_begin), mid)));
  }
  json achron = json::array();
  for (double lv : levels) {
    json entry = {{"level", lv}};
    try {
      const AchronalityResult ar = level_set_achronality(st, u, lv, grid.space, grid.t_begin, surface.level,
                                                         p.achronal_points, p.achronal_pairs, cfg.verify);
      entry["points"] = ar.points.size();
      entry["pass"] = ar.pass;
      entry["violations"] = ar.violations.size();
      for (const auto& [x, y] : ar.violations)
        ctx.violations.push_back({{"kind", "achronality"}, {"level", lv}, {"p", event_json(x)}, {"q", event_json(y)}});
    } catch (const Error& e) {
      entry["pass"] = false;
      entry["error"] = e.what();
      ctx.violations.push_back({{"kind", "achronality"}, {"level", lv}, {"message", e.what()}});
    }
    achron.push_back(entry);
  }
  ctx.results["achronality"] = achron;
  ctx.timings["achronality_s"] = seconds_since(t0);
  ctx.summary = "probes=" + std::to_string(probes.size()) + " max_residual=" + format_double(res.max) +
                " orientation=" + std::string(to_string(ori.kind)) +
                " violations=" + std::to_string(ctx.violations.size());
}

void run_ray(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Spacetime& st = *cfg.spacetime;
  if (!cfg.params.point) throw ConfigError("ray needs a point");
  const Event x = *cfg.params.point;
  const SolveResult r = solve_at(st, *cfg.surface, x, cfg.solve);
  const Geodesic ray = calibrated_ray(st, *cfg.surface, r, x, cfg.solve);
  const double defect = calibration_defect(st, *cfg.surface, ray, r.value, 21, cfg.solve);
  {
    auto os = ctx.open("ray.csv");
    write_curve_csv(os, st, ray.curve);
  }
  const double length = ray.curve.samples.back().s;
  ctx.results["value"] = r.value;
  ctx.results["minimizer"] = event_json(r.minimizers.front());
  ctx.results["status"] = std::string(to_string(r.status));
  ctx.results["length"] = length;
  ctx.results["calibration_defect"] = defect;
  // Gradient flow: the ray's velocity is minus the gradient in its interior.
  const Event mid = point_at_parameter(st, ray.curve, 0.5 * length);
  const ScalarField u = variational_field(st, *cfg.surface, cfg.solve);
  try {
    if (auto g = numeric_gradient(st, u, mid, cfg.tol.fd_step, cfg.tol)) {
      auto it = std::lower_bound(ray.curve.samples.begin(), ray.curve.samples.end(), 0.5 * length,
                                 [](const CurveSample& smp, double v) { return smp.s < v; });
      const Vec vel = it == ray.curve.samples.end() ? ray.curve.samples.back().tangent : it->tangent;
      ctx.results["gradient_alignment"] = (vel + g->components).lpNorm<Eigen::Infinity>();
    }
  } catch (const Error&) {
  }
  if (defect > cfg.tol.cal)
    ctx.violations.push_back({{"kind", "calibration"}, {"point", event_json(x)}, {"defect", defect}});

  // Upper support through the waypoint: equal to u at x, above it nearby.
  const UpperSupport sup = upper_support(st, *cfg.surface, x, cfg.params.waypoint_fraction, cfg.solve);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double ball = 0.1 * std::min(1.0, length);
  double margin = INFINITY;
  int sampled = 0;
  for (int k = 0; k < 100; ++k) {
    Vec d(st.dim());
    for (int i = 0; i < st.dim(); ++i) d[i] = normal(rng);
    const Event z(Vec(x.coords + ball * std::pow(unif(rng), 1.0 / st.dim()) * d / d.norm()));
    if (!u.contains(z)) continue;
    ++sampled;
    margin = std::min(margin, sup(z) - u(z));
  }
  const double base_gap = std::abs(sup(x) - r.value);
  ctx.results["upper_support"] = {{"waypoint_fraction", sup.fraction()},
                                  {"waypoint", event_json(sup.waypoint())},
                                  {"base_gap", base_gap},
                                  {"samples", sampled},
                                  {"min_dominance_margin", sampled ? margin : 0.0}};
  if (base_gap > cfg.tol.solve || (sampled && margin < -cfg.tol.solve))
    ctx.violations.push_back({{"kind", "upper_support"}, {"base_gap", base_gap}, {"margin", margin}});
  ctx.summary = "u=" + format_double(r.value) + " length=" + format_double(length) +
                " calibration_defect=" + format_double(defect);
}

void run_stability(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const StabilityReport rep = stability_experiment(*cfg.spacetime, *cfg.surface, cfg.params.rule, *cfg.grid,
                                                   cfg.params.terms, cfg.solve, cfg.threads);
  {
    auto os = ctx.open("stability.csv");
    write_csv_header(os, {"n", "data_gap", "error", "bounded"});
    for (const auto& row : rep.rows)
      write_csv_row(os, {static_cast<double>(row.n), row.data_gap, row.error, row.bounded ? 1.0 : 0.0});
  }
  json rows = json::array();
  for (const auto& row : rep.rows) {
    rows.push_back({{"n", row.n}, {"data_gap", row.data_gap}, {"error", row.error}, {"bounded", row.bounded}});
    if (!row.bounded) ctx.violations.push_back({{"kind", "non_expansiveness"}, {"n", row.n}, {"error", row.error}});
  }
  ctx.results["rule"] = std::string(to_string(rep.rule));
  ctx.results["rows"] = rows;
  ctx.results["bounded"] = rep.bounded;
  ctx.results["strictly_decreasing"] = rep.strictly_decreasing;
  ctx.results["monotone_fields"] = rep.monotone_fields;
  ctx.results["failed_nodes"] = rep.failed_nodes;
  ctx.summary = "terms=" + std::to_string(rep.rows.size()) + " bounded=" + (rep.bounded ? "true" : "false") +
                " strictly_decreasing=" + (rep.strictly_decreasing ? "true" : "false");
}

void run_counterexample(Context& ctx) {
  RunConfig base = ctx.cfg.spacetime ? ctx.cfg : counterexample_config(ctx.cfg.params.c);
  const Spacetime& st = *base.spacetime;
  if (!base.surface) throw ConfigError("counterexample needs a surface");
  const CauchySurface& surface = *base.surface;
  const double c = ctx.cfg.params.c;
  const ScalarField uc = counterexample_family(st, c);
  if (!(c > st.slab().t_min)) throw ConfigError("c must lie inside the temporal range of the slab");

  std::vector<Event> probes;
  const double t_lo = st.slab().t_min + 0.1, t_hi = surface.level - 0.1;
  for (int i = 0; i < 19; ++i)
    for (double y : {-0.5, 0.0, 0.5}) probes.push_back(Event{t_lo + (t_hi - t_lo) * i / 18.0, y});
  // Kink probes, unless the sweep already hits the kink.
  bool kink_sampled = false;
  for (const Event& p : probes) kink_sampled = kink_sampled || std::abs(p.time() - c) < 1e-12;
  if (!kink_sampled)
    for (double y : {-0.5, 0.0, 0.5}) probes.push_back(Event{c, y});

  const UniquenessReport rep = uniqueness_check(st, surface, uc, probes, ctx.cfg.verify, ctx.cfg.solve);
  double below = 0.0, above = 0.0;
  {
    auto os = ctx.open("counterexample.csv");
    std::vector<std::string> header = st.labels();
    header.insert(header.end(), {"u_c", "u_phi", "difference"});
    write_csv_header(os, header);
    for (const Event& p : probes) {
      const double a = uc(p);
      const double b = solve_at(st, surface, p, ctx.cfg.solve).value;
      write_csv_row(os, {p.coords[0], p.coords[1], a, b, a - b});
      if (p.time() < c) below = std::max(below, std::abs((a - b) - 2.0 * std::abs(p.time() - c)));
      else above = std::max(above, std::abs(a - b));
    }
  }
  for (const auto& v : rep.violations) ctx.violations.push_back(viscosity_violation_json(v));
  ctx.results["c"] = c;
  ctx.results["viscosity_pass"] = rep.viscosity_pass;
  ctx.results["boundary_error"] = rep.boundary_error;
  ctx.results["orientation"] = orientation_json(rep.orientation);
  ctx.results["disagreement_region"] = st.labels()[0] + " < " + format_double(c);
  ctx.results["difference_formula_error_below"] = below;
  ctx.results["difference_above"] = above;
  ctx.results["max_difference"] = rep.max_difference;
  ctx.results["uniqueness_premises_hold"] = rep.premises_hold;
  ctx.summary = "viscosity=" + std::string(rep.viscosity_pass ? "pass" : "fail") +
                " orientation=" + std::string(to_string(rep.orientation.kind)) +
                " disagreement=" + std::string(ctx.results["disagreement_region"]);
}

void run_distance(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Spacetime& st = *cfg.spacetime;
  if (!cfg.params.from || !cfg.params.to) throw ConfigError("distance needs from and to");
  const Event x = *cfg.params.from, y = *cfg.params.to;
  if (x.dim() != st.dim() || y.dim() != st.dim()) throw ConfigError("distance endpoints have the wrong dimension");
  const Relation rel = relation(st, x, y, cfg.tol);
  std::vector<DistanceRow> rows;
  const DistanceResult main = lorentz_distance(st, x, y, cfg.tol);
  rows.push_back({x, y, main});
  ctx.results["relation"] = std::string(to_string(rel));
  ctx.results["distance"] = main.value;
  ctx.results["backend"] = std::string(to_string(main.backend));
  if (main.backend != DistanceBackend::Shooting && rel == Relation::Chronological) {
    const DistanceResult sh = lorentz_distance_shooting(st, x, y, cfg.tol);
    rows.push_back({x, y, sh});
    ctx.results["shooting"] = sh.value;
  }
  if (cfg.params.oracle || !st.is_flat()) {
    DistanceResult o;
    o.backend = DistanceBackend::DagOracle;
    o.value = distance_oracle_dag(st, x, y, cfg.oracle, cfg.tol);
    rows.push_back({x, y, o});
    ctx.results["oracle"] = o.value;
  }
  {
    auto os = ctx.open("distance.csv");
    write_distance_csv(os, st, rows);
  }
  ctx.summary = "relation=" + std::string(to_string(rel)) + " d=" + format_double(main.value);
}

}  // namespace

RunResult run(const RunConfig& cfg) {
  Context ctx{cfg, cfg.output_dir};
  std::filesystem::create_directories(ctx.dir);
  RunResult out;
  const auto t0 = Clock::now();
  try {
    switch (cfg.task) {
      case Task::Solve: run_solve(ctx); break;
      case Task::Verify: run_verify(ctx); break;
      case Task::Ray: run_ray(ctx); break;
      case Task::Stability: run_stability(ctx); break;
      case Task::Counterexample: run_counterexample(ctx); break;
      case Task::Distance: run_distance(ctx); break;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    out.exit_code = 1;
    ctx.results["error"] = e.what();
    ctx.violations.push_back({{"kind", "error"}, {"message", e.what()}});
    ctx.summary += (ctx.summary.empty() ? "" : " ") + std::string("error=") + e.what();
  }
  const double wall = seconds_since(t0);
  ctx.timings["total_s"] = wall;
  const json report = {{"task", std::string(to_string(cfg.task))}, {"config_digest", cfg.digest}, {"seed", cfg.seed},
                       {"results", ctx.results},  {"violations", ctx.violations},    {"timings", ctx.timings}};
  out.report_json = report.dump(2);
  {
    const auto path = ctx.dir / "report.json";
    std::ofstream os(path);
    os << out.report_json << '\n';
    ctx.files.push_back(path);
  }
  out.files = ctx.files;
  std::ostringstream summary;
  char wall_text[32];
  std::snprintf(wall_text, sizeof wall_text, "%.3f", wall);
  summary << "task=" << to_string(cfg.task) << ' ' << ctx.summary << " wall=" << wall_text << "s";
  out.summary = summary.str();
  return out;
}

}  // namespace lorentz_eikonal
