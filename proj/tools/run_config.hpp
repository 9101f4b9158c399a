#pragma once

// JSON run configuration for the command-line front end.

#include "qpbie/common.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace qpbie::cli {

using Point = std::array<double, 2>;
using json = nlohmann::json;

struct GeometrySpec {
  std::string shape = "circle";
  double a = 0.25;
  double b = 0.25;
  Point center{0.5, 0.5};        // curve centre (reference curve for hole problems)
  Point p{0.5, 0.5};             // hole centre for the shrinking-hole problems
  std::optional<double> eps;     // single eps
  std::vector<double> eps_sweep;
  bool operator==(const GeometrySpec&) const = default;
};

struct NonlinearitySpec {
  std::string name = "quadratic";
  std::vector<Complex> params{0.5};
  bool operator==(const NonlinearitySpec&) const = default;
};

/// Either an interior source point (data from G(x - source)) or Fourier
/// coefficients c_{-M..M} of g(t) = sum c_m exp(i m t).
struct BoundaryDataSpec {
  std::optional<Point> source;
  std::vector<Complex> coefficients;
  bool operator==(const BoundaryDataSpec&) const = default;
};

struct GridSpec {
  int n = 50;
  double exclusion = 0.05;  // radius around lattice points left out
  bool operator==(const GridSpec&) const = default;
};

struct Tolerances {
  double resonance = 1e-9;
  double linear = 1e-10;
  double boundary = 1e-6;
  double newton = 1e-12;
  int newton_max_iterations = 30;
  bool operator==(const Tolerances&) const = default;
};

struct RunConfig {
  std::string problem = "green-eval";
  Point q{1.0, 1.0};
  Point eta{0.0, 0.0};
  Complex k{1.0, 0.0};
  GeometrySpec geometry;
  int n = 128;
  int a_flag = 0;
  NonlinearitySpec nonlinearity;
  BoundaryDataSpec boundary_data;
  std::vector<Point> probes;
  GridSpec grid;
  Tolerances tolerances;
  std::string output_dir = "out";
  bool operator==(const RunConfig&) const = default;
};

inline const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names{"green-eval", "dirichlet", "neumann", "robin", "check-rescaling"};
  return names;
}

namespace detail {

[[noreturn]] inline void fail(const std::string& msg) { throw Error(ErrorCode::kConfig, msg); }

inline void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail("unknown key '" + key + "' in " + where);
  }
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where + " must be a number");
  return j.get<double>();
}

inline int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where + " must be an integer");
  return j.get<int>();
}

inline Point point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) fail(where + " must be a pair of numbers");
  return {number(j[0], where), number(j[1], where)};
}

// A complex value is either a number or [re, im].
inline Complex complex_value(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  const Point p = point(j, where);
  return {p[0], p[1]};
}

inline json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

template <class T, class F>
std::vector<T> list(const json& j, const std::string& where, F&& item) {
  if (!j.is_array()) fail(where + " must be an array");
  std::vector<T> out;
  for (const json& e : j) out.push_back(item(e, where));
  return out;
}

}  // namespace detail

inline json to_json(const RunConfig& c) {
  using detail::complex_json;
  json geometry = {{"shape", c.geometry.shape},     {"a", c.geometry.a},
                   {"b", c.geometry.b},             {"center", c.geometry.center},
                   {"p", c.geometry.p},             {"eps_sweep", c.geometry.eps_sweep}};
  if (c.geometry.eps) geometry["eps"] = *c.geometry.eps;
  json params = json::array();
  for (Complex z : c.nonlinearity.params) params.push_back(complex_json(z));
  json data = json::object();
  if (c.boundary_data.source) data["source"] = *c.boundary_data.source;
  if (!c.boundary_data.coefficients.empty()) {
    json coeffs = json::array();
    for (Complex z : c.boundary_data.coefficients) coeffs.push_back(complex_json(z));
    data["coefficients"] = coeffs;
  }
  return {
      {"problem", c.problem},
      {"lattice", {{"q", c.q}, {"eta", c.eta}}},
      {"wave", {{"k", complex_json(c.k)}}},
      {"geometry", geometry},
      {"discretization", {{"n", c.n}, {"a_flag", c.a_flag}}},
      {"nonlinearity", {{"name", c.nonlinearity.name}, {"params", params}}},
      {"boundary_data", data},
      {"probes", c.probes},
      {"grid", {{"n", c.grid.n}, {"exclusion", c.grid.exclusion}}},
      {"tolerances",
       {{"resonance", c.tolerances.resonance},
        {"linear", c.tolerances.linear},
        {"boundary", c.tolerances.boundary},
        {"newton", c.tolerances.newton},
        {"newton_max_iterations", c.tolerances.newton_max_iterations}}},
      {"output", {{"dir", c.output_dir}}},
  };
}

inline std::string serialize(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

/// Checks ranges and cross-field consistency; throws ErrorCode::kConfig.
inline void validate(const RunConfig& c) {
  using detail::fail;
  bool known = false;
  for (const std::string& p : problem_names()) known = known || p == c.problem;
  if (!known) fail("unknown problem '" + c.problem + "'");
  if (!(c.q[0] > 0.0) || !(c.q[1] > 0.0)) fail("lattice periods must be positive");
  if (c.geometry.shape != "circle" && c.geometry.shape != "ellipse" && c.geometry.shape != "kite") {
    fail("unknown shape '" + c.geometry.shape + "'");
  }
  if (!(c.geometry.a > 0.0) || !(c.geometry.b > 0.0)) fail("shape parameters must be positive");
  if (c.geometry.eps && !(*c.geometry.eps > 0.0)) fail("eps must be positive");
  for (double e : c.geometry.eps_sweep) {
    if (!(e > 0.0)) fail("eps_sweep entries must be positive");
  }
  if (c.n < 16 || c.n % 2 != 0) fail("n must be even and at least 16");
  if (c.a_flag != 0 && c.a_flag != 1) fail("a_flag must be 0 or 1");
  if (c.grid.n < 1 || !(c.grid.exclusion >= 0.0)) fail("grid needs n >= 1 and exclusion >= 0");
  if (c.boundary_data.source && !c.boundary_data.coefficients.empty()) {
    fail("boundary_data takes either a source or coefficients, not both");
  }
  if (!c.boundary_data.coefficients.empty() && c.boundary_data.coefficients.size() % 2 == 0) {
    fail("coefficients must list c_{-M..M} (odd length)");
  }
  const Tolerances& t = c.tolerances;
  if (!(t.resonance > 0.0) || !(t.linear > 0.0) || !(t.boundary > 0.0) || !(t.newton > 0.0) ||
      t.newton_max_iterations < 1) {
    fail("tolerances must be positive");
  }
  if (c.output_dir.empty()) fail("output dir must not be empty");
}

inline RunConfig from_json(const json& j) {
  using namespace detail;
  only_keys(j, "config", {"problem", "lattice", "wave", "geometry", "discretization", "nonlinearity",
                          "boundary_data", "probes", "grid", "tolerances", "output"});
  RunConfig c;
  if (!j.contains("problem") || !j["problem"].is_string()) fail("config needs a 'problem' string");
  c.problem = j["problem"].get<std::string>();
  if (j.contains("lattice")) {
    const json& l = j["lattice"];
    only_keys(l, "lattice", {"q", "eta"});
    if (l.contains("q")) c.q = point(l["q"], "lattice.q");
    if (l.contains("eta")) c.eta = point(l["eta"], "lattice.eta");
  }
  if (j.contains("wave")) {
    only_keys(j["wave"], "wave", {"k"});
    if (j["wave"].contains("k")) c.k = complex_value(j["wave"]["k"], "wave.k");
  }
  if (j.contains("geometry")) {
    const json& g = j["geometry"];
    only_keys(g, "geometry", {"shape", "a", "b", "center", "p", "eps", "eps_sweep"});
    if (g.contains("shape")) {
      if (!g["shape"].is_string()) fail("geometry.shape must be a string");
      c.geometry.shape = g["shape"].get<std::string>();
    }
    if (g.contains("a")) c.geometry.a = number(g["a"], "geometry.a");
    c.geometry.b = c.geometry.a;
    if (g.contains("b")) c.geometry.b = number(g["b"], "geometry.b");
    if (g.contains("center")) c.geometry.center = point(g["center"], "geometry.center");
    if (g.contains("p")) c.geometry.p = point(g["p"], "geometry.p");
    if (g.contains("eps") && !g["eps"].is_null()) c.geometry.eps = number(g["eps"], "geometry.eps");
    if (g.contains("eps_sweep")) c.geometry.eps_sweep = list<double>(g["eps_sweep"], "geometry.eps_sweep", number);
  }
  if (j.contains("discretization")) {
    const json& d = j["discretization"];
    only_keys(d, "discretization", {"n", "a_flag"});
    if (d.contains("n")) c.n = integer(d["n"], "discretization.n");
    if (d.contains("a_flag")) c.a_flag = integer(d["a_flag"], "discretization.a_flag");
  }
  if (j.contains("nonlinearity")) {
    const json& b = j["nonlinearity"];
    only_keys(b, "nonlinearity", {"name", "params"});
    if (b.contains("name")) {
      if (!b["name"].is_string()) fail("nonlinearity.name must be a string");
      c.nonlinearity.name = b["name"].get<std::string>();
    }
    if (b.contains("params")) c.nonlinearity.params = list<Complex>(b["params"], "nonlinearity.params", complex_value);
  }
  if (j.contains("boundary_data")) {
    const json& d = j["boundary_data"];
    only_keys(d, "boundary_data", {"source", "coefficients"});
    if (d.contains("source")) c.boundary_data.source = point(d["source"], "boundary_data.source");
    if (d.contains("coefficients")) {
      c.boundary_data.coefficients = list<Complex>(d["coefficients"], "boundary_data.coefficients", complex_value);
    }
  }
  if (j.contains("probes")) c.probes = list<Point>(j["probes"], "probes", point);
  if (j.contains("grid")) {
    only_keys(j["grid"], "grid", {"n", "exclusion"});
    if (j["grid"].contains("n")) c.grid.n = integer(j["grid"]["n"], "grid.n");
    if (j["grid"].contains("exclusion")) c.grid.exclusion = number(j["grid"]["exclusion"], "grid.exclusion");
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    only_keys(t, "tolerances", {"resonance", "linear", "boundary", "newton", "newton_max_iterations"});
    if (t.contains("resonance")) c.tolerances.resonance = number(t["resonance"], "tolerances.resonance");
    if (t.contains("linear")) c.tolerances.linear = number(t["linear"], "tolerances.linear");
    if (t.contains("boundary")) c.tolerances.boundary = number(t["boundary"], "tolerances.boundary");
    if (t.contains("newton")) c.tolerances.newton = number(t["newton"], "tolerances.newton");
    if (t.contains("newton_max_iterations")) {
      c.tolerances.newton_max_iterations = integer(t["newton_max_iterations"], "tolerances.newton_max_iterations");
    }
  }
  if (j.contains("output")) {
    only_keys(j["output"], "output", {"dir"});
    if (j["output"].contains("dir")) {
      if (!j["output"]["dir"].is_string()) fail("output.dir must be a string");
      c.output_dir = j["output"]["dir"].get<std::string>();
    }
  }
  validate(c);
  return c;
}

inline RunConfig parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("malformed JSON: ") + e.what());
  }
  return from_json(j);
}

}  // namespace qpbie::cli
