// Batch front end: reads a JSON run configuration, runs one subcommand and
// writes CSV results plus a manifest into the output directory.

#include "run_config.hpp"

#include "qpbie/nonlinear.hpp"
#include "qpbie/solvers.hpp"

#include <CLI11.hpp>
#include <boost/version.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace qpbie;
using cli::json;
using cli::RunConfig;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kConfigError = 2, kResonanceError = 3, kSolverError = 4, kIOError = 5 };

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::kResonance: return kResonanceError;
    case ErrorCode::kIllConditioned:
    case ErrorCode::kNewtonDivergence:
    case ErrorCode::kNotConverged: return kSolverError;
    case ErrorCode::kIO: return kIOError;
    default: return kConfigError;
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error(ErrorCode::kIO, "cannot open " + path.string());
    row_strings(header);
  }

  Csv& operator<<(double v) { return add(fmt(v)); }
  Csv& operator<<(int v) { return add(std::to_string(v)); }
  Csv& operator<<(const std::string& s) { return add(s); }
  Csv& operator<<(Complex z) { return *this << z.real() << z.imag(); }
  Csv& operator<<(const Vec2& x) { return *this << x[0] << x[1]; }

  void end() {
    out_ << line_ << '\n';
    line_.clear();
    first_ = true;
    if (!out_) throw Error(ErrorCode::kIO, "write failed");
  }

 private:
  Csv& add(const std::string& s) {
    if (!first_) line_ += ',';
    line_ += s;
    first_ = false;
    return *this;
  }
  void row_strings(const std::vector<std::string>& cells) {
    for (const std::string& c : cells) add(c);
    end();
  }

  std::ofstream out_;
  std::string line_;
  bool first_ = true;
};

/// Writes manifest.json before any results and rewrites it with the final
/// status; outputs of a failed run are listed under "partial_outputs".
class Run {
 public:
  Run(std::string command, const RunConfig& cfg, fs::path dir, int threads, std::uint64_t seed)
      : dir_(std::move(dir)) {
    manifest_ = {{"tool", "qpbie_cli"},
                 {"version", kVersion},
                 {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                       "." + std::to_string(EIGEN_MINOR_VERSION)},
                 {"boost_version", BOOST_LIB_VERSION},
                 {"subcommand", std::move(command)},
                 {"threads", threads},
                 {"seed", seed},
                 {"config", cli::to_json(cfg)},
                 {"status", "running"},
                 {"outputs", json::array()}};
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::kIO, "cannot create " + dir_.string() + ": " + ec.message());
    write_manifest();
  }

  fs::path file(const std::string& name) {
    outputs_.push_back(name);
    return dir_ / name;
  }

  void note(const std::string& key, json value) { manifest_["results"][key] = std::move(value); }
  void warn(const std::string& w) {
    manifest_["warnings"].push_back(w);
    std::cerr << "warning: " << w << '\n';
  }

  void complete(int code) {
    manifest_["status"] = code == kOk ? "complete" : "checks-failed";
    manifest_["outputs"] = outputs_;
    manifest_["exit_code"] = code;
    write_manifest();
  }

  void failed(int code, const std::string& kind, const std::string& message) {
    manifest_["status"] = "failed";
    manifest_["error"] = {{"kind", kind}, {"message", message}};
    manifest_["exit_code"] = code;
    manifest_["outputs"] = json::array();
    manifest_["partial_outputs"] = outputs_;
    try {
      write_manifest();
      std::ofstream(dir_ / "FAILED") << kind << ": " << message << '\n';
    } catch (...) {
    }
  }

 private:
  void write_manifest() {
    std::ofstream out(dir_ / "manifest.json");
    out << manifest_.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kIO, "cannot write manifest");
  }

  fs::path dir_;
  json manifest_;
  std::vector<std::string> outputs_;
};

// ---------------------------------------------------------------------------
// Configuration to library objects.

Vec2 vec(const cli::Point& p) { return {p[0], p[1]}; }

Lattice lattice_of(const RunConfig& c) { return Lattice::square2d(c.q[0], c.q[1], c.eta[0], c.eta[1]); }

BoundaryCurve curve_of(const RunConfig& c) {
  const auto& g = c.geometry;
  return make_curve(shape_from_string(g.shape), vec(g.center), g.a, g.b);
}

void require_problem(const RunConfig& c, std::initializer_list<const char*> accepted, const std::string& command) {
  for (const char* p : accepted) {
    if (c.problem == p) return;
  }
  throw Error(ErrorCode::kConfig, "subcommand " + command + " does not run problem '" + c.problem + "'");
}

GreenEvaluator green_of(const RunConfig& c) {
  const Lattice lat = lattice_of(c);
  const double d = spectrum_distance(lat, c.k);
  if (d < c.tolerances.resonance) {
    throw Error(ErrorCode::kResonance, "k is resonant for the lattice (spectrum distance " + fmt(d) + ")");
  }
  return GreenEvaluator(lat, c.k);
}

// Twenty points on a ring between the hole and the cell boundary.
std::vector<Vec2> default_probes(const BoundaryCurve& curve, const Lattice& lat) {
  double radius = 0.0;
  for (int i = 0; i < 512; ++i) radius = std::max(radius, (curve.at(kTwoPi * i / 512).x - curve.center).norm());
  const double r = radius + 0.5 * cell_clearance(curve, lat);
  std::vector<Vec2> out;
  for (int i = 0; i < 20; ++i) {
    const double a = kTwoPi * (i + 0.25) / 20;
    out.push_back(curve.center + r * Vec2(std::cos(a), std::sin(a)));
  }
  return out;
}

std::vector<Vec2> probes_of(const RunConfig& c, const std::vector<Vec2>& fallback) {
  if (c.probes.empty()) return fallback;
  std::vector<Vec2> out;
  for (const auto& p : c.probes) out.push_back(vec(p));
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands.

int green_eval(const RunConfig& c, Run& run) {
  require_problem(c, {"green-eval"}, "green-eval");
  const GreenEvaluator g = green_of(c);
  std::vector<Vec2> pts;
  for (int i = 0; i < c.grid.n; ++i) {
    for (int j = 0; j < c.grid.n; ++j) {
      const Vec2 x(c.q[0] * (i + 0.5) / c.grid.n, c.q[1] * (j + 0.5) / c.grid.n);
      double lattice_gap = std::numeric_limits<double>::infinity();
      for (double a : {0.0, c.q[0]}) {
        for (double b : {0.0, c.q[1]}) lattice_gap = std::min(lattice_gap, (x - Vec2(a, b)).norm());
      }
      if (lattice_gap >= c.grid.exclusion) pts.push_back(x);
    }
  }
  std::vector<Complex> vals(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { vals[i] = g.value(pts[i]); });
  Csv out(run.file("green.csv"), {"x", "y", "ReG", "ImG"});
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out << pts[i] << vals[i];
    out.end();
  }
  run.note("points", pts.size());
  return kOk;
}

int solve_bvp(const RunConfig& c, Run& run, BoundaryProblem problem) {
  const bool dirichlet = problem == BoundaryProblem::kDirichlet;
  const std::string name = dirichlet ? "dirichlet" : "neumann";
  require_problem(c, {dirichlet ? "dirichlet" : "neumann"}, "solve-" + name);
  const GreenEvaluator g = green_of(c);
  const Lattice& lat = g.lattice();
  const BoundaryCurve curve = curve_of(c);
  require_inside_cell(curve, lat);
  const DiscreteCurve dc = discretize(curve, c.n);

  std::optional<Vec2> source;
  BoundaryData data;
  if (c.boundary_data.source) {
    source = vec(*c.boundary_data.source);
    if (winding_number(dc, *source) < 0.5) {
      throw Error(ErrorCode::kConfig, "manufactured source must lie inside the hole");
    }
    data = [&g, x0 = *source, dirichlet](const CurvePoint& pt) {
      const Field2 f = g.eval(pt.x - x0);
      if (dirichlet) return f.value;
      const Vec2 nu = pt.normal();
      return nu[0] * f.gradient[0] + nu[1] * f.gradient[1];
    };
  } else if (c.boundary_data.coefficients.empty()) {
    throw Error(ErrorCode::kConfig, "boundary_data needs a source or coefficients");
  }

  SolverOptions opt;
  opt.linear_tolerance = c.tolerances.linear;
  opt.boundary_tolerance = c.tolerances.boundary;
  BVPSolution s;
  if (source) {
    s = dirichlet ? solve_dirichlet(dc, g, data, c.a_flag, opt) : solve_neumann(dc, g, data, opt);
  } else {
    const auto& coeffs = c.boundary_data.coefficients;
    const int m = static_cast<int>(coeffs.size() / 2);
    CVector values(dc.n);
    for (int j = 0; j < dc.n; ++j) {
      Complex v = 0.0;
      for (int l = -m; l <= m; ++l) v += coeffs[static_cast<std::size_t>(l + m)] * std::polar(1.0, l * dc.t[j]);
      values[j] = v;
    }
    s = dirichlet ? solve_dirichlet(dc, g, values, c.a_flag, opt) : solve_neumann(dc, g, values, opt);
  }
  for (const std::string& w : s.warnings) run.warn(w);

  {
    Csv out(run.file("density.csv"), {"t", "Re_mu", "Im_mu"});
    for (int j = 0; j < dc.n; ++j) {
      out << dc.t[j] << s.density[j];
      out.end();
    }
  }
  const std::vector<Vec2> probes = probes_of(c, default_probes(curve, lat));
  for (const Vec2& x : probes) {
    if (winding_number(dc, x) > 0.5) throw Error(ErrorCode::kConfig, "probe lies inside the hole");
  }
  FieldOptions fopt;
  fopt.upsample = 4;
  const FieldSample u = evaluate_solution(s, g, probes, fopt);
  double sup_error = std::numeric_limits<double>::quiet_NaN();
  {
    std::vector<std::string> header{"x", "y", "Re_u", "Im_u"};
    if (source) header.insert(header.end(), {"Re_exact", "Im_exact", "abs_error"});
    Csv out(run.file("field.csv"), header);
    if (source) sup_error = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const auto e = static_cast<Eigen::Index>(i);
      out << probes[i] << u.values[e];
      if (source) {
        const Complex exact = g.value(probes[i] - *source);
        const double err = std::abs(u.values[e] - exact);
        sup_error = std::max(sup_error, err);
        out << exact << err;
      }
      out.end();
    }
  }
  {
    Csv out(run.file("summary.csv"), {"quantity", "value"});
    out << std::string("n") << c.n;
    out.end();
    out << std::string("a_flag") << s.a_flag;
    out.end();
    out << std::string("condition_estimate") << s.condition_estimate;
    out.end();
    out << std::string("linear_residual") << s.linear_residual;
    out.end();
    out << std::string("boundary_residual") << s.boundary_residual;
    out.end();
    if (source) {
      out << std::string("sup_error") << sup_error;
      out.end();
    }
  }
  run.note("condition_estimate", s.condition_estimate);
  run.note("boundary_residual", s.boundary_residual);
  if (source) {
    run.note("sup_error", sup_error);
    std::cout << "sup_error " << fmt(sup_error) << '\n';
  }
  return kOk;
}

RobinNonlinearity nonlinearity_of(const RunConfig& c) {
  RobinNonlinearity b = nonlinearity_from_name(c.nonlinearity.name, c.nonlinearity.params);
  check_derivative(b);
  return b;
}

NewtonOptions newton_of(const RunConfig& c) {
  NewtonOptions opt;
  opt.tolerance = c.tolerances.newton;
  opt.max_iterations = c.tolerances.newton_max_iterations;
  return opt;
}

// The problem keeps a reference to g, so the setup is built in place.
struct RobinSetup {
  explicit RobinSetup(const RunConfig& c)
      : g(green_of(c)),
        hole{discretize(curve_of(c), c.n), vec(c.geometry.p)},
        problem(hole, g, nonlinearity_of(c), newton_of(c)) {}

  GreenEvaluator g;
  HoleGeometry hole;
  RobinProblem problem;
};

std::vector<double> schedule_of(const RunConfig& c, const RobinSetup& s, bool sweep) {
  std::vector<double> eps = c.geometry.eps_sweep;
  if (!sweep && c.geometry.eps) eps = {*c.geometry.eps};
  if (eps.empty()) {
    if (!sweep) throw Error(ErrorCode::kConfig, "solve-robin needs geometry.eps or geometry.eps_sweep");
    eps = default_schedule(s.hole, s.g.lattice());
  }
  return eps;
}

void write_states(Run& run, const RobinSetup& s, const std::vector<ContinuationState>& states) {
  Csv out(run.file("continuation.csv"),
          {"eps", "residual", "iterations", "theta_distance", "boundary_residual", "max_quadratic_ratio"});
  for (const ContinuationState& st : states) {
    const std::vector<double> ratios = quadratic_ratios(st);
    const double worst = ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end());
    out << st.eps << st.residual_norm << st.newton_iterations
        << (st.theta - s.problem.limit_density()).cwiseAbs().maxCoeff() << s.problem.boundary_condition_residual(st)
        << worst;
    out.end();
  }
}

void write_field(Run& run, const RobinSetup& s, const std::vector<ContinuationState>& states,
                 const std::vector<Vec2>& probes) {
  Csv out(run.file("field.csv"), {"eps", "x", "y", "Re_u", "Im_u"});
  for (const ContinuationState& st : states) {
    const CVector u = s.problem.reconstruct_field(st, probes).values;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      out << st.eps << probes[i] << u[static_cast<Eigen::Index>(i)];
      out.end();
    }
  }
}

int solve_robin(const RunConfig& c, Run& run, bool sweep) {
  require_problem(c, {"robin"}, sweep ? "sweep-epsilon" : "solve-robin");
  const RobinSetup s(c);
  const std::vector<double> eps = schedule_of(c, s, sweep);
  {
    Csv out(run.file("limit_density.csv"), {"t", "Re_theta", "Im_theta"});
    for (int j = 0; j < s.hole.reference.n; ++j) {
      out << s.hole.reference.t[j] << s.problem.limit_density()[j];
      out.end();
    }
  }
  const std::vector<ContinuationState> states = s.problem.continuation(eps);
  write_states(run, s, states);

  // Default probes sit one cell away from the hole copy at p.
  const Vec2 p = s.hole.p;
  const std::vector<Vec2> fallback{p + Vec2(1.8 * c.q[0], -1.7 * c.q[1]), p + Vec2(-2.1 * c.q[0], 1.9 * c.q[1])};
  const std::vector<Vec2> probes = probes_of(c, fallback);
  write_field(run, s, states, probes);
  if (!sweep) return kOk;

  const FarFieldFit fit = far_field_scaling(s.problem, states, probes);
  for (const std::string& w : fit.warnings) run.warn(w);
  Csv out(run.file("fit.csv"), {"probe", "x", "y", "Re_c0", "Im_c0", "Re_predicted", "Im_predicted", "exponent",
                                "fit_residual", "c0_relative_error"});
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    const double rel = std::abs(fit.c0[e] - fit.predicted[e]) / std::abs(fit.predicted[e]);
    out << static_cast<int>(i) << probes[i] << fit.c0[e] << fit.predicted[e] << fit.exponents[i]
        << fit.fit_residuals[i] << rel;
    out.end();
    std::cout << "probe " << i << " exponent " << fmt(fit.exponents[i]) << " c0_relative_error " << fmt(rel) << '\n';
  }
  return kOk;
}

int check_rescaling(const RunConfig& c, Run& run) {
  require_problem(c, {"check-rescaling"}, "check-rescaling");
  const GreenEvaluator g = green_of(c);
  const HoleGeometry hole{discretize(curve_of(c), c.n), vec(c.geometry.p)};
  std::vector<double> eps = c.geometry.eps_sweep;
  if (eps.empty() && c.geometry.eps) eps = {*c.geometry.eps};
  if (eps.empty()) eps = {0.2, 0.1, 0.05, 0.02};
  CVector theta(c.n);
  for (int j = 0; j < c.n; ++j) {
    const double t = hole.reference.t[j];
    theta[j] = Complex(1.0 + std::cos(t), 0.5 * std::sin(2.0 * t));
  }
  const Vec2 p = hole.p;
  const std::vector<Vec2> probes =
      probes_of(c, {p + Vec2(0.4 * c.q[0], 0.1 * c.q[1]), p + Vec2(-1.3 * c.q[0], 0.8 * c.q[1])});
  IdentityOptions truncated;
  truncated.drop_log_term = true;
  Csv out(run.file("rescaling.csv"), {"eps", "identity", "residual", "residual_without_log_term"});
  double worst = 0.0;
  for (double e : eps) {
    for (IdentityKind kind : {IdentityKind::kSingleTrace, IdentityKind::kAdjoint, IdentityKind::kDoubleBoundary,
                              IdentityKind::kFarSingle, IdentityKind::kFarDouble}) {
      const double full = rescaling_identity_residual(kind, e, hole, g, theta, probes);
      const double cut = rescaling_identity_residual(kind, e, hole, g, theta, probes, truncated);
      worst = std::max(worst, full);
      out << e << std::string(to_string(kind)) << full << cut;
      out.end();
    }
  }
  run.note("max_residual", worst);
  std::cout << "max_residual " << fmt(worst) << '\n';
  return kOk;
}

// Fast invariant checks over random draws.
int selftest(const RunConfig& c, Run& run, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Csv out(run.file("selftest.csv"), {"check", "value", "tolerance", "pass"});
  bool all = true;
  const auto record = [&](const std::string& name, double value, double tol) {
    const bool ok = value <= tol;
    all = all && ok;
    out << name << value << tol << std::string(ok ? "1" : "0");
    out.end();
    std::cout << (ok ? "PASS " : "FAIL ") << name << ' ' << fmt(value) << '\n';
  };

  record("fs_constants",
         std::max({std::abs(specfun::fs_coefficients(2, 0.0).j - 1.0 / kTwoPi),
                   std::abs(specfun::fs_coefficients(2, 0.0).n),
                   std::abs(specfun::fs_coefficients(3, 0.0).n + 1.0 / (4.0 * kPi)),
                   std::abs(specfun::entire_neumann(4, 0.0) + 2.0 / kPi)}),
         1e-14);

  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double eps = 0.01 + 0.99 * u(rng), r = 0.1 + 2.0 * u(rng), a = kTwoPi * u(rng);
    const Vec2 x(r * std::cos(a), r * std::sin(a));
    const Complex k = std::polar(5.0 * u(rng), kPi * (u(rng) - 0.5));
    const Complex lhs = specfun::fundamental_solution2(eps * x, k).value;
    const Complex rhs =
        specfun::fundamental_solution2(x, eps * k).value + std::log(eps) * specfun::radial2(eps * r, k).j;
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300));
  }
  record("fundamental_solution_rescaling", worst, 1e-12);

  const Lattice lat = lattice_of(c);
  const GreenEvaluator g = green_of(c);
  GreenEvaluator::Options wide;
  wide.ewald_split = 1.25 * g.ewald_split();
  const GreenEvaluator g2(lat, c.k, wide);
  double qp = 0.0, split = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Vec2 x(0.1 + 0.8 * u(rng), 0.1 + 0.8 * u(rng));
    const Complex v = g.value(x);
    for (int d = 0; d < 2; ++d) {
      const Vec2 shift = d == 0 ? Vec2(lat.q[0], 0.0) : Vec2(0.0, lat.q[1]);
      const Complex phase = std::polar(1.0, lat.eta[d] * lat.q[d]);
      qp = std::max(qp, std::abs(g.value(x + shift) - phase * v) / std::abs(v));
    }
    split = std::max(split, std::abs(g2.value(x) - v) / std::abs(v));
  }
  record("green_quasi_periodicity", qp, 1e-10);
  record("green_split_invariance", split, 1e-10);

  const DiscreteCurve disk = discretize(circle(0.5), 64);
  const CMatrix kadj = assemble_free_space(disk, 0.0, false, false, true).kadj;
  record("laplace_adjoint_constant", (kadj * CVector::Ones(64) - 0.5 * CVector::Ones(64)).cwiseAbs().maxCoeff(),
         1e-12);

  double gate = 0.0;
  for (const char* name : {"quadratic", "sine"}) {
    gate = std::max(gate, derivative_mismatch(nonlinearity_from_name(name, {0.5, 1.0}), seed));
  }
  record("nonlinearity_derivative_gate", gate, 1e-7);

  const HoleGeometry hole{discretize(circle(1.0), 32), Vec2(0.5 * lat.q[0], 0.5 * lat.q[1])};
  CVector theta(32);
  for (int j = 0; j < 32; ++j) theta[j] = Complex(u(rng), u(rng));
  record("rescaled_adjoint_identity",
         rescaling_identity_residual(IdentityKind::kAdjoint, 0.1 * hole.epsilon0(lat), hole, g, theta), 1e-8);

  return all ? kOk : kCheckFailed;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIO, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return cli::parse(ss.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-periodic Helmholtz boundary-integral toolkit"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int threads = 1;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for randomized checks");
  const std::vector<std::string> commands{"green-eval",    "solve-dirichlet",  "solve-neumann", "solve-robin",
                                          "sweep-epsilon", "check-rescaling", "selftest"};
  for (const std::string& name : commands) app.add_subcommand(name)->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = load_config(config_path);
    } else if (command == "selftest") {
      cfg.problem = "green-eval";
      cfg.eta = {0.4, 0.7};
      cfg.k = 1.3;
    } else {
      throw Error(ErrorCode::kConfig, command + " requires --config");
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  }

  set_thread_count(threads);
  std::optional<Run> run;
  try {
    run.emplace(command, cfg, fs::path(cfg.output_dir), threads, seed);
    int code = kOk;
    if (command == "green-eval") code = green_eval(cfg, *run);
    else if (command == "solve-dirichlet") code = solve_bvp(cfg, *run, BoundaryProblem::kDirichlet);
    else if (command == "solve-neumann") code = solve_bvp(cfg, *run, BoundaryProblem::kNeumann);
    else if (command == "solve-robin") code = solve_robin(cfg, *run, false);
    else if (command == "sweep-epsilon") code = solve_robin(cfg, *run, true);
    else if (command == "check-rescaling") code = check_rescaling(cfg, *run);
    else code = selftest(cfg, *run, seed);
    run->complete(code);
    return code;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    if (run) run->failed(exit_code(e.code()), to_string(e.code()), e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (run) run->failed(kSolverError, "internal", e.what());
    return kSolverError;
  }
}
