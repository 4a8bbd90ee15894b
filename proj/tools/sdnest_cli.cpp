#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdnest/config.hpp"
#include "sdnest/congestion.hpp"
#include "sdnest/hedonic.hpp"
#include "sdnest/io.hpp"
#include "sdnest/nest_analysis.hpp"

namespace {

using namespace sdnest;

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitConfigError = 2;

int fail_config(const std::vector<std::string>& errors) {
  for (const std::string& e : errors) std::cerr << e << '\n';
  std::cerr << "the config schema is published in docs/config-schema.json\n";
  return kExitConfigError;
}

// Values mirrored by CLI options; only options the user actually set are
// folded into the JSON document, so flags override file values.
struct CommonFlags {
  std::string config_path;
  std::string problem, example, measure, measure2, method;
  int n = 0, grid = 0, maxit = 0;
  double tol = 0.0, c0 = 0.0;
  std::vector<double> c_interval;
  std::string report, svg, labels, error_curve;

  CLI::Option *o_config = nullptr, *o_problem = nullptr, *o_example = nullptr,
              *o_measure = nullptr, *o_measure2 = nullptr, *o_method = nullptr,
              *o_n = nullptr, *o_grid = nullptr, *o_maxit = nullptr,
              *o_tol = nullptr, *o_c0 = nullptr, *o_c_interval = nullptr,
              *o_report = nullptr, *o_svg = nullptr, *o_labels = nullptr,
              *o_error_curve = nullptr;

  void attach(CLI::App* cmd) {
    o_config = cmd->add_option("--config", config_path, "JSON config file");
    o_problem = cmd->add_option("--problem", problem,
                                "congestion or hedonic");
    o_example = cmd->add_option(
        "--example", example, "E1, E2, E3, E4, curve-x^1.5 or explicit");
    o_n = cmd->add_option("--n", n, "number of targets");
    o_measure = cmd->add_option("--measure", measure,
                                "source measure: uniform or product_xy");
    o_measure2 = cmd->add_option("--measure2", measure2,
                                 "second-side measure (hedonic only)");
    o_method = cmd->add_option(
        "--method", method,
        "newton, damped, nested-bisection or nested-newton");
    o_grid = cmd->add_option("--grid", grid, "grid resolution M");
    o_tol = cmd->add_option("--tol", tol, "success tolerance");
    o_maxit = cmd->add_option("--maxit", maxit, "iteration budget");
    o_c0 = cmd->add_option("--c0", c0, "starting level for scalar Newton");
    o_c_interval =
        cmd->add_option("--c-interval", c_interval, "bisection bracket lo hi")
            ->expected(2);
    o_report = cmd->add_option("--report", report, "report CSV output path");
    o_svg = cmd->add_option("--svg", svg, "tessellation SVG output path");
    o_labels =
        cmd->add_option("--labels", labels, "per-cell label CSV output path");
    o_error_curve = cmd->add_option("--error-curve", error_curve,
                                    "error sweep CSV output path");
  }

  // Config file first, then the provided flags on top.
  bool load(nlohmann::json& doc, std::vector<std::string>& errors) const {
    doc = nlohmann::json::object();
    if (o_config->count() > 0) {
      std::ifstream in(config_path);
      if (!in) {
        errors.push_back("config: cannot read " + config_path);
        return false;
      }
      std::stringstream ss;
      ss << in.rdbuf();
      doc = nlohmann::json::parse(ss.str(), nullptr, false);
      if (doc.is_discarded()) {
        errors.push_back("config: " + config_path + " is not valid JSON");
        return false;
      }
    }
    nlohmann::json o = nlohmann::json::object();
    if (o_problem->count()) o["problem"] = problem;
    if (o_example->count()) o["example"] = example;
    if (o_n->count()) o["n"] = n;
    if (o_measure->count()) o["measure"] = measure;
    if (o_measure2->count()) o["measure2"] = measure2;
    if (o_method->count()) o["method"] = method;
    if (o_grid->count()) o["grid"] = grid;
    if (o_tol->count()) o["tol"] = tol;
    if (o_maxit->count()) o["maxit"] = maxit;
    if (o_c0->count()) o["c0"] = c0;
    if (o_c_interval->count()) o["c_interval"] = c_interval;
    nlohmann::json out = nlohmann::json::object();
    if (o_report->count()) out["report"] = report;
    if (o_svg->count()) out["svg"] = svg;
    if (o_labels->count()) out["labels"] = labels;
    if (o_error_curve->count()) out["error_curve"] = error_curve;
    if (!out.empty()) o["output"] = out;
    doc = merge_config(std::move(doc), o);
    return true;
  }
};

// Parse the merged document and resolve the grid early so a bad
// SDNEST_GRID_M reads as a config problem, not a solver one.
int load_config(const CommonFlags& flags, RunConfig& cfg, int& grid_m) {
  nlohmann::json doc;
  std::vector<std::string> errors;
  if (!flags.load(doc, errors)) return fail_config(errors);
  ConfigParse parsed = parse_run_config(doc);
  if (!parsed.ok()) return fail_config(parsed.errors);
  cfg = std::move(parsed.config);
  try {
    grid_m = effective_grid_m(cfg);
  } catch (const std::exception& e) {
    return fail_config({e.what()});
  }
  return kExitOk;
}

CongestionProblem build_congestion(const RunConfig& cfg, int grid_m) {
  CongestionProblem p;
  p.density = build_density(GridSpec{grid_m}, cfg.measure);
  p.targets = config_targets(cfg);
  return p;
}

HedonicProblem build_hedonic(const RunConfig& cfg, int grid_m) {
  HedonicProblem p;
  p.density1 = build_density(GridSpec{grid_m}, cfg.measure);
  p.density2 = build_density(GridSpec{grid_m}, cfg.measure2);
  p.targets = config_targets(cfg);
  return p;
}

SolveReport run_congestion(const RunConfig& cfg, const CongestionProblem& p) {
  const double tol = effective_tol(cfg);
  const int maxit = effective_maxit(cfg);
  switch (cfg.method) {
    case SolveMethod::newton: {
      NewtonOptions o;
      o.tol = tol;
      o.max_iterations = maxit;
      return newton_standard(p, o);
    }
    case SolveMethod::damped: {
      DampedNewtonOptions o;
      o.tol = tol;
      o.max_iterations = maxit;
      return newton_damped(p, o);
    }
    case SolveMethod::nested_bisection: {
      BisectLevelOptions o;
      std::tie(o.c_lo, o.c_hi) = effective_c_interval(cfg);
      o.tol = tol;
      o.max_iterations = maxit;
      return nested_bisection(p, o);
    }
    case SolveMethod::nested_newton: {
      NewtonLevelOptions o;
      o.c0 = effective_c0(cfg);
      o.tol = tol;
      o.max_iterations = maxit;
      return nested_newton(p, o);
    }
  }
  throw std::logic_error("unreachable method");
}

SolveReport run_hedonic(const RunConfig& cfg, const HedonicProblem& p) {
  const double tol = effective_tol(cfg);
  const int maxit = effective_maxit(cfg);
  switch (cfg.method) {
    case SolveMethod::newton: {
      HedonicNewtonOptions o;
      o.tol = tol;
      o.max_iterations = maxit;
      return hedonic_newton(p, o);
    }
    case SolveMethod::damped: {
      HedonicNewtonOptions o;
      o.tol = tol;
      o.max_iterations = maxit;
      return hedonic_newton_damped(p, o);
    }
    case SolveMethod::nested_bisection:
    case SolveMethod::nested_newton: {
      HedonicNestedOptions o;
      o.tol = tol;
      o.inner = cfg.method == SolveMethod::nested_bisection
                    ? InnerSolver::bisection
                    : InnerSolver::newton;
      o.max_inner = maxit;
      return hedonic_nested(p, o);
    }
  }
  throw std::logic_error("unreachable method");
}

bool write_file(const std::string& path,
                const std::function<void(std::ostream&)>& emit,
                std::string& error) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    error = "cannot write " + path;
    return false;
  }
  emit(out);
  out.flush();
  if (!out) {
    error = "short write to " + path;
    return false;
  }
  return true;
}

std::vector<ErrorCurvePoint> sweep_error_points(const CongestionProblem& p,
                                                double lo, double hi,
                                                double step) {
  std::vector<ErrorCurvePoint> pts;
  for (double c = lo; c <= hi + 1e-12; c += step) {
    ErrorEval ev = sequential_error(p, c);
    const bool feasible = ev.feasible && std::isfinite(ev.error);
    pts.push_back({c, feasible ? ev.error : 0.0, feasible});
  }
  return pts;
}

int write_congestion_artifacts(const RunConfig& cfg,
                               const CongestionProblem& p,
                               const SolveReport& rep) {
  std::string err;
  if (!cfg.output.report.empty() &&
      !write_file(cfg.output.report,
                  [&](std::ostream& os) { write_report_csv(os, {rep}); },
                  err)) {
    std::cerr << err << '\n';
    return kExitRunFailure;
  }
  const bool have_v = rep.v.size() == static_cast<std::size_t>(p.size());
  if ((!cfg.output.svg.empty() || !cfg.output.labels.empty()) && have_v) {
    Tessellation tess = tessellate(p.density, p.cost, p.targets, rep.v);
    if (!cfg.output.svg.empty() &&
        !write_file(cfg.output.svg,
                    [&](std::ostream& os) {
                      write_tessellation_svg(os, tess, p.targets);
                    },
                    err)) {
      std::cerr << err << '\n';
      return kExitRunFailure;
    }
    if (!cfg.output.labels.empty() &&
        !write_file(cfg.output.labels,
                    [&](std::ostream& os) { write_labels_csv(os, tess); },
                    err)) {
      std::cerr << err << '\n';
      return kExitRunFailure;
    }
  }
  if (!cfg.output.error_curve.empty()) {
    const auto [lo, hi] = effective_c_interval(cfg);
    const auto pts = sweep_error_points(p, lo, hi, 0.05);
    if (!write_file(cfg.output.error_curve,
                    [&](std::ostream& os) { write_error_curve_csv(os, pts); },
                    err)) {
      std::cerr << err << '\n';
      return kExitRunFailure;
    }
  }
  return kExitOk;
}

int write_hedonic_artifacts(const RunConfig& cfg, const HedonicProblem& p,
                            const SolveReport& rep) {
  std::string err;
  if (!cfg.output.report.empty() &&
      !write_file(
          cfg.output.report,
          [&](std::ostream& os) { write_hedonic_report_csv(os, {rep}); },
          err)) {
    std::cerr << err << '\n';
    return kExitRunFailure;
  }
  const bool have_v = rep.v.size() == static_cast<std::size_t>(p.size());
  if ((!cfg.output.svg.empty() || !cfg.output.labels.empty()) && have_v) {
    Tessellation t1 = tessellate(p.density1, p.cost, p.targets, rep.v);
    Tessellation t2 = tessellate(p.density2, p.cost, p.targets,
                                 complement_prices(p, rep.v));
    if (!cfg.output.svg.empty() &&
        !write_file(cfg.output.svg,
                    [&](std::ostream& os) {
                      write_paired_svg(os, t1, t2, p.targets);
                    },
                    err)) {
      std::cerr << err << '\n';
      return kExitRunFailure;
    }
    if (!cfg.output.labels.empty() &&
        !write_file(cfg.output.labels,
                    [&](std::ostream& os) { write_labels_csv(os, t1); },
                    err)) {
      std::cerr << err << '\n';
      return kExitRunFailure;
    }
  }
  return kExitOk;
}

int cmd_solve(const CommonFlags& flags) {
  RunConfig cfg;
  int grid_m = 0;
  if (int rc = load_config(flags, cfg, grid_m); rc != kExitOk) return rc;
  if (cfg.problem == ProblemKind::hedonic && !cfg.output.error_curve.empty()) {
    return fail_config(
        {"config: the error curve requires the congestion problem"});
  }
  try {
    if (cfg.problem == ProblemKind::congestion) {
      CongestionProblem p = build_congestion(cfg, grid_m);
      SolveReport rep = run_congestion(cfg, p);
      write_report_csv(std::cout, {rep});
      if (!rep.note.empty()) std::cerr << rep.note << '\n';
      if (int rc = write_congestion_artifacts(cfg, p, rep); rc != kExitOk) {
        return rc;
      }
      return rep.status == SolveStatus::converged ? kExitOk : kExitRunFailure;
    }
    HedonicProblem p = build_hedonic(cfg, grid_m);
    SolveReport rep = run_hedonic(cfg, p);
    write_hedonic_report_csv(std::cout, {rep});
    if (!rep.note.empty()) std::cerr << rep.note << '\n';
    if (int rc = write_hedonic_artifacts(cfg, p, rep); rc != kExitOk) {
      return rc;
    }
    return rep.status == SolveStatus::converged ? kExitOk : kExitRunFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRunFailure;
  }
}

int cmd_check(const CommonFlags& flags) {
  RunConfig cfg;
  int grid_m = 0;
  if (int rc = load_config(flags, cfg, grid_m); rc != kExitOk) return rc;
  try {
    if (cfg.problem == ProblemKind::congestion) {
      CongestionProblem p = build_congestion(cfg, grid_m);
      SolveReport rep = run_congestion(cfg, p);
      if (rep.v.size() != static_cast<std::size_t>(p.size())) {
        std::cerr << "error: no solution to check (status "
                  << to_string(rep.status) << ")\n";
        return kExitRunFailure;
      }
      std::cout << (rep.nested ? "nested" : "not nested") << '\n';
      return rep.status == SolveStatus::converged ? kExitOk : kExitRunFailure;
    }
    HedonicProblem p = build_hedonic(cfg, grid_m);
    SolveReport rep = run_hedonic(cfg, p);
    if (rep.status == SolveStatus::not_nested) {
      std::cout << "not hedonically nested\n";
      return kExitOk;
    }
    if (rep.v.size() != static_cast<std::size_t>(p.size())) {
      std::cerr << "error: no solution to check (status "
                << to_string(rep.status) << ")\n";
      return kExitRunFailure;
    }
    std::cout << (rep.nested ? "hedonically nested" : "not hedonically nested")
              << '\n';
    return rep.status == SolveStatus::converged ? kExitOk : kExitRunFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRunFailure;
  }
}

struct CertifyFlags {
  std::string example = "E2";
  int n = 6;
  int grid = 0;
  double a = 0.0;
  int samples = 256;
  std::string measure = "uniform";
  std::string csv;
  CLI::Option* o_a = nullptr;
};

int cmd_certify(const CertifyFlags& flags) {
  CurveFamily family = CurveFamily::e2_scaled_parabola;
  if (!detail::parse_example_name(flags.example, family) ||
      family == CurveFamily::explicit_points) {
    return fail_config({"certify: --example must be one of E1, E2, E3, E4, "
                        "curve-x^1.5"});
  }
  Measure measure = Measure::uniform;
  if (!detail::parse_measure_name(flags.measure, measure)) {
    return fail_config({"certify: --measure must be uniform or product_xy"});
  }
  if (flags.n < 1) return fail_config({"certify: --n must be >= 1"});
  if (flags.samples < 1) {
    return fail_config({"certify: --samples must be >= 1"});
  }
  int grid_m = flags.grid;
  if (grid_m == 0) {
    try {
      grid_m = default_grid_m();
    } catch (const std::exception& e) {
      return fail_config({e.what()});
    }
  }
  if (grid_m < 8) return fail_config({"certify: --grid must be >= 8"});

  TargetSet targets;
  CostSpec cost;
  if (flags.o_a->count() > 0) {
    // Slope family y^2/A on the bilinear cost, parameters i/n.
    if (family != CurveFamily::e2_scaled_parabola) {
      return fail_config({"certify: --A applies to the E2 family only"});
    }
    if (!(flags.a > 0.0)) {
      return fail_config({"certify: --A must be positive"});
    }
    const double a = flags.a;
    cost = bilinear_cost([a](double y) { return y * y / a; });
    std::vector<double> t(flags.n);
    std::vector<Point> pos(flags.n);
    for (int i = 0; i < flags.n; ++i) {
      t[i] = (i + 1.0) / flags.n;
      pos[i] = {t[i], t[i] * t[i] / a};
    }
    targets = make_targets_explicit(std::move(t), std::move(pos));
  } else {
    targets = make_targets(family, flags.n);
  }
  try {
    DensityField density = build_density(GridSpec{grid_m}, measure);
    NestCertificate cert = certify_nested_apriori(
        density, cost, targets, InternalEnergy::entropy(), flags.samples);
    if (!flags.csv.empty()) {
      std::string err;
      if (!write_file(
              flags.csv,
              [&](std::ostream& os) { write_certificate_csv(os, cert); },
              err)) {
        std::cerr << err << '\n';
        return kExitRunFailure;
      }
    }
    if (cert.granted) {
      std::cout << "guaranteed nested\n";
      if (cert.sampled_caveat) {
        std::cerr << "note: defect bound sampled, not exact\n";
      }
      return kExitOk;
    }
    std::cout << "certificate not granted\n";
    return kExitRunFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRunFailure;
  }
}

struct BenchmarkFlags {
  std::vector<std::string> methods = {"newton", "damped", "nested-bisection",
                                      "nested-newton"};
  std::vector<int> n_list = {3, 6, 12};
  std::string out;
};

int cmd_benchmark(const CommonFlags& flags, const BenchmarkFlags& bench) {
  RunConfig base;
  int grid_m = 0;
  if (int rc = load_config(flags, base, grid_m); rc != kExitOk) return rc;
  std::vector<SolveMethod> methods;
  for (const std::string& name : bench.methods) {
    SolveMethod m = SolveMethod::newton;
    if (!detail::parse_method_name(name, m)) {
      return fail_config({"benchmark: unknown method \"" + name + "\""});
    }
    methods.push_back(m);
  }
  for (int n : bench.n_list) {
    if (n < 1) return fail_config({"benchmark: n values must be >= 1"});
  }
  if (base.example == CurveFamily::explicit_points && bench.n_list.size() > 1) {
    return fail_config(
        {"benchmark: explicit targets fix n, give exactly one n value"});
  }

  std::vector<SolveReport> rows;
  for (SolveMethod method : methods) {
    for (int n : bench.n_list) {
      RunConfig cfg = base;
      cfg.method = method;
      cfg.n = n;
      try {
        if (cfg.problem == ProblemKind::congestion) {
          CongestionProblem p = build_congestion(cfg, grid_m);
          rows.push_back(run_congestion(cfg, p));
        } else {
          HedonicProblem p = build_hedonic(cfg, grid_m);
          rows.push_back(run_hedonic(cfg, p));
        }
      } catch (const std::exception& e) {
        // A failed cell becomes a FAILED row; the matrix keeps going.
        SolveReport rep;
        rep.method = to_string(method);
        rep.status = SolveStatus::diverged;
        rep.note = e.what();
        rep.nu.assign(n, 0.0);
        rows.push_back(std::move(rep));
      }
    }
  }
  auto emit = [&](std::ostream& os) {
    if (base.problem == ProblemKind::hedonic) {
      write_hedonic_report_csv(os, rows);
    } else {
      write_report_csv(os, rows);
    }
  };
  if (!bench.out.empty()) {
    std::string err;
    if (!write_file(bench.out, emit, err)) {
      std::cerr << err << '\n';
      return kExitRunFailure;
    }
  } else {
    emit(std::cout);
  }
  return kExitOk;
}

struct SweepFlags {
  double c_from = 0.0, c_to = 0.0, c_step = 0.05;
  std::string out;
  CLI::Option *o_from = nullptr, *o_to = nullptr;
};

int cmd_sweep(const CommonFlags& flags, const SweepFlags& sweep) {
  RunConfig cfg;
  int grid_m = 0;
  if (int rc = load_config(flags, cfg, grid_m); rc != kExitOk) return rc;
  if (cfg.problem != ProblemKind::congestion) {
    return fail_config({"sweep: requires the congestion problem"});
  }
  auto [lo, hi] = effective_c_interval(cfg);
  if (sweep.o_from->count()) lo = sweep.c_from;
  if (sweep.o_to->count()) hi = sweep.c_to;
  if (!(sweep.c_step > 0.0)) {
    return fail_config({"sweep: --c-step must be positive"});
  }
  if (hi < lo) {
    return fail_config({"sweep: --c-to must not be below --c-from"});
  }
  try {
    CongestionProblem p = build_congestion(cfg, grid_m);
    const auto pts = sweep_error_points(p, lo, hi, sweep.c_step);
    auto emit = [&](std::ostream& os) { write_error_curve_csv(os, pts); };
    if (!sweep.out.empty()) {
      std::string err;
      if (!write_file(sweep.out, emit, err)) {
        std::cerr << err << '\n';
        return kExitRunFailure;
      }
    } else {
      emit(std::cout);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRunFailure;
  }
}

struct PlotFlags {
  std::string labels;
  std::string out;
  std::string example;
  int n = 0;
  int pixels = 640;
  CLI::Option* o_example = nullptr;
};

int cmd_plot(const PlotFlags& flags) {
  std::ifstream in(flags.labels);
  if (!in) {
    return fail_config({"plot: cannot read " + flags.labels});
  }
  LabelGrid grid;
  try {
    grid = read_labels_csv(in);
  } catch (const std::exception& e) {
    return fail_config({std::string("plot: ") + e.what()});
  }
  std::vector<Point> markers;
  if (flags.o_example->count() > 0) {
    CurveFamily family = CurveFamily::e1_line;
    if (!detail::parse_example_name(flags.example, family) ||
        family == CurveFamily::explicit_points) {
      return fail_config({"plot: --example must be one of E1, E2, E3, E4, "
                          "curve-x^1.5"});
    }
    if (flags.n < 1) {
      return fail_config({"plot: --example needs --n for the markers"});
    }
    markers = make_targets(family, flags.n).pos;
  }
  if (flags.pixels < 16) {
    return fail_config({"plot: --pixels must be >= 16"});
  }
  std::string err;
  if (!write_file(flags.out,
                  [&](std::ostream& os) {
                    write_tessellation_svg(os, grid.m, grid.label, markers,
                                           flags.pixels);
                  },
                  err)) {
    std::cerr << err << '\n';
    return kExitRunFailure;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-discrete transport solver for 1-D discrete targets"};
  app.require_subcommand(1);

  CLI::App* solve = app.add_subcommand("solve", "run one solver configuration");
  CommonFlags solve_flags;
  solve_flags.attach(solve);

  CLI::App* check =
      app.add_subcommand("check", "solve, then report the nestedness verdict");
  CommonFlags check_flags;
  check_flags.attach(check);

  CLI::App* certify = app.add_subcommand(
      "certify", "a-priori nestedness certificate, no solve needed");
  CertifyFlags certify_flags;
  certify->add_option("--example", certify_flags.example,
                      "curve family (default E2)");
  certify->add_option("--n", certify_flags.n, "number of targets");
  certify->add_option("--grid", certify_flags.grid, "grid resolution M");
  certify_flags.o_a = certify->add_option(
      "--A", certify_flags.a, "slope denominator for the y^2/A family");
  certify->add_option("--samples", certify_flags.samples,
                      "quantile samples for the defect sup");
  certify->add_option("--measure", certify_flags.measure,
                      "source measure: uniform or product_xy");
  certify->add_option("--csv", certify_flags.csv,
                      "certificate CSV output path");

  CLI::App* benchmark = app.add_subcommand(
      "benchmark", "run a methods-by-n matrix into one CSV table");
  CommonFlags benchmark_flags;
  benchmark_flags.attach(benchmark);
  BenchmarkFlags bench_flags;
  benchmark->add_option("--methods", bench_flags.methods,
                        "methods to run (default all four)")
      ->delimiter(',');
  benchmark->add_option("--n-list", bench_flags.n_list,
                        "target counts (default 3,6,12)")
      ->delimiter(',');
  benchmark->add_option("--out", bench_flags.out,
                        "table output path (default stdout)");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "sample the sequential error over a level grid");
  CommonFlags sweep_common;
  sweep_common.attach(sweep);
  SweepFlags sweep_flags;
  sweep_flags.o_from =
      sweep->add_option("--c-from", sweep_flags.c_from, "first level");
  sweep_flags.o_to = sweep->add_option("--c-to", sweep_flags.c_to, "last level");
  sweep->add_option("--c-step", sweep_flags.c_step, "level spacing");
  sweep->add_option("--out", sweep_flags.out,
                    "curve output path (default stdout)");

  CLI::App* plot =
      app.add_subcommand("plot", "render a label CSV as a tessellation SVG");
  PlotFlags plot_flags;
  plot->add_option("--labels", plot_flags.labels, "label CSV input path")
      ->required();
  plot->add_option("--out", plot_flags.out, "SVG output path")->required();
  plot_flags.o_example = plot->add_option(
      "--example", plot_flags.example, "curve family for target markers");
  plot->add_option("--n", plot_flags.n, "targets for the marker overlay");
  plot->add_option("--pixels", plot_flags.pixels, "rendered size per panel");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  if (app.got_subcommand(solve)) return cmd_solve(solve_flags);
  if (app.got_subcommand(check)) return cmd_check(check_flags);
  if (app.got_subcommand(certify)) return cmd_certify(certify_flags);
  if (app.got_subcommand(benchmark)) {
    return cmd_benchmark(benchmark_flags, bench_flags);
  }
  if (app.got_subcommand(sweep)) return cmd_sweep(sweep_common, sweep_flags);
  if (app.got_subcommand(plot)) return cmd_plot(plot_flags);
  return kExitConfigError;
}
