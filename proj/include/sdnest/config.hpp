#pragma once

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sdnest/grid.hpp"
#include "sdnest/targets.hpp"

namespace sdnest {

enum class ProblemKind { congestion, hedonic };

inline const char* to_string(ProblemKind p) {
  return p == ProblemKind::congestion ? "congestion" : "hedonic";
}

enum class SolveMethod { newton, damped, nested_bisection, nested_newton };

inline const char* to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::newton: return "newton";
    case SolveMethod::damped: return "damped";
    case SolveMethod::nested_bisection: return "nested-bisection";
    case SolveMethod::nested_newton: return "nested-newton";
  }
  return "?";
}

struct OutputPaths {
  std::string report;       // solver report CSV
  std::string svg;          // tessellation drawing
  std::string labels;       // per-cell label CSV
  std::string error_curve;  // error-versus-level CSV
};

// One solver run as described by a JSON config file or equivalent flags.
// Zero-valued numeric fields mean "not set"; the effective_* helpers below
// resolve them to problem- and method-dependent defaults.
struct RunConfig {
  ProblemKind problem = ProblemKind::congestion;
  CurveFamily example = CurveFamily::e1_line;
  int n = 3;
  Measure measure = Measure::uniform;
  Measure measure2 = Measure::product_xy;
  SolveMethod method = SolveMethod::nested_bisection;
  int grid_m = 0;
  double tol = 0.0;
  int maxit = 0;
  bool has_c0 = false;
  double c0 = 0.0;
  bool has_c_interval = false;
  double c_lo = 0.0;
  double c_hi = 0.0;
  std::vector<double> target_t;
  std::vector<Point> target_pos;
  OutputPaths output;
};

// Grid resolution when the config does not pin one: the SDNEST_GRID_M
// environment variable, else 512.
inline int default_grid_m() {
  const char* env = std::getenv("SDNEST_GRID_M");
  if (env == nullptr || *env == '\0') return 512;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 8 || v > 32768) {
    throw std::runtime_error(
        "SDNEST_GRID_M must be an integer between 8 and 32768");
  }
  return static_cast<int>(v);
}

inline int effective_grid_m(const RunConfig& cfg) {
  return cfg.grid_m > 0 ? cfg.grid_m : default_grid_m();
}

inline double effective_tol(const RunConfig& cfg) {
  if (cfg.tol > 0.0) return cfg.tol;
  return cfg.problem == ProblemKind::hedonic ? 1e-7 : 1e-5;
}

inline int effective_maxit(const RunConfig& cfg) {
  if (cfg.maxit > 0) return cfg.maxit;
  if (cfg.problem == ProblemKind::hedonic) {
    switch (cfg.method) {
      case SolveMethod::newton:
      case SolveMethod::damped:
        return 30;
      default:
        return 200;  // per-stage root-find budget
    }
  }
  switch (cfg.method) {
    case SolveMethod::newton: return 20;
    case SolveMethod::damped: return 40;
    case SolveMethod::nested_bisection: return 60;
    case SolveMethod::nested_newton: return 30;
  }
  return 20;
}

inline double effective_c0(const RunConfig& cfg) {
  if (cfg.has_c0) return cfg.c0;
  return cfg.n >= 192 ? -7.5 : -5.0;
}

inline std::pair<double, double> effective_c_interval(const RunConfig& cfg) {
  if (cfg.has_c_interval) return {cfg.c_lo, cfg.c_hi};
  return {cfg.n >= 192 ? -7.5 : -5.0, 0.0};
}

inline TargetSet config_targets(const RunConfig& cfg) {
  if (cfg.example == CurveFamily::explicit_points) {
    return make_targets_explicit(cfg.target_t, cfg.target_pos);
  }
  return make_targets(cfg.example, cfg.n);
}

struct ConfigParse {
  RunConfig config;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

namespace detail {

inline bool parse_problem_name(const std::string& s, ProblemKind& out) {
  if (s == "congestion") out = ProblemKind::congestion;
  else if (s == "hedonic") out = ProblemKind::hedonic;
  else return false;
  return true;
}

inline bool parse_method_name(const std::string& s, SolveMethod& out) {
  if (s == "newton") out = SolveMethod::newton;
  else if (s == "damped") out = SolveMethod::damped;
  else if (s == "nested-bisection") out = SolveMethod::nested_bisection;
  else if (s == "nested-newton") out = SolveMethod::nested_newton;
  else return false;
  return true;
}

inline bool parse_measure_name(const std::string& s, Measure& out) {
  if (s == "uniform") out = Measure::uniform;
  else if (s == "product_xy") out = Measure::product_xy;
  else return false;
  return true;
}

inline bool parse_example_name(const std::string& s, CurveFamily& out) {
  for (CurveFamily f :
       {CurveFamily::e1_line, CurveFamily::e2_scaled_parabola,
        CurveFamily::e3_quarter_circle, CurveFamily::e4_parabola,
        CurveFamily::curve_pow15, CurveFamily::explicit_points}) {
    if (s == curve_family_name(f)) {
      out = f;
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Validates a parsed JSON document against the run-config schema. All
// problems are collected into human-readable diagnostics instead of
// stopping at the first one.
inline ConfigParse parse_run_config(const nlohmann::json& j) {
  ConfigParse out;
  std::vector<std::string>& errs = out.errors;
  RunConfig& cfg = out.config;
  if (!j.is_object()) {
    errs.push_back("config: top level must be a JSON object");
    return out;
  }
  static const char* const kKeys[] = {"problem", "example", "n",
                                      "measure", "measure2", "method",
                                      "grid",    "tol",      "maxit",
                                      "c0",      "c_interval", "targets",
                                      "output"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* k) {
          return it.key() == k;
        }) == std::end(kKeys)) {
      errs.push_back("config: unknown key \"" + it.key() + "\"");
    }
  }

  auto string_field = [&](const char* key, auto parse, auto& dst,
                          const char* allowed) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_string()) {
      errs.push_back(std::string("config: ") + key + " must be a string");
      return;
    }
    if (!parse(j.at(key).template get<std::string>(), dst)) {
      errs.push_back(std::string("config: ") + key + " must be one of " +
                     allowed);
    }
  };
  string_field("problem", detail::parse_problem_name, cfg.problem,
               "congestion, hedonic");
  string_field("example", detail::parse_example_name, cfg.example,
               "E1, E2, E3, E4, curve-x^1.5, explicit");
  string_field("measure", detail::parse_measure_name, cfg.measure,
               "uniform, product_xy");
  string_field("measure2", detail::parse_measure_name, cfg.measure2,
               "uniform, product_xy");
  string_field("method", detail::parse_method_name, cfg.method,
               "newton, damped, nested-bisection, nested-newton");

  auto int_field = [&](const char* key, int& dst, int lo, const char* why) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number_integer() || j.at(key).template get<long>() < lo) {
      errs.push_back(std::string("config: ") + key + " must be " + why);
      return;
    }
    dst = j.at(key).template get<int>();
  };
  bool n_given = j.contains("n");
  int_field("n", cfg.n, 1, "an integer >= 1");
  int_field("grid", cfg.grid_m, 8, "an integer >= 8");
  int_field("maxit", cfg.maxit, 1, "an integer >= 1");

  if (j.contains("tol")) {
    if (!j.at("tol").is_number() || !(j.at("tol").get<double>() > 0.0)) {
      errs.push_back("config: tol must be a positive number");
    } else {
      cfg.tol = j.at("tol").get<double>();
    }
  }
  if (j.contains("c0")) {
    if (!j.at("c0").is_number()) {
      errs.push_back("config: c0 must be a number");
    } else {
      cfg.has_c0 = true;
      cfg.c0 = j.at("c0").get<double>();
    }
  }
  if (j.contains("c_interval")) {
    const nlohmann::json& ci = j.at("c_interval");
    if (!ci.is_array() || ci.size() != 2 || !ci[0].is_number() ||
        !ci[1].is_number() ||
        !(ci[0].get<double>() < ci[1].get<double>())) {
      errs.push_back(
          "config: c_interval must be an array [lo, hi] with lo < hi");
    } else {
      cfg.has_c_interval = true;
      cfg.c_lo = ci[0].get<double>();
      cfg.c_hi = ci[1].get<double>();
    }
  }

  if (j.contains("targets")) {
    if (cfg.example != CurveFamily::explicit_points) {
      errs.push_back("config: targets requires example \"explicit\"");
    }
    const nlohmann::json& arr = j.at("targets");
    if (!arr.is_array() || arr.empty()) {
      errs.push_back("config: targets must be a nonempty array");
    } else {
      bool rows_ok = true;
      for (const nlohmann::json& row : arr) {
        if (!row.is_object() || !row.contains("t") || !row.contains("x") ||
            !row.contains("y") || !row["t"].is_number() ||
            !row["x"].is_number() || !row["y"].is_number()) {
          rows_ok = false;
          break;
        }
        cfg.target_t.push_back(row["t"].get<double>());
        cfg.target_pos.push_back(
            Point{row["x"].get<double>(), row["y"].get<double>()});
      }
      if (!rows_ok) {
        errs.push_back(
            "config: each target needs numeric fields t, x and y");
      } else {
        for (std::size_t i = 1; i < cfg.target_t.size(); ++i) {
          if (!(cfg.target_t[i] > cfg.target_t[i - 1])) {
            errs.push_back(
                "config: target parameters t must be strictly increasing");
            break;
          }
        }
      }
    }
  }
  if (cfg.example == CurveFamily::explicit_points) {
    if (cfg.target_t.empty()) {
      if (!j.contains("targets")) {
        errs.push_back("config: example \"explicit\" needs a targets array");
      }
    } else if (n_given &&
               cfg.n != static_cast<int>(cfg.target_t.size())) {
      errs.push_back("config: n disagrees with the number of targets");
    } else {
      cfg.n = static_cast<int>(cfg.target_t.size());
    }
  }

  if (j.contains("output")) {
    const nlohmann::json& o = j.at("output");
    if (!o.is_object()) {
      errs.push_back("config: output must be an object");
    } else {
      static const char* const kOutKeys[] = {"report", "svg", "labels",
                                             "error_curve"};
      for (auto it = o.begin(); it != o.end(); ++it) {
        if (std::find_if(std::begin(kOutKeys), std::end(kOutKeys),
                         [&](const char* k) { return it.key() == k; }) ==
            std::end(kOutKeys)) {
          errs.push_back("config: unknown output key \"" + it.key() + "\"");
        } else if (!it->is_string()) {
          errs.push_back("config: output." + it.key() + " must be a string");
        }
      }
      auto path = [&](const char* key, std::string& dst) {
        if (o.contains(key) && o.at(key).is_string()) {
          dst = o.at(key).template get<std::string>();
        }
      };
      path("report", cfg.output.report);
      path("svg", cfg.output.svg);
      path("labels", cfg.output.labels);
      path("error_curve", cfg.output.error_curve);
    }
  }
  return out;
}

inline ConfigParse parse_run_config_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    ConfigParse out;
    out.errors.push_back("config: not valid JSON");
    return out;
  }
  return parse_run_config(j);
}

// Overlays flag-provided values onto a config file document. Output paths
// merge key by key; every other key is replaced wholesale.
inline nlohmann::json merge_config(nlohmann::json base,
                                   const nlohmann::json& overrides) {
  if (!base.is_object()) base = nlohmann::json::object();
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    if (it.key() == "output" && it->is_object() && base.contains("output") &&
        base["output"].is_object()) {
      for (auto jt = it->begin(); jt != it->end(); ++jt) {
        base["output"][jt.key()] = jt.value();
      }
    } else {
      base[it.key()] = it.value();
    }
  }
  return base;
}

}  // namespace sdnest
