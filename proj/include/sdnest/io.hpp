#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "sdnest/congestion.hpp"
#include "sdnest/laguerre.hpp"
#include "sdnest/nest_analysis.hpp"
#include "sdnest/targets.hpp"

namespace sdnest {

// Shortest decimal form that parses back to the same double. Keeps CSV
// output locale-free and bit-reproducible for identical inputs.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0.0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// Closed status vocabulary for report tables.
inline const char* report_status_label(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "SUCCESS";
    case SolveStatus::not_nested: return "NOT_NESTED";
    default: return "FAILED";
  }
}

// One row per solver run, in the benchmark-table layout. The damping_steps
// column counts step halvings; zero for methods that never damp.
inline void write_report_csv(std::ostream& os,
                             const std::vector<SolveReport>& reports) {
  os << "method,n,c,time_seconds,iterations,damping_steps,status\n";
  for (const SolveReport& rep : reports) {
    os << rep.method << ',' << rep.nu.size() << ','
       << format_double(rep.c_value) << ',' << format_double(rep.seconds)
       << ',' << rep.iterations << ',' << rep.halvings << ','
       << report_status_label(rep.status) << '\n';
  }
}

// Same layout without the level column, for the pricing problem whose gauge
// pins the level at a fixed constant.
inline void write_hedonic_report_csv(std::ostream& os,
                                     const std::vector<SolveReport>& reports) {
  os << "method,n,time_seconds,iterations,damping_steps,status\n";
  for (const SolveReport& rep : reports) {
    os << rep.method << ',' << rep.nu.size() << ','
       << format_double(rep.seconds) << ',' << rep.iterations << ','
       << rep.halvings << ',' << report_status_label(rep.status) << '\n';
  }
}

struct LabelGrid {
  int m = 0;
  std::vector<std::int32_t> label;
};

// Label per grid cell, row-major, one row per cell. Integers only, so the
// round-trip is exact.
inline void write_labels_csv(std::ostream& os, int m,
                             const std::vector<std::int32_t>& label) {
  if (m < 1 || label.size() != static_cast<std::size_t>(m) * m) {
    throw std::invalid_argument("write_labels_csv: label size mismatch");
  }
  os << "ix,iy,label\n";
  for (int iy = 0; iy < m; ++iy) {
    for (int ix = 0; ix < m; ++ix) {
      os << ix << ',' << iy << ','
         << label[static_cast<std::size_t>(iy) * m + ix] << '\n';
    }
  }
}

inline void write_labels_csv(std::ostream& os, const Tessellation& tess) {
  write_labels_csv(os, tess.grid.m, tess.label);
}

namespace detail {

inline long parse_long(const std::string& s, std::size_t& pos, char stop) {
  const std::size_t end =
      stop == '\0' ? s.size() : std::min(s.find(stop, pos), s.size());
  long value = 0;
  const auto res = std::from_chars(s.data() + pos, s.data() + end, value);
  if (res.ec != std::errc{} || res.ptr != s.data() + end) {
    throw std::runtime_error("labels csv: malformed integer field");
  }
  pos = end + (stop == '\0' ? 0 : 1);
  return value;
}

}  // namespace detail

// Inverse of write_labels_csv. Validates the header, the row-major cell
// order and that the rows fill a square grid.
inline LabelGrid read_labels_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "ix,iy,label") {
    throw std::runtime_error("labels csv: missing ix,iy,label header");
  }
  std::vector<std::int32_t> label;
  std::vector<long> ix, iy;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::size_t pos = 0;
    ix.push_back(detail::parse_long(line, pos, ','));
    iy.push_back(detail::parse_long(line, pos, ','));
    label.push_back(
        static_cast<std::int32_t>(detail::parse_long(line, pos, '\0')));
  }
  const std::size_t count = label.size();
  const int m = static_cast<int>(std::lround(std::sqrt(double(count))));
  if (m < 1 || static_cast<std::size_t>(m) * m != count) {
    throw std::runtime_error("labels csv: rows do not fill a square grid");
  }
  for (std::size_t r = 0; r < count; ++r) {
    if (ix[r] != static_cast<long>(r % m) || iy[r] != static_cast<long>(r / m)) {
      throw std::runtime_error("labels csv: rows out of row-major order");
    }
  }
  return LabelGrid{m, std::move(label)};
}

// Per-pair rows of an a-priori nestedness certificate: the containment
// defect bound against the weight lower bound of the receiving target.
inline void write_certificate_csv(std::ostream& os,
                                  const NestCertificate& cert) {
  os << "index,sup_d_min,lower_bound,margin,verdict\n";
  for (std::size_t i = 0; i < cert.sup_dmin.size(); ++i) {
    os << i << ',' << format_double(cert.sup_dmin[i]) << ','
       << format_double(cert.lower[i + 1]) << ','
       << format_double(cert.margin[i]) << ','
       << (cert.margin[i] > 0.0 ? "certified" : "not-certified") << '\n';
  }
}

struct ErrorCurvePoint {
  double c = 0.0;
  double error = 0.0;
  bool feasible = false;
};

// Error-versus-level samples; levels where the sequential pass aborts are
// labeled instead of carrying a number.
inline void write_error_curve_csv(std::ostream& os,
                                  const std::vector<ErrorCurvePoint>& points) {
  os << "c,error\n";
  for (const ErrorCurvePoint& p : points) {
    os << format_double(p.c) << ',';
    if (p.feasible) {
      os << format_double(p.error);
    } else {
      os << "INFEASIBLE";
    }
    os << '\n';
  }
}

// Fixed fill cycle for cell labels; wraps after 24 entries.
inline const char* cell_color(int label) {
  static const char* const kColors[24] = {
      "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
      "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#a0cbe8", "#ffbe7d",
      "#8cd17d", "#f1ce63", "#499894", "#86bcb6", "#ff9d9a", "#d37295",
      "#fabfd2", "#d4a6c8", "#9d7660", "#d7b5a6", "#1170aa", "#c85200"};
  return kColors[((label % 24) + 24) % 24];
}

namespace detail {

// Rects in grid coordinates, one per run of equal labels within a row. The
// rendering matches one square per cell while keeping files small on fine
// grids; y is flipped so the second coordinate points up.
inline void svg_panel(std::ostream& os, int m,
                      const std::vector<std::int32_t>& label,
                      const std::vector<Point>& targets) {
  for (int iy = 0; iy < m; ++iy) {
    int ix = 0;
    while (ix < m) {
      const std::int32_t lab = label[static_cast<std::size_t>(iy) * m + ix];
      int run = 1;
      while (ix + run < m &&
             label[static_cast<std::size_t>(iy) * m + ix + run] == lab) {
        ++run;
      }
      os << "<rect x=\"" << ix << "\" y=\"" << (m - 1 - iy) << "\" width=\""
         << run << "\" height=\"1\" fill=\"" << cell_color(lab) << "\"/>\n";
      ix += run;
    }
  }
  const double r = m / 80.0;
  for (const Point& t : targets) {
    os << "<circle cx=\"" << format_double(t.x * m) << "\" cy=\""
       << format_double((1.0 - t.y) * m) << "\" r=\"" << format_double(r)
       << "\" fill=\"black\"/>\n";
  }
}

}  // namespace detail

// Single tessellation as SVG 1.1: label-colored cells with target markers.
inline void write_tessellation_svg(std::ostream& os, int m,
                                   const std::vector<std::int32_t>& label,
                                   const std::vector<Point>& targets,
                                   int pixels = 640) {
  if (m < 1 || label.size() != static_cast<std::size_t>(m) * m) {
    throw std::invalid_argument("write_tessellation_svg: label size mismatch");
  }
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
     << pixels << "\" height=\"" << pixels << "\" viewBox=\"0 0 " << m << ' '
     << m << "\" shape-rendering=\"crispEdges\">\n";
  detail::svg_panel(os, m, label, targets);
  os << "</svg>\n";
}

inline void write_tessellation_svg(std::ostream& os, const Tessellation& tess,
                                   const TargetSet& targets,
                                   int pixels = 640) {
  write_tessellation_svg(os, tess.grid.m, tess.label, targets.pos, pixels);
}

// Two tessellations side by side sharing the target overlay, for the two
// sides of a matching problem.
inline void write_paired_svg(std::ostream& os, const Tessellation& left,
                             const Tessellation& right,
                             const TargetSet& targets, int pixels = 640) {
  if (left.grid.m != right.grid.m) {
    throw std::invalid_argument("write_paired_svg: grid size mismatch");
  }
  const int m = left.grid.m;
  const int gap = std::max(1, m / 16);
  const int w = 2 * m + gap;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
     << 2 * pixels << "\" height=\"" << pixels << "\" viewBox=\"0 0 " << w
     << ' ' << m << "\" shape-rendering=\"crispEdges\">\n";
  os << "<g>\n";
  detail::svg_panel(os, m, left.label, targets.pos);
  os << "</g>\n<g transform=\"translate(" << (m + gap) << " 0)\">\n";
  detail::svg_panel(os, m, right.label, targets.pos);
  os << "</g>\n</svg>\n";
}

}  // namespace sdnest
