// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_SVG_HPP
#define DIRREG_SVG_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "dirreg/errors.hpp"

namespace dirreg {

// One proportion panel: grey per-unit observation traces, black sample-mean
// line, estimated expected-value line, and dashed point-wise interval bounds
// across the component axis.
struct FigurePanel {
  std::string title;
  std::vector<std::string> component_names;
  Eigen::MatrixXd observations;  // units x C (may have zero rows)
  Eigen::VectorXd estimate;      // expected-value mean per component
  Eigen::VectorXd lower, upper;  // point-wise interval bounds
  double interval_level = 0.95;
};

namespace svg_detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Mapper {
  double width = 540.0, height = 400.0;
  double left = 58.0, right = 20.0, top = 42.0, bottom = 64.0;
  int C = 0;
  double y_max = 0.6;

  double x(double component_pos) const {  // 1-based component position
    const double span = width - left - right;
    const double lo = 0.6, hi = C + 0.4;
    return left + (component_pos - lo) / (hi - lo) * span;
  }
  double y(double proportion) const {
    const double span = height - top - bottom;
    return top + (1.0 - proportion / y_max) * span;
  }
};

inline void polyline(std::string& out, const Mapper& map, const Eigen::VectorXd& vals,
                     const std::string& style) {
  out += "  <polyline fill=\"none\" " + style + " points=\"";
  for (Eigen::Index c = 0; c < vals.size(); ++c) {
    if (c) out += ' ';
    out += num(map.x(static_cast<double>(c + 1))) + "," + num(map.y(vals[c]));
  }
  out += "\"/>\n";
}

inline void points(std::string& out, const Mapper& map, const Eigen::VectorXd& vals,
                   const std::string& fill, double r) {
  for (Eigen::Index c = 0; c < vals.size(); ++c)
    out += "  <circle cx=\"" + num(map.x(static_cast<double>(c + 1))) + "\" cy=\"" +
           num(map.y(vals[c])) + "\" r=\"" + num(r) + "\" fill=\"" + fill + "\"/>\n";
}

inline void crosses(std::string& out, const Mapper& map, const Eigen::VectorXd& vals,
                    const std::string& stroke) {
  const double a = 3.2;
  for (Eigen::Index c = 0; c < vals.size(); ++c) {
    const double cx = map.x(static_cast<double>(c + 1));
    const double cy = map.y(vals[c]);
    out += "  <path stroke=\"" + stroke + "\" stroke-width=\"1.4\" d=\"M" + num(cx - a) + " " +
           num(cy - a) + " L" + num(cx + a) + " " + num(cy + a) + " M" + num(cx - a) + " " +
           num(cy + a) + " L" + num(cx + a) + " " + num(cy - a) + "\"/>\n";
  }
}

}  // namespace svg_detail

inline std::string render_figure_svg(const FigurePanel& panel) {
  using namespace svg_detail;
  const int C = static_cast<int>(panel.component_names.size());
  require(C >= 2, "DimensionError", "panel needs at least 2 components");
  require(panel.estimate.size() == C && panel.lower.size() == C && panel.upper.size() == C,
          "DimensionMismatch", "panel vectors must have one entry per component");

  Mapper map;
  map.C = C;
  double v_max = std::max(panel.upper.maxCoeff(), panel.estimate.maxCoeff());
  if (panel.observations.rows() > 0) v_max = std::max(v_max, panel.observations.maxCoeff());
  map.y_max = std::max(0.6, std::ceil((v_max + 0.05) * 10.0) / 10.0);

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(map.width) +
         "\" height=\"" + num(map.height) + "\" viewBox=\"0 0 " + num(map.width) + " " +
         num(map.height) + "\">\n";
  out += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "  <text x=\"" + num(map.width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" + panel.title + "</text>\n";

  // horizontal grid every 0.1
  for (double g = 0.0; g <= map.y_max + 1e-9; g += 0.1) {
    out += "  <line x1=\"" + num(map.left) + "\" y1=\"" + num(map.y(g)) + "\" x2=\"" +
           num(map.width - map.right) + "\" y2=\"" + num(map.y(g)) +
           "\" stroke=\"#cccccc\" stroke-dasharray=\"2,3\" stroke-width=\"0.8\"/>\n";
    char label[16];
    std::snprintf(label, sizeof(label), "%.1f", g);
    out += "  <text x=\"" + num(map.left - 8) + "\" y=\"" + num(map.y(g) + 3.5) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + label +
           "</text>\n";
  }
  out += "  <text transform=\"translate(16," + num(map.height / 2) +
         ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">Proportion</text>\n";

  // component axis
  for (int c = 0; c < C; ++c)
    out += "  <text x=\"" + num(map.x(c + 1)) + "\" y=\"" + num(map.height - map.bottom + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           panel.component_names[c] + "</text>\n";

  // observation traces: one grey polyline + points per observation unit
  for (Eigen::Index i = 0; i < panel.observations.rows(); ++i) {
    const Eigen::VectorXd row = panel.observations.row(i).transpose();
    polyline(out, map, row, "stroke=\"#b0b0b0\" stroke-width=\"0.8\"");
    points(out, map, row, "#b0b0b0", 2.2);
  }

  if (panel.observations.rows() > 0) {
    const Eigen::VectorXd sample_mean = panel.observations.colwise().mean().transpose();
    polyline(out, map, sample_mean, "stroke=\"black\" stroke-width=\"2\"");
    points(out, map, sample_mean, "black", 3.2);
  }

  polyline(out, map, panel.lower,
           "stroke=\"#c22\" stroke-width=\"1.2\" stroke-dasharray=\"5,4\"");
  crosses(out, map, panel.lower, "#222222");
  polyline(out, map, panel.upper,
           "stroke=\"#c22\" stroke-width=\"1.2\" stroke-dasharray=\"5,4\"");
  crosses(out, map, panel.upper, "#222222");
  polyline(out, map, panel.estimate, "stroke=\"#c22\" stroke-width=\"2\"");
  points(out, map, panel.estimate, "#c22", 3.0);

  out += "</svg>\n";
  return out;
}

}  // namespace dirreg

#endif  // DIRREG_SVG_HPP
