#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "util.hpp"

namespace plmm {

namespace {

constexpr double kWidth = 800, kHeight = 600;
constexpr double kLeft = 70, kRight = 20, kTop = 20, kBottom = 50;

struct Scale {
  double lo, hi;
  double px0, px1;
  double at(double v) const {
    double range = hi - lo;
    if (range <= 0) return 0.5 * (px0 + px1);
    return px0 + (v - lo) / range * (px1 - px0);
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string header() {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" "
         "width=\"800\" height=\"600\">\n"
         "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
}

std::string axes(const Scale &x, const Scale &y, const std::string &xlabel,
                 const std::string &ylabel) {
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom);
  s += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                kLeft, kTop, kLeft, kHeight - kBottom);
  s += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"14\" "
                "text-anchor=\"middle\">%s</text>\n",
                (kLeft + kWidth - kRight) / 2, kHeight - 12, xlabel.c_str());
  s += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"16\" y=\"%.1f\" font-size=\"14\" "
                "text-anchor=\"middle\" transform=\"rotate(-90 16 %.1f)\">"
                "%s</text>\n",
                (kTop + kHeight - kBottom) / 2, (kTop + kHeight - kBottom) / 2,
                ylabel.c_str());
  s += buf;
  // Endpoint tick labels.
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" "
                "text-anchor=\"middle\">%s</text>\n",
                x.px0, kHeight - kBottom + 18, num(x.lo).c_str());
  s += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" "
                "text-anchor=\"middle\">%s</text>\n",
                x.px1, kHeight - kBottom + 18, num(x.hi).c_str());
  s += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" "
                "text-anchor=\"end\">%s</text>\n",
                kLeft - 6, kHeight - kBottom + 4, num(y.lo).c_str());
  s += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" "
                "text-anchor=\"end\">%s</text>\n",
                kLeft - 6, kTop + 4, num(y.hi).c_str());
  s += buf;
  return s;
}

std::string color(std::int64_t i) {
  static const char *palette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                  "#66a61e", "#e6ab02", "#a6761d", "#666666"};
  return palette[i % 8];
}

}  // namespace

std::string plot_paths_svg(const FitPath &fit) {
  std::int64_t L = fit.n_lambda();
  std::vector<double> xs(static_cast<size_t>(L));
  for (std::int64_t k = 0; k < L; ++k)
    xs[static_cast<size_t>(k)] = std::log(fit.lambda[static_cast<size_t>(k)]);

  // Dense per-feature series for features ever nonzero.
  std::map<std::int64_t, std::vector<double>> series;
  for (std::int64_t k = 0; k < L; ++k)
    for (const auto &[j, v] : fit.beta[static_cast<size_t>(k)])
      if (!series.count(j))
        series[j] = std::vector<double>(static_cast<size_t>(L), 0.0);
  for (std::int64_t k = 0; k < L; ++k)
    for (const auto &[j, v] : fit.beta[static_cast<size_t>(k)])
      series[j][static_cast<size_t>(k)] = v;

  double ylo = 0, yhi = 0;
  for (const auto &[j, vals] : series)
    for (double v : vals) {
      ylo = std::min(ylo, v);
      yhi = std::max(yhi, v);
    }
  if (yhi == ylo) yhi = ylo + 1;
  Scale sx{xs.back(), xs.front(), kLeft, kWidth - kRight};
  if (L == 1) sx = {xs[0] - 1, xs[0] + 1, kLeft, kWidth - kRight};
  Scale sy{ylo, yhi, kHeight - kBottom, kTop};

  std::string svg = header();
  svg += axes(sx, sy, "log(lambda)", "coefficient");
  char buf[64];
  std::int64_t ci = 0;
  for (const auto &[j, vals] : series) {
    std::string pts;
    for (std::int64_t k = 0; k < L; ++k) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ",
                    sx.at(xs[static_cast<size_t>(k)]),
                    sy.at(vals[static_cast<size_t>(k)]));
      pts += buf;
    }
    svg += "<polyline fill=\"none\" stroke=\"" + color(ci++) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string plot_cve_svg(const CVResult &cv) {
  std::int64_t L = static_cast<std::int64_t>(cv.lambda.size());
  std::vector<double> xs(static_cast<size_t>(L));
  for (std::int64_t k = 0; k < L; ++k)
    xs[static_cast<size_t>(k)] = std::log(cv.lambda[static_cast<size_t>(k)]);
  double ylo = cv.cve[0], yhi = cv.cve[0];
  for (std::int64_t k = 0; k < L; ++k) {
    ylo = std::min(ylo, cv.cve[static_cast<size_t>(k)] -
                            cv.cvse[static_cast<size_t>(k)]);
    yhi = std::max(yhi, cv.cve[static_cast<size_t>(k)] +
                            cv.cvse[static_cast<size_t>(k)]);
  }
  if (yhi == ylo) yhi = ylo + 1;
  Scale sx{xs.back(), xs.front(), kLeft, kWidth - kRight};
  if (L == 1) sx = {xs[0] - 1, xs[0] + 1, kLeft, kWidth - kRight};
  Scale sy{ylo, yhi, kHeight - kBottom, kTop};

  std::string svg = header();
  svg += axes(sx, sy, "log(lambda)", "cross-validation error");
  char buf[256];
  // lambda_min marker first so the curve draws over it.
  double xm = sx.at(xs[static_cast<size_t>(cv.lambda_min_index)]);
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.2f\" y1=\"%.1f\" x2=\"%.2f\" y2=\"%.1f\" "
                "stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n",
                xm, kTop, xm, kHeight - kBottom);
  svg += buf;
  for (std::int64_t k = 0; k < L; ++k) {
    double x = sx.at(xs[static_cast<size_t>(k)]);
    double y0 = sy.at(cv.cve[static_cast<size_t>(k)] -
                      cv.cvse[static_cast<size_t>(k)]);
    double y1 = sy.at(cv.cve[static_cast<size_t>(k)] +
                      cv.cvse[static_cast<size_t>(k)]);
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                  "stroke=\"#bbbbbb\"/>\n",
                  x, y0, x, y1);
    svg += buf;
  }
  std::string pts;
  for (std::int64_t k = 0; k < L; ++k) {
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ",
                  sx.at(xs[static_cast<size_t>(k)]),
                  sy.at(cv.cve[static_cast<size_t>(k)]));
    pts += buf;
  }
  svg += "<polyline fill=\"none\" stroke=\"#d95f02\" stroke-width=\"2\" "
         "points=\"" + pts + "\"/>\n";
  for (std::int64_t k = 0; k < L; ++k) {
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" "
                  "fill=\"#d95f02\"/>\n",
                  sx.at(xs[static_cast<size_t>(k)]),
                  sy.at(cv.cve[static_cast<size_t>(k)]));
    svg += buf;
  }
  svg += "</svg>\n";
  return svg;
}

void write_file(const std::string &path, const std::string &content) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail_data("cannot write " + path);
  f << content;
}

}  // namespace plmm
