#include "laq/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "laq/gridworld.hpp"

namespace laq {

namespace {

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string tick_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

bool parse_cell(const std::string& p, int& x, int& y) {
  return std::sscanf(p.c_str(), "cell=x%dy%d", &x, &y) == 2;
}

// White to dark blue.
std::string color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(247 - t * (247 - 8)));
  const int g = static_cast<int>(std::lround(251 - t * (251 - 48)));
  const int b = static_cast<int>(std::lround(255 - t * (255 - 107)));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string heatmap_svg(const ResultTable& table, const std::string& experiment, const std::string& method,
                        double gamma) {
  std::map<std::pair<int, int>, double> cells;
  int w = 0;
  int h = 0;
  for (const auto* r : table.select(experiment, "value")) {
    int x = 0;
    int y = 0;
    if (r->method != method || !parse_cell(r->param, x, y)) continue;
    cells[{x, y}] = r->value;
    w = std::max(w, x + 1);
    h = std::max(h, y + 1);
  }
  if (cells.empty()) throw std::invalid_argument("no value rows for " + experiment + "/" + method);

  GridWorldEnv env;
  env.width = std::max(w, 2);
  env.height = std::max(h, 2);
  ValueTable v(static_cast<std::size_t>(env.num_cells()));
  for (const auto& [xy, value] : cells) v[static_cast<std::size_t>(env.cell_index({xy.first, xy.second}))] = value;
  const auto greedy = greedy_actions(grid_to_mdp(env, gamma), v);
  const auto [lo_it, hi_it] = std::minmax_element(v.values.begin(), v.values.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo > 0.0 ? *hi_it - lo : 1.0;

  const int size = 60;
  const int margin = 30;
  const int width = env.width * size + 2 * margin;
  const int height = env.height * size + 2 * margin;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                    std::to_string(height) + "\">\n";
  svg += "<text x=\"" + std::to_string(margin) + "\" y=\"20\" font-size=\"14\">" + escape(experiment + ": " + method) +
         "</text>\n";
  for (int cell = 0; cell < env.num_cells(); ++cell) {
    const Cell c = env.cell_at(cell);
    const int px = margin + c.x * size;
    const int py = margin + c.y * size;
    const double value = v[static_cast<std::size_t>(cell)];
    svg += "<rect class=\"cell\" x=\"" + std::to_string(px) + "\" y=\"" + std::to_string(py) + "\" width=\"" +
           std::to_string(size) + "\" height=\"" + std::to_string(size) + "\" fill=\"" + color((value - lo) / span) +
           "\" stroke=\"#999\"/>\n";
    svg += "<text x=\"" + std::to_string(px + 4) + "\" y=\"" + std::to_string(py + 14) +
           "\" font-size=\"10\" fill=\"#c00\">" + fmt(value) + "</text>\n";
    const int a = greedy[static_cast<std::size_t>(cell)];
    if (a < 0) continue;
    const double cx = px + size / 2.0;
    const double cy = py + size / 2.0 + 6;
    const double len = size * 0.3;
    const double dx = kMoveDx[static_cast<std::size_t>(a)];
    const double dy = kMoveDy[static_cast<std::size_t>(a)];
    const double norm = std::hypot(dx, dy);
    svg += "<line class=\"arrow\" x1=\"" + fmt(cx - len * dx / norm / 2) + "\" y1=\"" + fmt(cy - len * dy / norm / 2) +
           "\" x2=\"" + fmt(cx + len * dx / norm / 2) + "\" y2=\"" + fmt(cy + len * dy / norm / 2) +
           "\" stroke=\"#000\" stroke-width=\"2\" marker-end=\"url(#head)\"/>\n";
  }
  svg += "<defs><marker id=\"head\" markerWidth=\"6\" markerHeight=\"6\" refX=\"3\" refY=\"3\" orient=\"auto\">"
         "<path d=\"M0,0 L6,3 L0,6 z\"/></marker></defs>\n";
  svg += "</svg>\n";
  return svg;
}

std::string sweep_svg(const ResultTable& table, const SweepSpec& spec) {
  std::map<double, std::vector<double>> points;
  for (const auto* r : table.select(spec.experiment, spec.metric)) {
    if (!spec.method.empty() && r->method != spec.method) continue;
    const auto x = param_value(r->param, spec.x_param);
    if (x && std::isfinite(r->value)) points[*x].push_back(r->value);
  }
  if (points.empty() && !table.empty()) {
    throw std::invalid_argument("unknown metric '" + spec.metric + "' for experiment '" + spec.experiment + "'");
  }

  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  if (!points.empty()) {
    x_lo = points.begin()->first;
    x_hi = points.rbegin()->first;
    y_lo = std::numeric_limits<double>::infinity();
    y_hi = -y_lo;
    for (const auto& [x, ys] : points) {
      for (double y : ys) {
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
      }
    }
    if (x_hi == x_lo) {
      x_lo -= 0.5;
      x_hi += 0.5;
    }
    const double pad = y_hi > y_lo ? 0.05 * (y_hi - y_lo) : 0.5;
    y_lo -= pad;
    y_hi += pad;
  }

  const double left = 60, right = 20, top = 40, bottom = 50;
  const double plot_w = 480, plot_h = 300;
  auto sx = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto sy = [&](double y) { return top + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h; };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(left + plot_w + right, 0) +
                    "\" height=\"" + fmt(top + plot_h + bottom, 0) + "\">\n";
  const std::string title = spec.title.empty() ? spec.experiment + ": " + spec.metric : spec.title;
  svg += "<text x=\"" + fmt(left, 0) + "\" y=\"24\" font-size=\"14\">" + escape(title) + "</text>\n";
  svg += "<line class=\"axis\" x1=\"" + fmt(left) + "\" y1=\"" + fmt(top + plot_h) + "\" x2=\"" + fmt(left + plot_w) +
         "\" y2=\"" + fmt(top + plot_h) + "\" stroke=\"#000\"/>\n";
  svg += "<line class=\"axis\" x1=\"" + fmt(left) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(left) + "\" y2=\"" +
         fmt(top + plot_h) + "\" stroke=\"#000\"/>\n";
  svg += "<text x=\"" + fmt(left + plot_w / 2) + "\" y=\"" + fmt(top + plot_h + 40) +
         "\" font-size=\"12\" text-anchor=\"middle\">" + escape(spec.x_param) + "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = y_lo + (y_hi - y_lo) * i / 4.0;
    svg += "<text class=\"ytick\" x=\"" + fmt(left - 6) + "\" y=\"" + fmt(sy(y) + 4) +
           "\" font-size=\"10\" text-anchor=\"end\">" + tick_label(std::round(y * 1000) / 1000) + "</text>\n";
  }
  for (const auto& [x, ys] : points) {
    svg += "<text class=\"xtick\" x=\"" + fmt(sx(x)) + "\" y=\"" + fmt(top + plot_h + 16) +
           "\" font-size=\"10\" text-anchor=\"middle\">" + tick_label(x) + "</text>\n";
  }

  if (!points.empty()) {
    std::string upper;
    std::string lower;
    std::string line;
    for (const auto& [x, ys] : points) {
      const auto [mn, mx] = std::minmax_element(ys.begin(), ys.end());
      double mean = 0.0;
      for (double y : ys) mean += y;
      mean /= static_cast<double>(ys.size());
      upper += fmt(sx(x)) + "," + fmt(sy(*mx)) + " ";
      lower = fmt(sx(x)) + "," + fmt(sy(*mn)) + " " + lower;
      line += fmt(sx(x)) + "," + fmt(sy(mean)) + " ";
    }
    svg += "<polygon class=\"band\" points=\"" + upper + lower + "\" fill=\"#9ecae1\" fill-opacity=\"0.5\"/>\n";
    svg += "<polyline class=\"mean\" points=\"" + line + "\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::string> render_plots(const ResultTable& table, const std::string& out_dir, double gamma) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  auto write = [&](const std::string& name, const std::string& svg) {
    const std::string path = (std::filesystem::path(out_dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << svg;
    written.push_back(path);
  };

  std::set<std::pair<std::string, std::string>> heatmaps;
  std::map<std::tuple<std::string, std::string, std::string>, std::pair<std::string, std::set<double>>> sweeps;
  for (const auto& r : table.rows()) {
    if (r.metric == "value") {
      int x = 0;
      int y = 0;
      if (parse_cell(r.param, x, y)) heatmaps.insert({r.experiment, r.method});
      continue;
    }
    if (r.metric.rfind("mean_", 0) == 0) continue;
    const auto eq = r.param.find('=');
    if (eq == std::string::npos || eq == 0) continue;
    const std::string name = r.param.substr(0, eq);
    const auto x = param_value(r.param, name);
    if (!x) continue;
    auto& entry = sweeps[{r.experiment, r.method, r.metric}];
    entry.first = name;
    entry.second.insert(*x);
  }
  for (const auto& [exp, method] : heatmaps) write(exp + "_" + method + "_heatmap.svg", heatmap_svg(table, exp, method, gamma));
  for (const auto& [key, entry] : sweeps) {
    if (entry.second.size() < 2) continue;
    const auto& [exp, method, metric] = key;
    SweepSpec spec{exp, method, metric, entry.first, exp + " / " + method + ": " + metric};
    write(exp + "_" + method + "_" + metric + ".svg", sweep_svg(table, spec));
  }
  return written;
}

}  // namespace laq
