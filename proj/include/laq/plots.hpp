#pragma once

#include <string>
#include <vector>

#include "laq/experiments.hpp"

namespace laq {

struct SweepSpec {
  std::string experiment;
  std::string method;
  std::string metric;   // per-seed rows; the line is their mean, the band min..max
  std::string x_param;  // name in the "name=value" param column
  std::string title;
};

/// Grid heatmap of the "value" rows of (experiment, method) with one arrow per
/// non-goal cell pointing along the greedy move. Cells come from params of the
/// form "cell=x<X>y<Y>".
std::string heatmap_svg(const ResultTable& table, const std::string& experiment, const std::string& method,
                        double gamma = 0.95);

/// Line chart of a metric against a swept parameter, with a min-max band over
/// seeds. An empty table gives bare axes; a non-empty table without the
/// metric throws std::invalid_argument.
std::string sweep_svg(const ResultTable& table, const SweepSpec& spec);

/// Writes every chart the table supports into out_dir and returns the paths.
std::vector<std::string> render_plots(const ResultTable& table, const std::string& out_dir, double gamma = 0.95);

}  // namespace laq
