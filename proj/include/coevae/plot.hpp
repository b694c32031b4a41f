#pragma once

#include <string>
#include <vector>

#include "coevae/summary.hpp"

namespace coevae {

struct PlotSeries {
  std::string name;
  std::vector<EpochStats> stats;
};

// Standalone SVG: median line per series with a shaded interquartile band.
std::string render_loss_svg(const std::string& title, const std::vector<PlotSeries>& series);

}  // namespace coevae
