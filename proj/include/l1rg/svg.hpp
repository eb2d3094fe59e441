#pragma once

// Self-contained SVG line plots.

#include <string>
#include <utility>
#include <vector>

#include "l1rg/simkit.hpp"

namespace l1rg {

struct Series {
    std::string label;
    std::vector<double> t;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool dashed = false;
};

struct Panel {
    std::string title;
    std::string ylabel;
    std::vector<Series> series;
    std::vector<double> hlines;  ///< constraint or bound lines
};

std::string render_svg(const std::string& title, const std::vector<Panel>& panels, int width = 900,
                       int panel_height = 220);

/// tracking, constrained, uncertainty, adaptive and state_error figures as (file name, svg).
std::vector<std::pair<std::string, std::string>> standard_figures(const L1RGController& ctrl, const SimTrace& l1rg,
                                                                  const SimTrace& plain);

}  // namespace l1rg
