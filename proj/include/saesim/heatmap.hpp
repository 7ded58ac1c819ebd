#pragma once

// SVG rendering of layer-pair sweeps.

#include <array>
#include <span>
#include <string>

#include "saesim/io.hpp"

namespace saesim {

/// Fixed 8-stop viridis ramp, low to high.
inline constexpr std::array<const char*, 8> kViridis = {
    "#440154", "#46327e", "#365c8d", "#277f8e", "#1fa187", "#4ac16d", "#a0da39", "#fde725",
};

/// Color for `v` in [0, 1] (clamped), linearly interpolated between stops.
std::string ramp_color(double v);

/// One panel per metric: rows are layer_a, columns layer_b, cells colored by
/// paired score and labelled with the score and p-value (2 decimals). Rows
/// with a status are drawn grey.
std::string render_heatmap_svg(std::span<const io::SweepRow> rows);

}  // namespace saesim
