#pragma once

// Heatmap rendering of spectrum grids.
//
// Layout: one cell x cell pixel block per grid entry. Columns run over the
// frequencies in ascending order (linear frequency w/2pi from left to right),
// rows over the quantile levels with the highest level at the top. The image
// is F*cell pixels wide and L*cell pixels high.
//
// Colour: values are mapped linearly from [min, max] of the grid onto t in
// [0, 1] (t = 0 everywhere for a constant grid) and t is looked up in a fixed
// nine-stop viridis ramp with linear interpolation between stops:
//   #440154 #472D7B #3B528B #2C728E #21918C #28AE80 #5EC962 #ADDC30 #FDE725

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qcspec/estimators.hpp"

namespace qcspec {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  ///< row-major RGB, top row first

  std::array<std::uint8_t, 3> at(int x, int y) const;
};

/// Colour of t in [0, 1] (clamped) on the ramp above.
std::array<std::uint8_t, 3> viridis(double t);

RgbImage render_heatmap(const SpectrumGrid& grid, int cell = 4);

/// 8-bit RGB PNG without timestamps or text chunks, so output bytes depend
/// only on the pixels.
void write_png(const std::string& path, const RgbImage& image);
RgbImage read_png(const std::string& path);

}  // namespace qcspec
