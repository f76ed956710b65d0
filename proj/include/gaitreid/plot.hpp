#pragma once

#include <string>
#include <vector>

#include "gaitreid/image.hpp"

namespace gaitreid {

struct Series {
  std::string label;
  std::vector<double> x, y;
};

// Line chart rendered with the built-in 5x7 font; deterministic output.
ImageU8 render_line_plot(const std::vector<Series>& series, const std::string& title,
                         const std::string& xlabel, const std::string& ylabel,
                         int width = 640, int height = 440);

// Writes <path> (PNG) and the underlying data next to it as <path>.csv.
void write_line_plot(const std::vector<Series>& series, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::string& path);

void draw_text(ImageU8& img, int x, int y, const std::string& text,
               const std::uint8_t rgb[3], int scale = 1);

}  // namespace gaitreid
