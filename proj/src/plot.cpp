#include "gaitreid/plot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

namespace gaitreid {

namespace {

// 5x7 glyphs, one byte per row, low 5 bits used (MSB of the 5 = left column).
const std::map<char, std::array<std::uint8_t, 7>>& font() {
  static const std::map<char, std::array<std::uint8_t, 7>> f = {
      {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
      {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
      {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
      {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
      {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
      {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
      {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
      {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
      {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
      {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
      {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
      {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
      {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
      {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
      {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
      {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
      {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
      {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
      {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
      {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
      {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
      {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
      {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
      {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
      {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
      {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x1B, 0x11}},
      {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
      {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
      {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
      {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
      {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
      {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
      {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
      {'%', {0x19, 0x1A, 0x02, 0x04, 0x08, 0x0B, 0x13}},
      {'/', {0x01, 0x02, 0x02, 0x04, 0x08, 0x08, 0x10}},
      {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
      {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
      {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
      {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
      {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
  };
  return f;
}

void put_px(ImageU8& img, int x, int y, const std::uint8_t rgb[3]) {
  if (x < 0 || y < 0 || x >= img.w || y >= img.h) return;
  for (int c = 0; c < 3; ++c) img.at(y, x, c) = rgb[c];
}

void draw_line(ImageU8& img, double x0, double y0, double x1, double y1,
               const std::uint8_t rgb[3]) {
  const double dx = x1 - x0, dy = y1 - y0;
  const int steps = std::max(2, static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))) + 1);
  for (int i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / (steps - 1);
    put_px(img, static_cast<int>(std::lround(x0 + t * dx)),
           static_cast<int>(std::lround(y0 + t * dy)), rgb);
  }
}

const std::uint8_t kPalette[][3] = {
    {214, 69, 65}, {31, 119, 180}, {44, 160, 44}, {148, 103, 189},
    {255, 127, 14}, {23, 190, 207}, {140, 86, 75}, {127, 127, 127},
};

std::string format_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

void draw_text(ImageU8& img, int x, int y, const std::string& text,
               const std::uint8_t rgb[3], int scale) {
  const auto& f = font();
  int cx = x;
  for (char raw : text) {
    char ch = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
    auto it = f.find(ch);
    if (it == f.end()) it = f.find(' ');
    for (int row = 0; row < 7; ++row) {
      for (int col = 0; col < 5; ++col) {
        if (it->second[static_cast<std::size_t>(row)] & (1 << (4 - col))) {
          for (int sy = 0; sy < scale; ++sy)
            for (int sx = 0; sx < scale; ++sx)
              put_px(img, cx + col * scale + sx, y + row * scale + sy, rgb);
        }
      }
    }
    cx += 6 * scale;
  }
}

ImageU8 render_line_plot(const std::vector<Series>& series, const std::string& title,
                         const std::string& xlabel, const std::string& ylabel,
                         int width, int height) {
  if (series.empty()) throw std::invalid_argument("render_line_plot: no series");
  for (const auto& s : series) {
    if (s.x.empty() || s.x.size() != s.y.size())
      throw std::invalid_argument("render_line_plot: malformed series '" + s.label + "'");
  }
  ImageU8 img(3, height, width);
  std::fill(img.v.begin(), img.v.end(), 255);

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }

  const int left = 56, right = 16, top = 28, bottom = 40;
  const int pw = width - left - right, ph = height - top - bottom;
  const std::uint8_t black[3] = {0, 0, 0};
  const std::uint8_t grey[3] = {200, 200, 200};

  auto to_px = [&](double x, double y) {
    return std::pair<double, double>{
        left + (x - xmin) / (xmax - xmin) * pw,
        top + ph - (y - ymin) / (ymax - ymin) * ph,
    };
  };

  for (int i = 0; i <= 4; ++i) {  // grid + ticks
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    const auto [px0, py] = to_px(xmin, fy);
    draw_line(img, left, py, left + pw, py, grey);
    draw_text(img, 4, static_cast<int>(py) - 3, format_tick(fy), black);
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const auto [px, py1] = to_px(fx, ymin);
    draw_line(img, px, top, px, top + ph, grey);
    draw_text(img, static_cast<int>(px) - 8, top + ph + 6, format_tick(fx), black);
  }
  draw_line(img, left, top, left, top + ph, black);
  draw_line(img, left, top + ph, left + pw, top + ph, black);
  draw_text(img, left, 8, title, black);
  draw_text(img, left + pw / 2 - 3 * static_cast<int>(xlabel.size()), height - 14, xlabel, black);
  draw_text(img, 4, top - 12, ylabel, black);

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    const auto& s = series[si];
    for (std::size_t i = 0; i + 1 < s.x.size(); ++i) {
      const auto [x0, y0] = to_px(s.x[i], s.y[i]);
      const auto [x1, y1] = to_px(s.x[i + 1], s.y[i + 1]);
      draw_line(img, x0, y0, x1, y1, color);
    }
    if (s.x.size() == 1) {  // single-point series: mark the point
      const auto [x0, y0] = to_px(s.x[0], s.y[0]);
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx)
          put_px(img, static_cast<int>(x0) + dx, static_cast<int>(y0) + dy, color);
    }
    const int ly = top + 6 + 12 * static_cast<int>(si);
    draw_line(img, left + 8, ly + 3, left + 28, ly + 3, color);
    draw_text(img, left + 34, ly, s.label, black);
  }
  return img;
}

void write_line_plot(const std::vector<Series>& series, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::string& path) {
  write_png(path, render_line_plot(series, title, xlabel, ylabel));
  std::ofstream csv(path + ".csv");
  if (!csv) throw std::runtime_error("plot: cannot write '" + path + ".csv'");
  csv.precision(17);
  csv << "series,x,y\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      csv << s.label << "," << s.x[i] << "," << s.y[i] << "\n";
}

}  // namespace gaitreid
