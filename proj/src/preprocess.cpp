#include "gaitreid/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gaitreid/rng.hpp"

namespace gaitreid {

namespace {

// Exact box (area-average) resampling of one axis pair. Output cell (i,j)
// averages the input region it covers; scale 1 is the identity.
Tensor box_resize(const Tensor& in, int oh, int ow) {
  const int ih = in.dim(0), iw = in.dim(1);
  Tensor out({oh, ow});
  const double sy = static_cast<double>(ih) / oh;
  const double sx = static_cast<double>(iw) / ow;
  for (int oy = 0; oy < oh; ++oy) {
    const double y0 = oy * sy, y1 = (oy + 1) * sy;
    const int iy0 = static_cast<int>(std::floor(y0));
    const int iy1 = std::min(ih, static_cast<int>(std::ceil(y1)));
    for (int ox = 0; ox < ow; ++ox) {
      const double x0 = ox * sx, x1 = (ox + 1) * sx;
      const int ix0 = static_cast<int>(std::floor(x0));
      const int ix1 = std::min(iw, static_cast<int>(std::ceil(x1)));
      double acc = 0.0;
      for (int y = iy0; y < iy1; ++y) {
        const double wy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
        for (int x = ix0; x < ix1; ++x) {
          const double wx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
          acc += wy * wx * in.at2(y, x);
        }
      }
      out.at2(oy, ox) = acc / (sy * sx);
    }
  }
  return out;
}

}  // namespace

Tensor preprocess_mask(const Tensor& mask) {
  if (mask.rank() != 2)
    throw std::invalid_argument("preprocess_mask: expected a (h, w) grid, got " +
                                mask.shape_str());
  const int h = mask.dim(0), w = mask.dim(1);
  if (h <= 0 || w <= 0)
    throw std::invalid_argument("preprocess_mask: degenerate input dimension");
  int cw = static_cast<int>(std::lround(static_cast<double>(w) * kGaitFrame / h));
  cw = std::clamp(cw, 1, kGaitFrame);
  const Tensor content = box_resize(mask, kGaitFrame, cw);
  Tensor out({kGaitFrame, kGaitFrame});
  const int x0 = (kGaitFrame - cw) / 2;
  for (int y = 0; y < kGaitFrame; ++y)
    for (int x = 0; x < cw; ++x) {
      double v = content.at2(y, x);
      out.at2(y, x0 + x) = std::clamp(v, 0.0, 1.0);
    }
  return out;
}

Tensor preprocess_mask(const ImageU8& mask) {
  if (mask.channels != 1)
    throw std::invalid_argument("preprocess_mask: mask must be single-channel");
  Tensor t({mask.h, mask.w});
  for (int y = 0; y < mask.h; ++y)
    for (int x = 0; x < mask.w; ++x) t.at2(y, x) = mask.at(y, x, 0) / 255.0;
  return preprocess_mask(t);
}

ImageU8 body_color_jitter(const ImageU8& rgb, const ImageU8& mask, double strength,
                          std::uint64_t seed) {
  if (rgb.channels != 3 || mask.channels != 1 || rgb.h != mask.h || rgb.w != mask.w)
    throw std::invalid_argument("body_color_jitter: rgb and mask must be registered");
  if (strength < 0.0 || strength > 1.0)
    throw std::invalid_argument("body_color_jitter: strength must be in [0,1]");
  if (strength == 0.0) return rgb;

  Rng rng(seed);
  const double brightness = rng.uniform(std::max(0.0, 1.0 - strength), 1.0 + strength);
  const double contrast = rng.uniform(std::max(0.0, 1.0 - strength), 1.0 + strength);
  const double saturation = rng.uniform(std::max(0.0, 1.0 - strength), 1.0 + strength);

  ImageU8 out = rgb;
  for (int y = 0; y < rgb.h; ++y) {
    for (int x = 0; x < rgb.w; ++x) {
      if (mask.at(y, x, 0) <= 127) continue;  // mask <= 0.5 stays untouched
      double c[3];
      for (int i = 0; i < 3; ++i) c[i] = rgb.at(y, x, i) / 255.0;
      for (double& v : c) v *= brightness;
      for (double& v : c) v = 0.5 + (v - 0.5) * contrast;
      const double lum = 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
      for (double& v : c) v = lum + (v - lum) * saturation;
      for (int i = 0; i < 3; ++i)
        out.at(y, x, i) = static_cast<std::uint8_t>(
            std::lround(std::clamp(c[i], 0.0, 1.0) * 255.0));
    }
  }
  return out;
}

}  // namespace gaitreid
