#pragma once

#include <cstdint>

#include "gaitreid/image.hpp"
#include "gaitreid/tensor.hpp"

namespace gaitreid {

inline constexpr int kGaitFrame = 64;  // canonical silhouette resolution

// Aspect-preserving resize to height 64, horizontally centered with zero
// padding. Output is exactly 64x64 with values in [0,1].
Tensor preprocess_mask(const ImageU8& mask);
Tensor preprocess_mask(const Tensor& mask);  // (h, w) values in [0,1]

// Brightness/contrast/saturation jitter applied only where mask > 0.5.
// strength in [0,1]; strength 0 returns the input untouched.
ImageU8 body_color_jitter(const ImageU8& rgb, const ImageU8& mask, double strength,
                          std::uint64_t seed);

}  // namespace gaitreid
