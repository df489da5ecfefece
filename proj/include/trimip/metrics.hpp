#pragma once

#include "trimip/image.hpp"

namespace trimip {

// 10*log10(1/MSE) over the RGB channels; +inf when identical.
// Throws on shape mismatch.
real psnr(const Image& a, const Image& b);

// Standard SSIM: 11x11 Gaussian window sigma=1.5, K1=0.01, K2=0.03, L=1,
// per-channel then averaged; windows are 'valid' (fully inside the image).
// Throws when the images are smaller than the window.
real ssim(const Image& a, const Image& b);

}  // namespace trimip
