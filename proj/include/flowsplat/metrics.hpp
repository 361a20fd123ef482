#pragma once

#include "flowsplat/render.hpp"

namespace flowsplat {

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

// 10 log10(1 / MSE) over all channels, capped at 99 dB. Throws
// ValidationError on a size mismatch.
double psnr(const Image& a, const Image& b);

// Gaussian-window SSIM (11 x 11, sigma 1.5, C1 = 0.01^2, C2 = 0.03^2) over
// every window that fits inside the image, averaged over windows and channels.
// Throws ValidationError on a size mismatch or when a side is below 11.
double ssim(const Image& a, const Image& b);
double dssim(const Image& a, const Image& b);

}  // namespace flowsplat
