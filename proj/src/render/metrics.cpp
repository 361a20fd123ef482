#include "flowsplat/metrics.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "flowsplat/error.hpp"

namespace flowsplat {

namespace {

void check_same_size(const Image& a, const Image& b, const char* what) {
  if (a.width != b.width || a.height != b.height)
    throw ValidationError(std::string(what) + ": image sizes differ (" + std::to_string(a.width) +
                          "x" + std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                          std::to_string(b.height) + ")");
}

std::vector<double> gaussian_window() {
  std::vector<double> w(kSsimWindow);
  const int r = kSsimWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - r;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_same_size(a, b, "psnr");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.pixels.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) {
  check_same_size(a, b, "ssim");
  if (a.width < kSsimWindow || a.height < kSsimWindow)
    throw ValidationError("ssim: images must be at least 11x11");
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const std::vector<double> w = gaussian_window();
  const int nx = a.width - kSsimWindow + 1;
  const int ny = a.height - kSsimWindow + 1;
  double total = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int y0 = 0; y0 < ny; ++y0)
      for (int x0 = 0; x0 < nx; ++x0) {
        double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
        for (int dy = 0; dy < kSsimWindow; ++dy)
          for (int dx = 0; dx < kSsimWindow; ++dx) {
            const double k = w[static_cast<std::size_t>(dy)] * w[static_cast<std::size_t>(dx)];
            const double va = a.at(x0 + dx, y0 + dy, c);
            const double vb = b.at(x0 + dx, y0 + dy, c);
            ma += k * va;
            mb += k * vb;
            saa += k * va * va;
            sbb += k * vb * vb;
            sab += k * va * vb;
          }
        const double var_a = saa - ma * ma;
        const double var_b = sbb - mb * mb;
        const double cov = sab - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
      }
  return total / (3.0 * nx * ny);
}

double dssim(const Image& a, const Image& b) { return 0.5 * (1.0 - ssim(a, b)); }

}  // namespace flowsplat
