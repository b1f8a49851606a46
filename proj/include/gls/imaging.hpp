#pragma once

#include <cstdint>
#include <string>

#include "gls/instance.hpp"

namespace gls {

// Grid of intensities in [0, 1], row-major, channels interleaved.
struct Image {
  int width = 0, height = 0, channels = 1;
  Vec data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(std::size_t(w) * h * c, fill) {}
  double& at(int x, int y, int c = 0) {
    return data[(std::size_t(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c = 0) const {
    return data[(std::size_t(y) * width + x) * channels + c];
  }
  std::size_t pixels() const { return std::size_t(width) * height; }
};

enum class TvMode { anisotropic, isotropic };

// Smoothness groups of the total-variation model over a single-channel
// image; variables are pixels, each group's matrix carries lambda^2 so its
// norm scales by lambda. Anisotropic: one group per grid edge. Isotropic:
// one group per pixel holding its right and down differences. No fidelity
// term; callers add it (squared form via l22_fidelity_solve, or an identity
// group for the plain-norm form).
Instance grid_instance(const Image& img, TvMode mode, double lambda);

// Multichannel variant: variables are (pixel, channel) in channel-planar
// layout; each inter-pixel group spans the channel edges. Edge weights are
// calibrated so that an image with identical channels reduces exactly to the
// single-channel model under the chosen fidelity form.
Instance multichannel_grid_instance(const Image& img, TvMode mode, double lambda,
                                    bool sqrt_fidelity);

struct DenoiseOptions {
  SolverChoice solver;
  bool sqrt_fidelity = false;  // fidelity as a plain-norm group instead of L2^2
  double search_tol = 1e-3;    // ternary-search bracket tolerance
};

Image denoise(const Image& img, TvMode mode, double lambda, const DenoiseOptions& opt = {},
              Solution* info = nullptr);
Image denoise_multichannel(const Image& img, TvMode mode, double lambda,
                           const DenoiseOptions& opt = {}, Solution* info = nullptr);

// Gradient-domain blend: copies the source gradient field into the masked
// region of dst, pinning the boundary to dst values; one linear solve per
// channel. mask is a single-channel image aligned with src; offset places
// mask/src coordinates into dst.
Image poisson_blend(const Image& src, const Image& dst, const Image& mask, int offset_x,
                    int offset_y);

// Netpbm P2/P3 (ASCII) and P5/P6 (binary), maxval <= 65535, big-endian
// 16-bit rasters above 255.
Image read_netpbm(const std::string& bytes);
std::string write_netpbm(const Image& img, int format, int maxval = 255);

// Deterministic piecewise-constant test pattern and seeded Gaussian noise.
Image synthetic_test_image(int width, int height);
void add_gaussian_noise(Image& img, double sigma, std::uint64_t seed);

}  // namespace gls
