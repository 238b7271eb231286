#pragma once

#include "elastica/grid.hpp"

#include <vector>

namespace elastica {

/// Gray (1 channel) or color (3 channels) image with values in [0, 1].
/// Samples are interleaved: data[(y * width + x) * channels + c].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;

  static Image gray(int width, int height, double fill = 0.0);
  static Image color(int width, int height);

  double at(int x, int y, int c = 0) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  double& at(int x, int y, int c = 0) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }

  /// Row-major single-channel copy.
  std::vector<double> plane(int c) const;
  GridSpec2 grid(double spacing = 1.0) const { return {width, height, spacing}; }

  /// Checks dimensions, channel count and that samples are finite.
  void validate() const;
};

/// Sampled n-th derivative of the unit-mass Gaussian of standard deviation
/// sigma on [-R, R], R = ceil(truncate * sigma). Index t holds G^(n)(t - R).
std::vector<double> gaussian_derivative_kernel(double sigma, int order, double truncate = 4.0);

/// Value of the n-th derivative of the Gaussian at t.
double gaussian_derivative(double sigma, int order, double t);

/// out = (kx (x) ky) * in with half-sample mirror boundary; kernels are centred.
std::vector<double> convolve_separable(const std::vector<double>& in, int width, int height, const std::vector<double>& kx,
                                       const std::vector<double>& ky);

/// Mirror index into [0, n).
int mirror_index(int i, int n);

}  // namespace elastica
