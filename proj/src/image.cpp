#include "elastica/image.hpp"

#include "elastica/error.hpp"

#include <cmath>
#include <numbers>

namespace elastica {

Image Image::gray(int width, int height, double fill) {
  Image img;
  img.width = width;
  img.height = height;
  img.channels = 1;
  img.data.assign(static_cast<std::size_t>(width) * height, fill);
  return img;
}

Image Image::color(int width, int height) {
  Image img;
  img.width = width;
  img.height = height;
  img.channels = 3;
  img.data.assign(static_cast<std::size_t>(width) * height * 3, 0.0);
  return img;
}

std::vector<double> Image::plane(int c) const {
  std::vector<double> out(pixels());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = data[n * channels + c];
  return out;
}

void Image::validate() const {
  if (width < 2 || height < 2) fail(ErrorKind::InvalidArgument, "image must be at least 2x2");
  if (channels != 1 && channels != 3) fail(ErrorKind::InvalidArgument, "image must have 1 or 3 channels");
  if (data.size() != pixels() * channels) fail(ErrorKind::DimensionMismatch, "image buffer size mismatch");
  for (double v : data) {
    if (!std::isfinite(v)) fail(ErrorKind::InvalidArgument, "image contains non-finite samples");
  }
}

double gaussian_derivative(double sigma, int order, double t) {
  // G^(n)(t) = (-1/sigma)^n He_n(t/sigma) G(t), probabilists' Hermite polynomials.
  const double z = t / sigma;
  double he_prev = 1.0;
  double he = z;
  if (order == 0) he = 1.0;
  for (int n = 1; n < order; ++n) {
    const double next = z * he - n * he_prev;
    he_prev = he;
    he = next;
  }
  const double g = std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
  return (order % 2 ? -1.0 : 1.0) * std::pow(sigma, -order) * he * g;
}

std::vector<double> gaussian_derivative_kernel(double sigma, int order, double truncate) {
  require(sigma > 0.0, "sigma must be positive");
  require(order >= 0, "derivative order must be nonnegative");
  const int r = static_cast<int>(std::ceil(truncate * sigma));
  std::vector<double> k(2 * r + 1);
  for (int t = -r; t <= r; ++t) k[t + r] = gaussian_derivative(sigma, order, t);
  return k;
}

int mirror_index(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

std::vector<double> convolve_separable(const std::vector<double>& in, int width, int height, const std::vector<double>& kx,
                                       const std::vector<double>& ky) {
  const int rx = static_cast<int>(kx.size() / 2);
  const int ry = static_cast<int>(ky.size() / 2);
  std::vector<double> tmp(in.size());
  for (int y = 0; y < height; ++y) {
    const double* row = in.data() + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      // Taps are paired around the centre so odd kernels cancel exactly on flat input.
      double s = kx[rx] * row[x];
      for (int t = 1; t <= rx; ++t) s += kx[rx + t] * row[mirror_index(x - t, width)] + kx[rx - t] * row[mirror_index(x + t, width)];
      tmp[static_cast<std::size_t>(y) * width + x] = s;
    }
  }
  std::vector<double> out(in.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double s = ky[ry] * tmp[static_cast<std::size_t>(y) * width + x];
      for (int t = 1; t <= ry; ++t) {
        s += ky[ry + t] * tmp[static_cast<std::size_t>(mirror_index(y - t, height)) * width + x] +
             ky[ry - t] * tmp[static_cast<std::size_t>(mirror_index(y + t, height)) * width + x];
      }
      out[static_cast<std::size_t>(y) * width + x] = s;
    }
  }
  return out;
}

}  // namespace elastica
