#pragma once

#include "elastica/grid.hpp"
#include "elastica/image.hpp"

#include <Eigen/Core>

#include <array>
#include <string>
#include <vector>

namespace elastica {

enum class ResponseKind { EdgeH, FluxG };
const char* to_string(ResponseKind kind);

/// Orientation-dependent response on a lifted grid, laid out like the lifted
/// lattice (orientation layer outermost). theta_k = k * 2pi / n_theta.
struct OrientedResponse {
  GridSpec3 grid;
  ResponseKind kind = ResponseKind::EdgeH;
  std::vector<double> samples;

  double at(int i, int j, int k) const {
    return samples[(static_cast<std::size_t>(k) * grid.base.height + j) * grid.base.width + i];
  }
  double max() const;
};

/// Weights of the oriented template
///   a10 du + a30 du^3 + a32 du dn^2 + a52 du^3 dn^2 + a54 du dn^4
/// applied to a Gaussian, du along u_theta = (cos, sin) and dn along its normal.
struct SteerableWeights {
  double a10 = 1.0;
  double a30 = 0.0;
  double a32 = 0.0;
  double a52 = 0.0;
  double a54 = 0.0;
};
SteerableWeights steerable_weights(int order, double sigma);

/// Coefficients c[a] of d_x^a d_y^(n-a) in the expansion of du^p dn^q,
/// n = p + q, at orientation theta.
std::vector<double> steering_coefficients(int p, int q, double theta);

/// Bank of separable Gaussian-derivative convolutions from which the
/// oriented template response is recombined at any angle.
class SteerableBank {
 public:
  SteerableBank(const Image& img, double sigma, int order);

  int order() const { return order_; }
  double sigma() const { return sigma_; }
  const SteerableWeights& weights() const { return weights_; }

  /// Signed response I_c * F_theta for one channel, row-major.
  std::vector<double> signed_response(int channel, double theta) const;
  /// Channel average of |I_c * F_theta|.
  std::vector<double> response(double theta) const;

 private:
  // basis_[c][n][a]: d_x^a d_y^(n-a) G * I_c, row-major.
  std::vector<std::array<std::vector<std::vector<double>>, 6>> basis_;
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  int order_ = 5;
  double sigma_ = 1.0;
  SteerableWeights weights_;
};

/// Edge response h(x, theta) for all n_theta orientations.
OrientedResponse steerable_edge_response(const Image& img, double sigma, int order = 5, int n_theta = 72);

/// Fraction of each pixel covered by the disk of radius r centred on pixel
/// (R, R); (2R+1)^2 row-major entries with R = ceil(r).
std::vector<double> disk_indicator(double r);

struct FluxResult {
  GridSpec2 grid;
  std::vector<double> radii;
  /// Q(x, r), indexed [r_index * pixels + y * width + x].
  std::vector<Eigen::Matrix2d> tensors;
  OrientedResponse g;
  std::vector<double> vesselness;
  std::vector<double> optimal_radius;
  std::vector<int> optimal_radius_index;

  const Eigen::Matrix2d& tensor(std::size_t r_index, int x, int y) const {
    return tensors[r_index * grid.width * grid.height + static_cast<std::size_t>(y) * grid.width + x];
  }
};

/// Optimally oriented flux of the Gaussian-smoothed image through disks of the
/// given radii. Color images use the channel mean.
FluxResult oriented_flux(const Image& img, double sigma, const std::vector<double>& radii, int n_theta = 72);

struct SpeedField {
  GridSpec3 grid;
  std::vector<double> phi;
  double eta = 10.0;
  double p = 2.0;
};

/// phi(x, theta) = 1 + eta (resp(x, theta + pi/2) / max resp)^p.
SpeedField speed_function(const OrientedResponse& resp, double eta = 10.0, double p = 2.0);

/// Orientation in [0, pi) minimising the response at each pixel; ties go to
/// the smallest index. Row-major per pixel.
std::vector<double> optimal_orientation(const OrientedResponse& resp);

struct StructureTensor {
  GridSpec2 grid;
  std::vector<Eigen::Matrix2d> tensor;
  std::vector<double> phi1, phi2;  ///< phi1 <= phi2
  std::vector<Eigen::Vector2d> g1, g2;  ///< matching unit eigenvectors
};

/// Sum over channels of the outer products of the Gaussian-smoothed gradient.
StructureTensor color_structure_tensor(const Image& img, double sigma);

/// Isotropic cost (beta1 + beta2 (f / max f)^p)^-1 for a nonnegative feature f.
std::vector<double> ir_cost(const std::vector<double>& feature, double beta1 = 1.0, double beta2 = 20.0, double p = 2.0);

/// Exponent tau < 0 such that the largest eigenvalue ratio of the tensor field
/// equals `ratio`; 0 for a flat structure tensor.
double ar_tau_for_ratio(const StructureTensor& st, double ratio = 20.0);

/// exp(tau phi2) g1 g1^T + exp(tau phi1) g2 g2^T.
std::vector<Eigen::Matrix2d> ar_tensors(const StructureTensor& st, double tau);

}  // namespace elastica
