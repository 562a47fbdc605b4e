#pragma once

#include "d2im/fields.hpp"
#include "d2im/geometry.hpp"
#include "d2im/sampling.hpp"

#include <optional>
#include <vector>

namespace d2im {

/// Per-pixel N' = (N . dp'/du_x, N . dp'/du_y), the image-plane gradient of
/// the ground-truth SDF. Only meaningful where `mask` is set.
struct ProjectedGradientMap {
  int width = 0;
  int height = 0;
  std::vector<Vec2> data;
  std::vector<std::uint8_t> mask;

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

/// Ground-truth Laplacian l(u) on image pixels; the mask is the source mask
/// eroded by one pixel.
struct GtLaplacianMap {
  int width = 0;
  int height = 0;
  std::vector<double> data;
  std::vector<std::uint8_t> mask;

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  /// Bilinear sample between pixel centers; nullopt unless all four
  /// supporting pixels are in the mask.
  std::optional<double> sample(const Vec2& u) const;
};

ProjectedGradientMap projected_gradient(const NormalMap& normals, const Camera& camera);

/// Divergence of N' by central differences on the pixel grid.
GtLaplacianMap gt_laplacian(const ProjectedGradientMap& gradient);

/// Laplacian of the displacement map at image position u (see DisplacementMap::laplacian).
std::optional<double> map_laplacian(const DisplacementMap& map, const Vec2& u);

struct LossReport {
  double l_base = 0.0;
  double l_sdf = 0.0;
  double l_lap = 0.0;
  double lambda = 1.0;
  double total = 0.0;

  static LossReport make(double l_base, double l_sdf, double l_lap, double lambda) {
    return {l_base, l_sdf, l_lap, lambda, l_base + l_sdf + lambda * l_lap};
  }
};

/// Mean squared error of base queries against the batch values.
double loss_base(const BaseField& base, const SampleBatch& batch);

/// Mean absolute error of fused values, branch chosen by batch.front_mask.
double loss_sdf(const DisentangledField& field, const SampleBatch& batch);

struct LaplacianLoss {
  double value = 0.0;
  std::size_t count = 0; // |P_F| after masking
  bool empty = true;     // no usable front point; value is 0
};

/// Mean over usable front points of (lap f_DF(u) - l(u))^2. A point is usable
/// when it is front-masked, the map stencil fits, and gtl is defined at u.
/// With `rescale`, both Laplacians are multiplied by pixel_scale^2.
LaplacianLoss loss_lap(const DisplacementMap& front, const GtLaplacianMap& gtl,
                       const SampleBatch& batch, const Camera& camera, bool rescale);

} // namespace d2im
