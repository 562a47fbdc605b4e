#include "d2im/laplacian_loss.hpp"

#include <algorithm>
#include <cmath>

namespace d2im {

std::optional<double> GtLaplacianMap::sample(const Vec2& u) const {
  const double mx = u.x() - 0.5;
  const double my = u.y() - 0.5;
  if (!(mx >= 0.0 && my >= 0.0 && mx <= width - 1.0 && my <= height - 1.0)) {
    return std::nullopt;
  }
  const int x0 = std::min(static_cast<int>(mx), width - 2);
  const int y0 = std::min(static_cast<int>(my), height - 2);
  const double tx = mx - x0;
  const double ty = my - y0;
  const std::size_t i00 = index(x0, y0);
  const std::size_t i10 = i00 + 1;
  const std::size_t i01 = i00 + width;
  const std::size_t i11 = i01 + 1;
  if (!mask[i00] || !mask[i10] || !mask[i01] || !mask[i11]) {
    return std::nullopt;
  }
  return (1 - tx) * (1 - ty) * data[i00] + tx * (1 - ty) * data[i10] + (1 - tx) * ty * data[i01] +
         tx * ty * data[i11];
}

ProjectedGradientMap projected_gradient(const NormalMap& normals, const Camera& camera) {
  camera.validate();
  ProjectedGradientMap out;
  out.width = normals.width;
  out.height = normals.height;
  out.data.assign(normals.normals.size(), Vec2::Zero());
  out.mask = normals.mask;
  // Orthographic: dp'/du_x = (1/s, 0, 0), dp'/du_y = (0, 1/s, 0).
  const double inv = camera.inverse_scale();
  for (std::size_t i = 0; i < normals.normals.size(); ++i) {
    if (out.mask[i]) {
      out.data[i] = Vec2(normals.normals[i].x(), normals.normals[i].y()) * inv;
    }
  }
  return out;
}

GtLaplacianMap gt_laplacian(const ProjectedGradientMap& g) {
  GtLaplacianMap out;
  out.width = g.width;
  out.height = g.height;
  out.data.assign(static_cast<std::size_t>(g.width) * g.height, 0.0);
  out.mask.assign(out.data.size(), 0);
  for (int y = 1; y + 1 < g.height; ++y) {
    for (int x = 1; x + 1 < g.width; ++x) {
      const std::size_t c = g.index(x, y);
      const std::size_t l = c - 1;
      const std::size_t r = c + 1;
      const std::size_t d = c - g.width;
      const std::size_t u = c + g.width;
      if (!g.mask[c] || !g.mask[l] || !g.mask[r] || !g.mask[d] || !g.mask[u]) {
        continue;
      }
      out.data[c] = 0.5 * (g.data[r].x() - g.data[l].x()) + 0.5 * (g.data[u].y() - g.data[d].y());
      out.mask[c] = 1;
    }
  }
  return out;
}

std::optional<double> map_laplacian(const DisplacementMap& map, const Vec2& u) {
  return map.laplacian(u);
}

double loss_base(const BaseField& base, const SampleBatch& batch) {
  require(batch.size() > 0, "loss_base: empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double r = base.query(batch.points[i]) - batch.values[i];
    sum += r * r;
  }
  return sum / static_cast<double>(batch.size());
}

double loss_sdf(const DisentangledField& field, const SampleBatch& batch) {
  require(batch.size() > 0, "loss_sdf: empty batch");
  require(batch.front_mask.size() == batch.size(), "loss_sdf: batch has no front mask");
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    sum += std::abs(fuse(field, batch.points[i], batch.front_mask[i] != 0) - batch.values[i]);
  }
  return sum / static_cast<double>(batch.size());
}

LaplacianLoss loss_lap(const DisplacementMap& front, const GtLaplacianMap& gtl,
                       const SampleBatch& batch, const Camera& camera, bool rescale) {
  const double scale = rescale ? camera.pixel_scale * camera.pixel_scale : 1.0;
  LaplacianLoss out;
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch.front_mask[i]) {
      continue;
    }
    const Vec2 u = camera.project(batch.points[i]);
    const auto predicted = front.laplacian(u);
    const auto target = gtl.sample(u);
    if (!predicted || !target) {
      continue;
    }
    const double r = scale * (*predicted - *target);
    sum += r * r;
    ++out.count;
  }
  if (out.count > 0) {
    out.value = sum / static_cast<double>(out.count);
    out.empty = false;
  }
  return out;
}

} // namespace d2im
