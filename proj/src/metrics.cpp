#include "d2im/metrics.hpp"

#include "d2im/kdtree.hpp"
#include "d2im/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace d2im {

void PointSet::validate() const {
  if (normals.empty()) {
    return;
  }
  require(normals.size() == points.size(), "PointSet: normal count differs from point count");
  for (const auto& n : normals) {
    require(std::abs(n.norm() - 1.0) <= 1e-5, "PointSet: normals must be unit length");
  }
}

PointSet PointSet::subset(const std::vector<std::size_t>& rows) const {
  PointSet out;
  out.points.reserve(rows.size());
  for (std::size_t r : rows) {
    out.points.push_back(points.at(r));
    if (has_normals()) {
      out.normals.push_back(normals.at(r));
    }
  }
  return out;
}

PointSet sample_surface(const TriMesh& mesh, std::size_t count, std::uint64_t seed) {
  mesh.validate();
  require(count > 0, "sample_surface: count must be positive");
  std::vector<double> cumulative(mesh.triangle_count());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    total += mesh.face_area(t);
    cumulative[t] = total;
  }
  if (!(total > 0.0)) {
    throw Error("sample_surface: mesh has zero surface area");
  }
  Rng rng(seed);
  PointSet out;
  out.points.reserve(count);
  out.normals.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const double pick = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    std::size_t t = static_cast<std::size_t>(it - cumulative.begin());
    t = std::min(t, cumulative.size() - 1);
    while (mesh.face_area(t) == 0.0 && t > 0) {
      --t;
    }
    const auto& tri = mesh.triangles[t];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    out.points.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
    out.normals.push_back(mesh.face_normal(t));
  }
  return out;
}

namespace {

template <int D>
double directed_mean(const KdTree<D>& tree, const std::vector<Eigen::Matrix<double, D, 1>>& queries) {
  std::vector<double> dist(queries.size());
  parallel_for(queries.size(),
               [&](std::size_t i) { dist[i] = std::sqrt(tree.nearest(queries[i]).distance_squared); });
  double sum = 0.0;
  for (double d : dist) sum += d;
  return sum / static_cast<double>(queries.size());
}

template <int D>
double chamfer_impl(const std::vector<Eigen::Matrix<double, D, 1>>& a,
                    const std::vector<Eigen::Matrix<double, D, 1>>& b) {
  require(!a.empty() && !b.empty(), "chamfer_l1: point sets must be non-empty");
  const KdTree<D> tree_a(a);
  const KdTree<D> tree_b(b);
  return 0.5 * (directed_mean(tree_b, a) + directed_mean(tree_a, b));
}

} // namespace

double chamfer_l1(const std::vector<Vec3>& a, const std::vector<Vec3>& b) { return chamfer_impl<3>(a, b); }

double chamfer_l1(const PointSet& a, const PointSet& b) { return chamfer_l1(a.points, b.points); }

double chamfer_l1_2d(const std::vector<Vec2>& a, const std::vector<Vec2>& b) { return chamfer_impl<2>(a, b); }

double iou(const ScalarField& a, const ScalarField& b, int n) {
  require(n >= 1, "iou: resolution must be positive");
  const std::size_t plane = static_cast<std::size_t>(n) * n;
  std::vector<std::uint8_t> occ_a(plane * n);
  std::vector<std::uint8_t> occ_b(plane * n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const Vec3 p(kBoxMin + (i + 0.5) / n, kBoxMin + (j + 0.5) / n,
                     kBoxMin + (static_cast<double>(k) + 0.5) / n);
        const std::size_t idx = k * plane + static_cast<std::size_t>(j) * n + i;
        occ_a[idx] = a(p) < 0.0;
        occ_b[idx] = b(p) < 0.0;
      }
    }
  });
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < occ_a.size(); ++i) {
    inter += occ_a[i] & occ_b[i];
    uni += occ_a[i] | occ_b[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

void check_edgeness_input(const PointSet& p, int k) {
  require(k >= 1, "edgeness: k must be positive");
  require(p.has_normals(), "edgeness: normals required");
  require(p.size() > static_cast<std::size_t>(k), "edgeness: need more than k points");
  p.validate();
}

} // namespace

std::vector<double> edgeness(const PointSet& p, int k) {
  check_edgeness_input(p, k);
  const KdTree<3> tree(p.points);
  std::vector<double> sigma(p.size());
  parallel_for(p.size(), [&](std::size_t i) {
    double s = 1.0;
    for (const auto& nb : tree.knn(p.points[i], static_cast<std::size_t>(k), i)) {
      s = std::min(s, std::abs(p.normals[i].dot(p.normals[nb.index])));
    }
    sigma[i] = s;
  });
  return sigma;
}

std::vector<double> edgeness_brute_force(const PointSet& p, int k) {
  check_edgeness_input(p, k);
  std::vector<double> sigma(p.size());
  parallel_for(p.size(), [&](std::size_t i) {
    std::vector<std::pair<double, std::size_t>> all;
    all.reserve(p.size() - 1);
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (j != i) {
        all.emplace_back((p.points[j] - p.points[i]).squaredNorm(), j);
      }
    }
    std::partial_sort(all.begin(), all.begin() + k, all.end());
    double s = 1.0;
    for (int r = 0; r < k; ++r) {
      s = std::min(s, std::abs(p.normals[i].dot(p.normals[all[r].second])));
    }
    sigma[i] = s;
  });
  return sigma;
}

std::vector<std::size_t> edge_rows(const std::vector<double>& sigma, double threshold) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i] < threshold) {
      rows.push_back(i);
    }
  }
  return rows;
}

EdgeChamfer ecd3d(const PointSet& gt, const PointSet& rec, int k, double threshold) {
  const PointSet e_gt = gt.subset(edge_rows(edgeness(gt, k), threshold));
  const PointSet e_rec = rec.subset(edge_rows(edgeness(rec, k), threshold));
  if (e_gt.size() == 0 || e_rec.size() == 0) {
    return {};
  }
  return {chamfer_l1(e_gt, e_rec)};
}

GrayImage normal_map_luminance(const NormalMap& map) {
  GrayImage img(map.width, map.height, 0.0);
  for (std::size_t i = 0; i < map.normals.size(); ++i) {
    if (!map.mask[i]) {
      continue;
    }
    const Vec3 rgb = 0.5 * (map.normals[i] + Vec3::Ones());
    img.pixels[i] = 0.299 * rgb.x() + 0.587 * rgb.y() + 0.114 * rgb.z();
  }
  return img;
}

namespace {

GrayImage gaussian_blur(const GrayImage& in, double sigma) {
  if (sigma <= 0.0) {
    return in;
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int d = -radius; d <= radius; ++d) {
    kernel[d + radius] = std::exp(-0.5 * d * d / (sigma * sigma));
    total += kernel[d + radius];
  }
  for (auto& w : kernel) w /= total;

  const int w = in.width;
  const int h = in.height;
  auto clamp_x = [w](int x) { return std::clamp(x, 0, w - 1); };
  auto clamp_y = [h](int y) { return std::clamp(y, 0, h - 1); };
  GrayImage tmp(w, h);
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int d = -radius; d <= radius; ++d) s += kernel[d + radius] * in.at(clamp_x(x + d), y);
      tmp.at(x, y) = s;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int d = -radius; d <= radius; ++d) s += kernel[d + radius] * tmp.at(x, clamp_y(y + d));
      out.at(x, y) = s;
    }
  }
  return out;
}

} // namespace

std::vector<std::uint8_t> canny(const GrayImage& image, const CannyParams& params) {
  require(params.low < params.high, "canny: low threshold must be below high threshold");
  require(params.sigma >= 0.0, "canny: sigma must be non-negative");
  require(image.width >= 1 && image.height >= 1 &&
              image.pixels.size() == static_cast<std::size_t>(image.width) * image.height,
          "canny: malformed image");
  const int w = image.width;
  const int h = image.height;
  const std::size_t n = image.pixels.size();
  std::vector<std::uint8_t> edges(n, 0);

  const GrayImage blurred = gaussian_blur(image, params.sigma);
  auto px = [&](int x, int y) { return blurred.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); };
  std::vector<double> gx(n);
  std::vector<double> gy(n);
  std::vector<double> mag(n);
  double max_mag = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      gx[i] = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
              (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
      gy[i] = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
              (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
      mag[i] = std::hypot(gx[i], gy[i]);
      max_mag = std::max(max_mag, mag[i]);
    }
  }
  if (max_mag <= 1e-12) {
    return edges;
  }
  for (auto& m : mag) m /= max_mag;

  // Non-maximum suppression. Ties along the gradient keep the pixel on the
  // negative side so a symmetric ridge yields a one pixel wide line.
  std::vector<double> thin(n, 0.0);
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double m = mag[i];
      if (m < params.low) {
        continue;
      }
      double angle = std::atan2(gy[i], gx[i]) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      int dx = 1;
      int dy = 0;
      if (angle >= 22.5 && angle < 67.5) {
        dx = 1;
        dy = 1;
      } else if (angle >= 67.5 && angle < 112.5) {
        dx = 0;
        dy = 1;
      } else if (angle >= 112.5 && angle < 157.5) {
        dx = -1;
        dy = 1;
      }
      const double ahead = mag[static_cast<std::size_t>(y + dy) * w + (x + dx)];
      const double behind = mag[static_cast<std::size_t>(y - dy) * w + (x - dx)];
      if (m >= ahead && m > behind) {
        thin[i] = m;
      }
    }
  }

  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (thin[i] >= params.high) {
      edges[i] = 1;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(i % w);
    const int y = static_cast<int>(i / w);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
          continue;
        }
        const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
        if (!edges[j] && thin[j] >= params.low) {
          edges[j] = 1;
          stack.push_back(j);
        }
      }
    }
  }
  return edges;
}

std::vector<Vec2> edge_pixels(const std::vector<std::uint8_t>& mask, int width, int height) {
  require(mask.size() == static_cast<std::size_t>(width) * height, "edge_pixels: size mismatch");
  std::vector<Vec2> out;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (mask[static_cast<std::size_t>(y) * width + x]) {
        out.emplace_back(x + 0.5, y + 0.5);
      }
    }
  }
  return out;
}

EdgeChamfer ecd2d(const NormalMap& gt, const NormalMap& rec, const CannyParams& params) {
  require(gt.width == rec.width && gt.height == rec.height, "ecd2d: normal maps differ in size");
  const auto e_gt = edge_pixels(canny(normal_map_luminance(gt), params), gt.width, gt.height);
  const auto e_rec = edge_pixels(canny(normal_map_luminance(rec), params), rec.width, rec.height);
  if (e_gt.empty() || e_rec.empty()) {
    return {};
  }
  return {chamfer_l1_2d(e_gt, e_rec)};
}

EdgeChamfer ecd2d(const TriMesh& gt, const TriMesh& rec, const Camera& camera, const CannyParams& params) {
  return ecd2d(render_normal_map(gt, camera), render_normal_map(rec, camera), params);
}

void MetricParams::validate() const {
  require(point_count > static_cast<std::size_t>(edge_neighbors), "metrics: point_count must exceed edge_neighbors");
  require(iou_resolution >= 1, "metrics: iou_resolution must be positive");
  require(edge_neighbors >= 1, "metrics: edge_neighbors must be positive");
  require(canny.low < canny.high, "metrics: canny low threshold must be below high");
  require(canny.sigma >= 0.0, "metrics: canny sigma must be non-negative");
}

MetricReport evaluate_meshes(const TriMesh& gt, const TriMesh& rec, const Camera& camera,
                             const MetricParams& params) {
  params.validate();
  camera.validate();
  if (gt.empty()) {
    throw Error("evaluate: ground-truth mesh is empty");
  }
  if (rec.empty()) {
    throw Error("evaluate: reconstructed mesh is empty");
  }
  MetricReport report;
  report.params = params;
  const PointSet p_gt = sample_surface(gt, params.point_count, Rng::derive(params.seed, 1));
  const PointSet p_rec = sample_surface(rec, params.point_count, Rng::derive(params.seed, 1));
  report.cd = chamfer_l1(p_gt, p_rec);

  const MeshSdf sdf_gt(gt);
  const MeshSdf sdf_rec(rec);
  report.iou = iou([&](const Vec3& p) { return sdf_gt(p); }, [&](const Vec3& p) { return sdf_rec(p); },
                   params.iou_resolution);
  report.ecd3d = ecd3d(p_gt, p_rec, params.edge_neighbors, params.edge_threshold);
  report.ecd2d = ecd2d(render_normal_map(sdf_gt, camera), render_normal_map(sdf_rec, camera), params.canny);
  return report;
}

} // namespace d2im
