#pragma once

#include "d2im/fields.hpp"
#include "d2im/geometry.hpp"
#include "d2im/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace d2im {

/// Points with optional unit normals (empty `normals` means none).
struct PointSet {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  std::size_t size() const { return points.size(); }
  bool has_normals() const { return !normals.empty(); }
  /// Throws UsageError on a size mismatch or a non-unit normal.
  void validate() const;
  PointSet subset(const std::vector<std::size_t>& rows) const;
};

/// Area-uniform samples on the mesh surface carrying the face normal of the
/// triangle they fall on. Degenerate triangles are never chosen.
PointSet sample_surface(const TriMesh& mesh, std::size_t count, std::uint64_t seed);

/// Symmetric chamfer distance: the mean nearest-neighbor distance from a to b
/// and from b to a, summed and halved. Throws UsageError on an empty set.
double chamfer_l1(const std::vector<Vec3>& a, const std::vector<Vec3>& b);
double chamfer_l1(const PointSet& a, const PointSet& b);
double chamfer_l1_2d(const std::vector<Vec2>& a, const std::vector<Vec2>& b);

/// Occupancy IoU on the n^3 voxel centers -0.5 + (i + 0.5) / n; a point is
/// occupied when the field is negative. An empty union counts as 1.
double iou(const ScalarField& a, const ScalarField& b, int n = 32);

/// sigma_i = min |n_i . n_j| over the k nearest neighbors j != i.
std::vector<double> edgeness(const PointSet& p, int k = 10);
/// O(n^2) reference for edgeness(); same neighbor tie-breaking (lower index first).
std::vector<double> edgeness_brute_force(const PointSet& p, int k = 10);
/// Rows with sigma < threshold.
std::vector<std::size_t> edge_rows(const std::vector<double>& sigma, double threshold = 0.8);

/// Chamfer distance between edge subsets, or the "no edges" outcome.
struct EdgeChamfer {
  std::optional<double> value;
  bool has_edges() const { return value.has_value(); }
};

EdgeChamfer ecd3d(const PointSet& gt, const PointSet& rec, int k = 10, double threshold = 0.8);

/// Single-channel image, row-major, x fastest.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}
  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Luminance (Rec. 601) of the (N + 1) / 2 color encoding; uncovered pixels are 0.
GrayImage normal_map_luminance(const NormalMap& map);

struct CannyParams {
  double sigma = 1.4;
  double low = 0.1;  // fraction of the largest gradient magnitude in the image
  double high = 0.2;

  bool operator==(const CannyParams&) const = default;
};

/// Binary edge mask (1 = edge), same layout as the image. Gaussian blur,
/// Sobel gradients normalized by their image maximum, non-maximum suppression
/// along the gradient direction quantized to 45 degrees, and hysteresis over
/// 8-connected neighbors. Throws UsageError when low >= high.
std::vector<std::uint8_t> canny(const GrayImage& image, const CannyParams& params = {});

/// Pixel-center coordinates of the set entries of an edge mask.
std::vector<Vec2> edge_pixels(const std::vector<std::uint8_t>& mask, int width, int height);

EdgeChamfer ecd2d(const NormalMap& gt, const NormalMap& rec, const CannyParams& params = {});
EdgeChamfer ecd2d(const TriMesh& gt, const TriMesh& rec, const Camera& camera,
                  const CannyParams& params = {});

struct MetricParams {
  std::size_t point_count = 20000;
  int iou_resolution = 32;
  int edge_neighbors = 10;
  double edge_threshold = 0.8;
  CannyParams canny;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const MetricParams&) const = default;
};

struct MetricReport {
  double cd = 0.0;
  double iou = 0.0;
  EdgeChamfer ecd3d;
  EdgeChamfer ecd2d;
  MetricParams params;
};

/// All four measures for a reconstruction against its ground truth. IoU uses
/// exact mesh signed distances for both meshes. Throws Error when either mesh
/// is empty.
MetricReport evaluate_meshes(const TriMesh& gt, const TriMesh& rec, const Camera& camera,
                             const MetricParams& params = {});

} // namespace d2im
