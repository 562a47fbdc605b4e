#pragma once

#include "d2im/common.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

namespace d2im {

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Aabb& other) {
    min = min.cwiseMin(other.min);
    max = max.cwiseMax(other.max);
  }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  bool empty() const { return (max.array() < min.array()).any(); }
};

using Triangle = std::array<std::int32_t, 3>;

/// Indexed triangle mesh. `normals` are per-vertex, area weighted, derived from
/// the geometry by `compute_normals()`.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<Vec3> normals;

  bool empty() const { return triangles.empty(); }
  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }

  void compute_normals();
  /// Throws Error when an index is out of range.
  void validate() const;
  Aabb bounds() const;
  double area() const;
  Vec3 face_normal(std::size_t t) const; // unit, or zero for degenerate faces
  double face_area(std::size_t t) const;
};

/// ASCII OBJ. Polygons are fan triangulated; `v//vn`, `v/vt/vn` forms accepted.
TriMesh load_obj(const std::filesystem::path& path);
TriMesh parse_obj(const std::string& text);
void save_obj(const TriMesh& mesh, const std::filesystem::path& path);
std::string format_obj(const TriMesh& mesh);

/// Centers the bounding box at the origin and scales its largest side to `extent`.
TriMesh normalize(TriMesh mesh, double extent = 1.0);

/// True when every edge is shared by exactly two triangles with opposite orientation.
bool is_edge_manifold_closed(const TriMesh& mesh);

/// Orthographic camera. Camera space: p' = R p + t, the camera looks down -z'
/// so larger z' is closer to the viewer. Pixel coordinates
/// u = (p'_x, p'_y) * pixel_scale + (width, height) / 2; pixel (i, j) spans
/// [i, i+1) x [j, j+1) with its center at (i + 0.5, j + 0.5).
struct Camera {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double pixel_scale = 224.0;
  int width = 224;
  int height = 224;

  /// Identity pose that maps the [-0.5, 0.5]^2 box face onto the full image.
  static Camera front(int resolution = 224);
  /// Rotation about the world y axis by `radians`, otherwise like front().
  static Camera rotated_y(double radians, int resolution = 224);

  void validate() const;

  Vec3 camera_point(const Vec3& p) const { return rotation * p + translation; }
  Vec2 project(const Vec3& p) const;
  /// World point on the ray through pixel position u at camera depth z'.
  Vec3 unproject(const Vec2& u, double depth) const;
  /// World direction pointing from the scene towards the viewer (camera +z').
  Vec3 toward_viewer() const { return rotation.transpose() * Vec3::UnitZ(); }
  /// World direction of the viewing rays (camera -z').
  Vec3 ray_direction() const { return -toward_viewer(); }
  /// dp'/du for either image axis: the orthographic Jacobian is diag(1/pixel_scale).
  double inverse_scale() const { return 1.0 / pixel_scale; }
  Vec2 center() const { return {0.5 * width, 0.5 * height}; }

  bool operator==(const Camera& other) const = default;
};

/// Camera-space unit normals per pixel plus a coverage mask. Row-major, x fastest.
struct NormalMap {
  int width = 0;
  int height = 0;
  std::vector<Vec3> normals;
  std::vector<std::uint8_t> mask;

  NormalMap() = default;
  NormalMap(int w, int h)
      : width(w), height(h), normals(static_cast<std::size_t>(w) * h, Vec3::Zero()),
        mask(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  bool covered(int x, int y) const { return mask[index(x, y)] != 0; }
  const Vec3& at(int x, int y) const { return normals[index(x, y)]; }
};

struct RayHit {
  double t = 0.0;
  std::int32_t triangle = -1;
  double b1 = 0.0; // barycentric weight of the second corner
  double b2 = 0.0; // barycentric weight of the third corner
};

/// Where the closest point landed on its triangle; selects the pseudo-normal.
enum class Feature : std::uint8_t { face, edge01, edge12, edge20, vertex0, vertex1, vertex2 };

struct ClosestPoint {
  Vec3 point = Vec3::Zero();
  double distance_squared = std::numeric_limits<double>::infinity();
  std::int32_t triangle = -1;
  Feature feature = Feature::face;
};

/// Exact signed distance, closest point and ray queries against a triangle mesh.
///
/// A binary BVH (median split on the longest centroid axis) accelerates both
/// query kinds. The sign comes from angle-weighted pseudo-normals at the
/// closest feature, which is exact for closed, consistently oriented meshes.
/// Immutable after construction; all queries are safe to call concurrently.
class MeshSdf {
 public:
  explicit MeshSdf(TriMesh mesh, double crease_angle_degrees = 30.0);

  double signed_distance(const Vec3& p) const;
  double operator()(const Vec3& p) const { return signed_distance(p); }
  ClosestPoint closest_point(const Vec3& p) const;
  std::optional<RayHit> intersect(const Vec3& origin, const Vec3& direction) const;

  /// Shading normal at a ray hit: barycentric blend of the hit triangle's
  /// corner normals (vertex normals averaged over faces within the crease angle).
  Vec3 shading_normal(const RayHit& hit) const;

  const TriMesh& mesh() const { return mesh_; }

 private:
  struct Node {
    Aabb box;
    std::int32_t left = -1; // child index, or -1 for leaves
    std::int32_t right = -1;
    std::int32_t first = 0; // leaf range into order_
    std::int32_t count = 0;
  };

  std::int32_t build(std::int32_t first, std::int32_t count, std::vector<Vec3>& centroids);
  void build_pseudo_normals();
  void build_corner_normals(double crease_angle_degrees);

  TriMesh mesh_;
  std::vector<std::int32_t> order_;
  std::vector<Node> nodes_;
  std::vector<Vec3> face_normals_;
  std::vector<std::array<Vec3, 3>> edge_normals_;
  std::vector<Vec3> vertex_normals_;
  std::vector<std::array<Vec3, 3>> corner_normals_;
};

/// Closest point on triangle (a, b, c) to p, reporting the feature it lies on.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                               Feature& feature);

/// One orthographic ray per pixel center along the camera -z' axis.
NormalMap render_normal_map(const MeshSdf& mesh, const Camera& camera);
NormalMap render_normal_map(const TriMesh& mesh, const Camera& camera);

} // namespace d2im
