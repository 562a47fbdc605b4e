#include "d2im/fixtures.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace d2im::fixtures {

namespace {

// Appends a planar convex polygon as a fan, flipped so its normal points away from `inside`.
void add_polygon(TriMesh& mesh, const std::vector<std::int32_t>& poly, const Vec3& inside) {
  Vec3 centroid = Vec3::Zero();
  for (auto v : poly) {
    centroid += mesh.vertices[v];
  }
  centroid /= static_cast<double>(poly.size());
  const Vec3 n = (mesh.vertices[poly[1]] - mesh.vertices[poly[0]])
                     .cross(mesh.vertices[poly[2]] - mesh.vertices[poly[0]]);
  const bool flip = n.dot(centroid - inside) < 0.0;
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    if (flip) {
      mesh.triangles.push_back({poly[0], poly[k + 1], poly[k]});
    } else {
      mesh.triangles.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
}

void append(TriMesh& dst, const TriMesh& src) {
  const auto offset = static_cast<std::int32_t>(dst.vertices.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
  for (const auto& t : src.triangles) {
    dst.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
  }
}

} // namespace

TriMesh icosphere(double radius, int level) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh mesh;
  mesh.vertices = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                   {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                   {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  mesh.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                    {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                    {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                    {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& v : mesh.vertices) {
    v.normalize();
  }
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<std::int32_t, std::int32_t>, std::int32_t> midpoints;
    auto midpoint = [&](std::int32_t a, std::int32_t b) {
      const auto key = std::minmax(a, b);
      const auto it = midpoints.find(key);
      if (it != midpoints.end()) {
        return it->second;
      }
      mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
      const auto idx = static_cast<std::int32_t>(mesh.vertices.size() - 1);
      midpoints.emplace(key, idx);
      return idx;
    };
    std::vector<Triangle> next;
    next.reserve(mesh.triangles.size() * 4);
    for (const auto& t : mesh.triangles) {
      const auto ab = midpoint(t[0], t[1]);
      const auto bc = midpoint(t[1], t[2]);
      const auto ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.triangles = std::move(next);
  }
  for (auto& v : mesh.vertices) {
    v *= radius;
  }
  mesh.compute_normals();
  return mesh;
}

TriMesh box(const Vec3& min, const Vec3& max) {
  TriMesh mesh;
  for (int i = 0; i < 8; ++i) {
    mesh.vertices.emplace_back((i & 1) ? max.x() : min.x(), (i & 2) ? max.y() : min.y(),
                               (i & 4) ? max.z() : min.z());
  }
  const Vec3 center = 0.5 * (min + max);
  for (int axis = 0; axis < 3; ++axis) {
    const int b = (axis + 1) % 3;
    const int c = (axis + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      const int base = side << axis;
      add_polygon(mesh,
                  {base, base | (1 << b), base | (1 << b) | (1 << c), base | (1 << c)},
                  center);
    }
  }
  mesh.compute_normals();
  return mesh;
}

TriMesh beveled_cube(double half, double bevel) {
  TriMesh mesh;
  // Vertex of corner `signs` (bit k set = +) lying on the face normal to `axis`.
  auto vertex_id = [](int signs, int axis) { return signs * 3 + axis; };
  for (int signs = 0; signs < 8; ++signs) {
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 p;
      for (int k = 0; k < 3; ++k) {
        const double s = (signs >> k) & 1 ? 1.0 : -1.0;
        p[k] = s * (k == axis ? half : half - bevel);
      }
      mesh.vertices.push_back(p);
    }
  }
  const Vec3 center = Vec3::Zero();
  for (int axis = 0; axis < 3; ++axis) {
    const int b = (axis + 1) % 3;
    const int c = (axis + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      const int base = side << axis;
      add_polygon(mesh,
                  {vertex_id(base, axis), vertex_id(base | (1 << b), axis),
                   vertex_id(base | (1 << b) | (1 << c), axis), vertex_id(base | (1 << c), axis)},
                  center);
    }
    // Bevel strips along `axis`, one per (b, c) sign pair.
    for (int sb = 0; sb < 2; ++sb) {
      for (int sc = 0; sc < 2; ++sc) {
        const int lo = (sb << b) | (sc << c);
        const int hi = lo | (1 << axis);
        add_polygon(mesh, {vertex_id(lo, b), vertex_id(hi, b), vertex_id(hi, c), vertex_id(lo, c)},
                    center);
      }
    }
  }
  for (int signs = 0; signs < 8; ++signs) {
    add_polygon(mesh, {vertex_id(signs, 0), vertex_id(signs, 1), vertex_id(signs, 2)}, center);
  }
  mesh.compute_normals();
  return mesh;
}

TriMesh thin_slab_beside_block() {
  TriMesh mesh = box(Vec3(-0.35, -0.3, -0.3), Vec3(-0.05, 0.3, 0.3));
  append(mesh, box(Vec3(0.10, -0.3, -0.3), Vec3(0.12, 0.3, 0.3)));
  mesh.compute_normals();
  return mesh;
}

TriMesh plate(double half_xy, double half_z, int subdivisions,
              const std::function<double(double, double)>& height) {
  require(subdivisions >= 1, "plate: subdivisions must be >= 1");
  TriMesh mesh;
  const int n = subdivisions;
  const int stride = n + 1;
  auto coord = [&](int i) { return -half_xy + 2.0 * half_xy * i / n; };
  for (int layer = 0; layer < 2; ++layer) {
    for (int j = 0; j <= n; ++j) {
      for (int i = 0; i <= n; ++i) {
        const double x = coord(i);
        const double y = coord(j);
        const double z = layer == 0 ? half_z + height(x, y) : -half_z;
        mesh.vertices.emplace_back(x, y, z);
      }
    }
  }
  auto front = [&](int i, int j) { return j * stride + i; };
  auto back = [&](int i, int j) { return stride * stride + j * stride + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      // Counter-clockwise seen from +z for the front, reversed for the back.
      mesh.triangles.push_back({front(i, j), front(i + 1, j), front(i + 1, j + 1)});
      mesh.triangles.push_back({front(i, j), front(i + 1, j + 1), front(i, j + 1)});
      mesh.triangles.push_back({back(i, j), back(i + 1, j + 1), back(i + 1, j)});
      mesh.triangles.push_back({back(i, j), back(i, j + 1), back(i + 1, j + 1)});
    }
  }
  // Rim walked counter-clockwise seen from +z; side quads face outward.
  std::vector<std::pair<int, int>> rim;
  for (int i = 0; i < n; ++i) rim.emplace_back(i, 0);
  for (int j = 0; j < n; ++j) rim.emplace_back(n, j);
  for (int i = n; i > 0; --i) rim.emplace_back(i, n);
  for (int j = n; j > 0; --j) rim.emplace_back(0, j);
  for (std::size_t k = 0; k < rim.size(); ++k) {
    const auto [i0, j0] = rim[k];
    const auto [i1, j1] = rim[(k + 1) % rim.size()];
    mesh.triangles.push_back({front(i0, j0), back(i0, j0), back(i1, j1)});
    mesh.triangles.push_back({front(i0, j0), back(i1, j1), front(i1, j1)});
  }
  mesh.compute_normals();
  return mesh;
}

double bump_height(double x, double y) {
  const double w = kBumpFrequency * std::numbers::pi;
  return kBumpAmplitude * std::sin(w * x) * std::sin(w * y);
}

TriMesh flat_plate(int subdivisions) {
  return plate(kPlateHalfXY, kPlateHalfZ, subdivisions, [](double, double) { return 0.0; });
}

TriMesh bumpy_plate(int subdivisions) {
  return plate(kPlateHalfXY, kPlateHalfZ, subdivisions, bump_height);
}

std::vector<std::pair<std::string, TriMesh>> canonical_set() {
  std::vector<std::pair<std::string, TriMesh>> set;
  set.emplace_back("icosphere", icosphere());
  set.emplace_back("cube", box(Vec3::Constant(-0.25), Vec3::Constant(0.25)));
  set.emplace_back("thin_slab", thin_slab_beside_block());
  set.emplace_back("flat_plate", flat_plate());
  set.emplace_back("bumpy_plate", bumpy_plate());
  set.emplace_back("beveled_cube", beveled_cube());
  return set;
}

TriMesh by_name(const std::string& name) {
  if (name == "icosphere" || name == "sphere") return icosphere();
  if (name == "cube") return box(Vec3::Constant(-0.25), Vec3::Constant(0.25));
  if (name == "thin_slab") return thin_slab_beside_block();
  if (name == "flat_plate") return flat_plate();
  if (name == "bumpy_plate") return bumpy_plate();
  if (name == "beveled_cube") return beveled_cube();
  throw UsageError("unknown fixture '" + name + "'");
}

} // namespace d2im::fixtures
